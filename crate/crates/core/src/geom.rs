//! Small fixed-size geometry: rotations, rigid transforms and the rotation
//! encodings accepted in pose data.

use nalgebra::{Matrix3, Vector3};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Rotation + translation acting as `x -> R x + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rigid {
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl Default for Rigid {
    fn default() -> Self {
        Self::identity()
    }
}

impl Rigid {
    pub fn identity() -> Self {
        Self {
            rotation: Mat3::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn new(rotation: Mat3, translation: Vec3) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn from_translation(translation: Vec3) -> Self {
        Self::new(Mat3::identity(), translation)
    }

    #[inline]
    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    /// `self ∘ other`: apply `other` first.
    #[inline]
    pub fn compose(&self, other: &Rigid) -> Rigid {
        Rigid {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    /// Inverse assuming `rotation` is orthonormal.
    #[inline]
    pub fn inverse(&self) -> Rigid {
        let rt = self.rotation.transpose();
        Rigid {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }
}

/// Frobenius norm of `RᵀR − I`.
pub fn orthonormality_error(m: &Mat3) -> f64 {
    (m.transpose() * m - Mat3::identity()).norm()
}

/// True when `m` is orthonormal with determinant +1, both within `tol`.
pub fn is_rotation(m: &Mat3, tol: f64) -> bool {
    m.iter().all(|v| v.is_finite())
        && orthonormality_error(m) <= tol
        && (m.determinant() - 1.0).abs() <= tol
}

/// Rodrigues formula.
pub fn axis_angle_to_matrix(aa: &Vec3) -> Mat3 {
    let theta = aa.norm();
    if theta < 1e-12 {
        // second-order expansion keeps the map smooth at zero
        let k = skew(aa);
        return Mat3::identity() + k + 0.5 * k * k;
    }
    let axis = aa / theta;
    let k = skew(&axis);
    Mat3::identity() + theta.sin() * k + (1.0 - theta.cos()) * k * k
}

/// Inverse of [`axis_angle_to_matrix`], angle in `[0, π]`.
pub fn matrix_to_axis_angle(r: &Mat3) -> Vec3 {
    let cos = ((r.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let angle = cos.acos();
    let w = Vec3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]);
    if angle < 1e-7 {
        return 0.5 * w;
    }
    if angle > std::f64::consts::FRAC_PI_2 {
        // the skew part shrinks toward π; the symmetric part
        // (R + Rᵀ)/2 − cos·I = (1 − cos)·aaᵀ keeps full precision
        let b = (r + r.transpose()) * 0.5 - Mat3::identity() * cos;
        let col = (0..3).max_by(|&a, &c| b[(a, a)].total_cmp(&b[(c, c)])).unwrap_or(0);
        let mut axis: Vec3 = b.column(col).into();
        axis /= axis.norm().max(1e-300);
        if axis.dot(&w) < 0.0 {
            axis = -axis;
        }
        return axis * angle;
    }
    w * (angle / (2.0 * angle.sin()))
}

pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// 6D encoding: first two columns of `r`, column-major.
pub fn matrix_to_6d(r: &Mat3) -> [f64; 6] {
    [
        r[(0, 0)],
        r[(1, 0)],
        r[(2, 0)],
        r[(0, 1)],
        r[(1, 1)],
        r[(2, 1)],
    ]
}

/// Gram-Schmidt decode of the 6D encoding. Returns `None` when the two
/// columns are (numerically) parallel or zero.
pub fn matrix_from_6d(x: &[f64; 6]) -> Option<Mat3> {
    let a1 = Vec3::new(x[0], x[1], x[2]);
    let a2 = Vec3::new(x[3], x[4], x[5]);
    let n1 = a1.norm();
    if !(n1 > 1e-12) {
        return None;
    }
    let b1 = a1 / n1;
    let u2 = a2 - b1 * b1.dot(&a2);
    let n2 = u2.norm();
    if !(n2 > 1e-12) {
        return None;
    }
    let b2 = u2 / n2;
    let b3 = b1.cross(&b2);
    Some(Mat3::from_columns(&[b1, b2, b3]))
}

/// Geodesic distance on SO(3), radians.
pub fn geodesic_angle(a: &Mat3, b: &Mat3) -> f64 {
    let c = ((a.transpose() * b).trace() - 1.0) * 0.5;
    c.clamp(-1.0, 1.0).acos()
}

/// Shortest-arc rotation taking direction `from` onto direction `to`.
///
/// Antiparallel inputs rotate by π about an axis perpendicular to `from`.
pub fn shortest_arc(from: &Vec3, to: &Vec3) -> Mat3 {
    let (nf, nt) = (from.norm(), to.norm());
    if nf < 1e-15 || nt < 1e-15 {
        return Mat3::identity();
    }
    let a = from / nf;
    let b = to / nt;
    let c = a.dot(&b);
    let v = a.cross(&b);
    if c < -1.0 + 1e-12 {
        let helper = if a.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
        let axis = a.cross(&helper).normalize();
        return axis_angle_to_matrix(&(axis * std::f64::consts::PI));
    }
    let k = skew(&v);
    Mat3::identity() + k + k * k * (1.0 / (1.0 + c))
}

/// Nearest rotation through SVD with determinant correction on the smallest
/// singular direction. Used for repairing single-precision payloads.
pub fn project_to_rotation(m: &Mat3) -> Mat3 {
    let svd = m.svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut r = u * v_t;
    if r.determinant() < 0.0 {
        // nalgebra sorts singular values in decreasing order
        let mut u = u;
        let mut col = u.column_mut(2);
        col *= -1.0;
        r = u * v_t;
    }
    r
}

/// Round every component through `f32`.
#[inline]
pub fn quantize(v: f64) -> f64 {
    v as f32 as f64
}

#[inline]
pub fn quantize_vec(v: &Vec3) -> Vec3 {
    v.map(quantize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_angle_round_trip() {
        for aa in [
            Vec3::new(0.3, -0.2, 0.9),
            Vec3::new(0.0, 0.0, 1e-9),
            Vec3::new(3.1, 0.1, -0.05),
            Vec3::new(0.0, std::f64::consts::PI, 0.0),
        ] {
            let r = axis_angle_to_matrix(&aa);
            assert!(is_rotation(&r, 1e-12));
            let back = axis_angle_to_matrix(&matrix_to_axis_angle(&r));
            assert!((back - r).norm() < 1e-9, "{aa:?}");
        }
    }

    #[test]
    fn six_d_round_trip() {
        let r = axis_angle_to_matrix(&Vec3::new(0.4, 1.1, -0.7));
        let back = matrix_from_6d(&matrix_to_6d(&r)).unwrap();
        assert!((back - r).norm() < 1e-14);
        assert!(matrix_from_6d(&[1.0, 0.0, 0.0, 2.0, 0.0, 0.0]).is_none());
    }

    #[test]
    fn shortest_arc_maps_direction() {
        let a = Vec3::new(1.0, 2.0, -0.5);
        for b in [Vec3::new(-0.3, 0.2, 1.0), -a, a * 3.0] {
            let r = shortest_arc(&a, &b);
            assert!(is_rotation(&r, 1e-12));
            assert!((r * a.normalize() - b.normalize()).norm() < 1e-12);
        }
    }

    #[test]
    fn rigid_inverse_composes_to_identity() {
        let t = Rigid::new(axis_angle_to_matrix(&Vec3::new(0.1, 0.2, 0.3)), Vec3::new(1.0, -2.0, 0.5));
        let id = t.compose(&t.inverse());
        assert!((id.rotation - Mat3::identity()).norm() < 1e-14);
        assert!(id.translation.norm() < 1e-14);
    }

    #[test]
    fn projection_fixes_reflection_and_noise() {
        let r = axis_angle_to_matrix(&Vec3::new(0.5, -0.1, 0.2));
        let noisy = r + Mat3::from_element(1e-6);
        let p = project_to_rotation(&noisy);
        assert!(is_rotation(&p, 1e-12));
        assert!((p - r).norm() < 1e-5);
        let refl = project_to_rotation(&Mat3::from_diagonal(&Vec3::new(1.0, 1.0, -1.0)));
        assert!(is_rotation(&refl, 1e-12));
    }
}
