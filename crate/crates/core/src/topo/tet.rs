//! Tetrahedral lifting of a triangle and 4-coordinate barycentrics.

use crate::error::{Error, Result};
use crate::geom::Vec3;

/// Below this norm of `(u2-u1)×(u3-u1)` a triangle cannot be lifted.
pub const LIFT_EPS: f64 = 1e-12;
/// Determinant guard for the 3×3 solve.
pub const DET_EPS: f64 = 1e-15;

/// Fourth tetra vertex: `u1 + (u2−u1)×(u3−u1)`, unnormalized.
#[inline]
pub fn lift(tri: &[Vec3; 3]) -> Vec3 {
    tri[0] + (tri[1] - tri[0]).cross(&(tri[2] - tri[0]))
}

#[inline]
pub fn lift_norm(tri: &[Vec3; 3]) -> f64 {
    (tri[1] - tri[0]).cross(&(tri[2] - tri[0])).norm()
}

/// Coordinates `b` with `Σb = 1` and `b1 u1 + b2 u2 + b3 u3 + b4 u4 = point`.
///
/// Solves `[e1 e2 n] (b2, b3, b4)ᵀ = point − u1` by explicit inversion.
pub fn solve_tet_barycentric(point: &Vec3, tri: &[Vec3; 3]) -> Result<[f64; 4]> {
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let n = e1.cross(&e2);
    let nn = n.norm();
    if !(nn > LIFT_EPS) {
        return Err(Error::DegenerateTriangle(nn));
    }
    // det [e1 e2 n] = (e1 × e2)·n = |n|²
    let det = nn * nn;
    if det <= DET_EPS {
        return Err(Error::DegenerateTriangle(nn));
    }
    let d = point - tri[0];
    // rows of the inverse are the cross products of column pairs / det
    let r1 = e2.cross(&n);
    let r2 = n.cross(&e1);
    let r3 = e1.cross(&e2);
    let b2 = r1.dot(&d) / det;
    let b3 = r2.dot(&d) / det;
    let b4 = r3.dot(&d) / det;
    Ok([1.0 - b2 - b3 - b4, b2, b3, b4])
}

/// Evaluate the lifted combination for a (possibly deformed) triangle.
#[inline]
pub fn interpolate(b: &[f64; 4], tri: &[Vec3; 3]) -> Vec3 {
    let u4 = lift(tri);
    tri[0] * b[0] + tri[1] * b[1] + tri[2] * b[2] + u4 * b[3]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn right_tri() -> [Vec3; 3] {
        [Vec3::zeros(), Vec3::x(), Vec3::y()]
    }

    #[test]
    fn vertex_and_centroid() {
        let tri = [Vec3::new(0.1, 0.2, 0.3), Vec3::new(0.5, 0.1, 0.0), Vec3::new(0.2, 0.7, 0.1)];
        let b = solve_tet_barycentric(&tri[0], &tri).unwrap();
        assert!((b[0] - 1.0).abs() < 1e-15 && b[1].abs() < 1e-15 && b[2].abs() < 1e-15 && b[3].abs() < 1e-15);
        let c = (tri[0] + tri[1] + tri[2]) / 3.0;
        let b = solve_tet_barycentric(&c, &tri).unwrap();
        for (got, want) in b.iter().zip([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn off_surface_point_reconstructs() {
        let tri = right_tri();
        let p = Vec3::new(0.25, 0.25, 0.005);
        let b = solve_tet_barycentric(&p, &tri).unwrap();
        assert!(b[3] != 0.0);
        assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((interpolate(&b, &tri) - p).norm() < 1e-9);
    }

    #[test]
    fn degenerate_rejected() {
        let tri = [Vec3::zeros(), Vec3::x(), Vec3::x() * 2.0];
        assert!(matches!(solve_tet_barycentric(&Vec3::y(), &tri), Err(Error::DegenerateTriangle(_))));
    }
}
