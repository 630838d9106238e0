use rayon::prelude::*;

use super::bvh::TriangleBvh;
use super::tet::{interpolate, lift_norm, solve_tet_barycentric, LIFT_EPS};
use crate::asset::Mesh;
use crate::error::{Error, Result};
use crate::geom::Vec3;

/// Tolerance on the partition of unity of stored coordinates.
pub const BARY_SUM_TOL: f64 = 1e-6;

/// Fixed map from a source topology onto the canonical topology: one source
/// face and one 4-vector of lifted-tetra coordinates per canonical vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Correspondence {
    source_id: String,
    source_faces: Vec<[u32; 3]>,
    source_vertex_count: usize,
    face_index: Vec<u32>,
    bary: Vec<[f64; 4]>,
    unmatched: Option<Vec<bool>>,
}

/// Knobs for [`precompute_correspondence_with`].
#[derive(Debug, Clone, Default)]
pub struct CorrespondenceOptions {
    /// Require `face_normal · wrap_vertex_normal >= cos` when picking the
    /// closest face. Falls back to the unfiltered search when no face passes.
    pub normal_agreement: Option<f64>,
    /// Canonical vertices without a counterpart on the source. They are still
    /// attached to their nearest face but flagged for exclusion in metrics.
    pub unmatched: Option<Vec<bool>>,
}

impl Correspondence {
    pub fn from_parts(
        source_id: impl Into<String>,
        source_faces: Vec<[u32; 3]>,
        source_vertex_count: usize,
        face_index: Vec<u32>,
        bary: Vec<[f64; 4]>,
        unmatched: Option<Vec<bool>>,
    ) -> Result<Self> {
        let c = Self {
            source_id: source_id.into(),
            source_faces,
            source_vertex_count,
            face_index,
            bary,
            unmatched,
        };
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<()> {
        if self.face_index.len() != self.bary.len() {
            return Err(Error::ValidationFailure(format!(
                "correspondence '{}': {} face indices vs {} coordinate rows",
                self.source_id,
                self.face_index.len(),
                self.bary.len()
            )));
        }
        let nf = self.source_faces.len();
        if let Some(i) = self.face_index.iter().position(|&f| f as usize >= nf) {
            return Err(Error::ValidationFailure(format!(
                "correspondence '{}': face index out of range at vertex {i}",
                self.source_id
            )));
        }
        if self
            .source_faces
            .iter()
            .any(|f| f.iter().any(|&v| v as usize >= self.source_vertex_count))
        {
            return Err(Error::ValidationFailure(format!(
                "correspondence '{}': source face references missing vertex",
                self.source_id
            )));
        }
        for (i, b) in self.bary.iter().enumerate() {
            let s: f64 = b.iter().sum();
            if !b.iter().all(|v| v.is_finite()) || (s - 1.0).abs() > BARY_SUM_TOL {
                return Err(Error::ValidationFailure(format!(
                    "correspondence '{}': coordinates at vertex {i} sum to {s}",
                    self.source_id
                )));
            }
        }
        if let Some(u) = &self.unmatched {
            if u.len() != self.bary.len() {
                return Err(Error::ValidationFailure("unmatched mask length mismatch".into()));
            }
        }
        Ok(())
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn source_faces(&self) -> &[[u32; 3]] {
        &self.source_faces
    }

    pub fn source_face_count(&self) -> usize {
        self.source_faces.len()
    }

    pub fn source_vertex_count(&self) -> usize {
        self.source_vertex_count
    }

    /// Canonical vertex count this map produces.
    pub fn target_vertex_count(&self) -> usize {
        self.face_index.len()
    }

    pub fn face_index(&self) -> &[u32] {
        &self.face_index
    }

    pub fn bary(&self) -> &[[f64; 4]] {
        &self.bary
    }

    pub fn unmatched(&self) -> Option<&[bool]> {
        self.unmatched.as_deref()
    }

    /// Copy with coordinates rounded through `f32`, as stored on disk.
    pub fn quantized(&self) -> Correspondence {
        let mut c = self.clone();
        for b in &mut c.bary {
            for v in b.iter_mut() {
                *v = *v as f32 as f64;
            }
        }
        c
    }

    pub fn with_source_id(mut self, id: impl Into<String>) -> Self {
        self.source_id = id.into();
        self
    }

    #[inline]
    fn source_triangle(&self, f: usize, verts: &[Vec3]) -> [Vec3; 3] {
        let [a, b, c] = self.source_faces[f];
        [verts[a as usize], verts[b as usize], verts[c as usize]]
    }

    /// Reconstruct canonical vertices from deformed source vertices.
    ///
    /// The fourth tetra point is recomputed from each deformed face, so the
    /// map is rigid-equivariant and exact on the precompute input.
    pub fn apply(&self, source_vertices: &[Vec3]) -> Result<Vec<Vec3>> {
        if source_vertices.len() != self.source_vertex_count {
            return Err(Error::SizeMismatch {
                what: "source vertices",
                expected: self.source_vertex_count,
                found: source_vertices.len(),
            });
        }
        Ok(self
            .face_index
            .par_iter()
            .zip(self.bary.par_iter())
            .map(|(&f, b)| interpolate(b, &self.source_triangle(f as usize, source_vertices)))
            .collect())
    }

    /// Reverse-mode derivative of [`Correspondence::apply`]: given a
    /// cotangent per canonical vertex, accumulate the cotangent per source
    /// vertex.
    pub fn apply_vjp(&self, source_vertices: &[Vec3], cotangent: &[Vec3]) -> Result<Vec<Vec3>> {
        if source_vertices.len() != self.source_vertex_count {
            return Err(Error::SizeMismatch {
                what: "source vertices",
                expected: self.source_vertex_count,
                found: source_vertices.len(),
            });
        }
        if cotangent.len() != self.target_vertex_count() {
            return Err(Error::SizeMismatch {
                what: "cotangent",
                expected: self.target_vertex_count(),
                found: cotangent.len(),
            });
        }
        let mut grad = vec![Vec3::zeros(); self.source_vertex_count];
        for ((&f, b), g) in self.face_index.iter().zip(&self.bary).zip(cotangent) {
            let [ia, ib, ic] = self.source_faces[f as usize];
            let [u1, u2, u3] = self.source_triangle(f as usize, source_vertices);
            let (e1, e2) = (u2 - u1, u3 - u1);
            // out = (b0+b3) u1 + b1 u2 + b2 u3 + b3 (e1 × e2)
            let gn = g * b[3];
            // d(e1×e2) · gn: de1 = e2 × gn, de2 = gn × e1
            let de1 = e2.cross(&gn);
            let de2 = gn.cross(&e1);
            grad[ia as usize] += g * (b[0] + b[3]) - de1 - de2;
            grad[ib as usize] += g * b[1] + de1;
            grad[ic as usize] += g * b[2] + de2;
        }
        Ok(grad)
    }
}

/// Closest-face correspondence of every wrap vertex onto `source`.
pub fn precompute_correspondence(source: &Mesh, wrap: &Mesh, source_id: &str) -> Result<Correspondence> {
    precompute_correspondence_with(source, wrap, source_id, &CorrespondenceOptions::default())
}

pub fn precompute_correspondence_with(
    source: &Mesh,
    wrap: &Mesh,
    source_id: &str,
    options: &CorrespondenceOptions,
) -> Result<Correspondence> {
    let bvh = TriangleBvh::build(source)?;
    let degenerate: Vec<bool> = (0..source.face_count())
        .map(|f| !(lift_norm(&source.triangle(f)) > LIFT_EPS))
        .collect();
    if degenerate.iter().all(|&d| d) {
        return Err(Error::DegenerateTriangle(0.0));
    }
    let face_normals: Vec<Vec3> = (0..source.face_count())
        .map(|f| {
            let [a, b, c] = source.triangle(f);
            (b - a).cross(&(c - a)).try_normalize(0.0).unwrap_or_else(Vec3::zeros)
        })
        .collect();
    let wrap_normals = options.normal_agreement.map(|_| wrap.vertex_normals());
    if let Some(u) = &options.unmatched {
        if u.len() != wrap.vertex_count() {
            return Err(Error::SizeMismatch {
                what: "unmatched mask",
                expected: wrap.vertex_count(),
                found: u.len(),
            });
        }
    }

    let rows: Result<Vec<(u32, [f64; 4])>> = wrap
        .vertices()
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let hit = match (options.normal_agreement, &wrap_normals) {
                (Some(cos), Some(wn)) => bvh
                    .closest_filtered(p, |f| !degenerate[f] && face_normals[f].dot(&wn[i]) >= cos)
                    .or_else(|| bvh.closest_filtered(p, |f| !degenerate[f])),
                _ => bvh.closest_filtered(p, |f| !degenerate[f]),
            }
            .ok_or(Error::DegenerateTriangle(0.0))?;
            let b = solve_tet_barycentric(p, &source.triangle(hit.face))?;
            Ok((hit.face as u32, b))
        })
        .collect();
    let (face_index, bary): (Vec<u32>, Vec<[f64; 4]>) = rows?.into_iter().unzip();
    Correspondence::from_parts(
        source_id,
        source.faces().to_vec(),
        source.vertex_count(),
        face_index,
        bary,
        options.unmatched.clone(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::axis_angle_to_matrix;

    fn quad() -> Mesh {
        Mesh::new(
            vec![Vec3::zeros(), Vec3::x(), Vec3::new(1.0, 1.0, 0.0), Vec3::y()],
            vec![[0, 1, 2], [0, 2, 3]],
            None,
        )
        .unwrap()
    }

    #[test]
    fn identity_topology_is_exact() {
        let m = quad();
        let c = precompute_correspondence(&m, &m, "self").unwrap();
        let out = c.apply(m.vertices()).unwrap();
        for (a, b) in out.iter().zip(m.vertices()) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn off_surface_wrap_uses_fourth_coordinate() {
        let src = quad();
        let wrap = Mesh::new(
            vec![Vec3::new(0.3, 0.1, 0.003), Vec3::new(0.8, 0.2, 0.0), Vec3::new(0.2, 0.7, -0.003)],
            vec![[0, 1, 2]],
            None,
        )
        .unwrap();
        let c = precompute_correspondence(&src, &wrap, "gap").unwrap();
        assert!(c.bary()[0][3] != 0.0);
        let out = c.apply(src.vertices()).unwrap();
        for (a, b) in out.iter().zip(wrap.vertices()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn size_mismatch_on_apply() {
        let m = quad();
        let c = precompute_correspondence(&m, &m, "self").unwrap();
        assert!(matches!(c.apply(&m.vertices()[..3]), Err(Error::SizeMismatch { .. })));
    }

    #[test]
    fn vjp_matches_finite_differences() {
        let src = quad();
        let wrap = Mesh::new(
            vec![Vec3::new(0.3, 0.1, 0.05), Vec3::new(0.8, 0.6, -0.02), Vec3::new(0.2, 0.7, 0.01)],
            vec![[0, 1, 2]],
            None,
        )
        .unwrap();
        let c = precompute_correspondence(&src, &wrap, "g").unwrap();
        let rot = axis_angle_to_matrix(&Vec3::new(0.2, -0.3, 0.1));
        let verts: Vec<Vec3> = src.vertices().iter().map(|v| rot * v * 1.3).collect();
        let cot = vec![Vec3::new(0.3, -1.0, 0.5), Vec3::new(1.0, 0.2, 0.0), Vec3::new(-0.4, 0.1, 0.9)];
        let f = |v: &[Vec3]| -> f64 { c.apply(v).unwrap().iter().zip(&cot).map(|(a, g)| a.dot(g)).sum() };
        let grad = c.apply_vjp(&verts, &cot).unwrap();
        let h = 1e-6;
        for i in 0..verts.len() {
            for a in 0..3 {
                let mut p = verts.clone();
                let mut m = verts.clone();
                p[i][a] += h;
                m[i][a] -= h;
                let fd = (f(&p) - f(&m)) / (2.0 * h);
                assert!((fd - grad[i][a]).abs() < 1e-7 * (1.0 + fd.abs()), "{i} {a}: {fd} vs {}", grad[i][a]);
            }
        }
    }
}
