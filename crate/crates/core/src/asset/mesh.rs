use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec3;

/// Minimum triangle area (m²) accepted by validation.
pub const MIN_FACE_AREA: f64 = 1e-12;

/// Coarse anatomical label attached to a vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Body,
    Hands,
    Feet,
    Head,
}

impl Region {
    pub const ALL: [Region; 4] = [Region::Body, Region::Hands, Region::Feet, Region::Head];

    pub fn code(self) -> i32 {
        match self {
            Region::Body => 0,
            Region::Hands => 1,
            Region::Feet => 2,
            Region::Head => 3,
        }
    }

    pub fn from_code(code: i32) -> Option<Region> {
        Some(match code {
            0 => Region::Body,
            1 => Region::Hands,
            2 => Region::Feet,
            3 => Region::Head,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Region::Body => "body",
            Region::Hands => "hands",
            Region::Feet => "feet",
            Region::Head => "head",
        }
    }

    pub fn parse(s: &str) -> Option<Region> {
        Region::ALL.into_iter().find(|r| r.name() == s)
    }
}

/// Validated triangle mesh in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Vec3>,
    faces: Vec<[u32; 3]>,
    regions: Option<Vec<Region>>,
}

impl Mesh {
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[u32; 3]>, regions: Option<Vec<Region>>) -> Result<Self> {
        let mesh = Self {
            vertices,
            faces,
            regions,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        if let Some(i) = self.vertices.iter().position(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::ValidationFailure(format!("non-finite vertex position at {i}")));
        }
        for (fi, f) in self.faces.iter().enumerate() {
            if f.iter().any(|&i| i as usize >= n) {
                return Err(Error::ValidationFailure(format!("face {fi} index out of range")));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::ValidationFailure(format!("degenerate face {fi}: repeated index")));
            }
            let area = self.face_area(fi);
            if !(area > MIN_FACE_AREA) {
                return Err(Error::ValidationFailure(format!("degenerate face {fi}: area {area:e}")));
            }
        }
        if let Some(r) = &self.regions {
            if r.len() != n {
                return Err(Error::ValidationFailure(format!(
                    "region labels: {} for {n} vertices",
                    r.len()
                )));
            }
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub fn regions(&self) -> Option<&[Region]> {
        self.regions.as_deref()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    #[inline]
    pub fn triangle(&self, f: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[f];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.triangle(f);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    /// Same topology, new positions. Re-validates.
    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> Result<Mesh> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::SizeMismatch {
                what: "mesh vertices",
                expected: self.vertices.len(),
                found: vertices.len(),
            });
        }
        Mesh::new(vertices, self.faces.clone(), self.regions.clone())
    }

    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    /// Unique undirected edges, sorted.
    pub fn edges(&self) -> Vec<(u32, u32)> {
        let mut e: Vec<(u32, u32)> = self
            .faces
            .iter()
            .flat_map(|f| [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])])
            .map(|(a, b)| if a < b { (a, b) } else { (b, a) })
            .collect();
        e.sort_unstable();
        e.dedup();
        e
    }

    /// Per-vertex neighbor lists with edge lengths.
    pub fn adjacency(&self) -> Vec<Vec<(u32, f64)>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for (a, b) in self.edges() {
            let len = (self.vertices[a as usize] - self.vertices[b as usize]).norm();
            adj[a as usize].push((b, len));
            adj[b as usize].push((a, len));
        }
        adj
    }

    /// Connected-component id per vertex (edge graph), plus component count.
    pub fn components(&self) -> (Vec<usize>, usize) {
        let adj = self.adjacency();
        let mut comp = vec![usize::MAX; self.vertices.len()];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for s in 0..self.vertices.len() {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = count;
            queue.push_back(s);
            while let Some(v) = queue.pop_front() {
                for &(w, _) in &adj[v] {
                    if comp[w as usize] == usize::MAX {
                        comp[w as usize] = count;
                        queue.push_back(w as usize);
                    }
                }
            }
            count += 1;
        }
        (comp, count)
    }

    /// V − E + F over the whole mesh.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges().len() as i64 + self.faces.len() as i64
    }

    /// Every edge shared by exactly two faces.
    pub fn is_closed(&self) -> bool {
        let mut count: BTreeMap<(u32, u32), u32> = BTreeMap::new();
        for f in &self.faces {
            for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                *count.entry(if a < b { (a, b) } else { (b, a) }).or_default() += 1;
            }
        }
        count.values().all(|&c| c == 2)
    }

    /// Area-weighted vertex normals (unit length; zero for isolated vertices).
    pub fn vertex_normals(&self) -> Vec<Vec3> {
        let mut n = vec![Vec3::zeros(); self.vertices.len()];
        for (fi, f) in self.faces.iter().enumerate() {
            let [a, b, c] = self.triangle(fi);
            let fnrm = (b - a).cross(&(c - a));
            for &i in f {
                n[i as usize] += fnrm;
            }
        }
        for v in &mut n {
            let len = v.norm();
            if len > 0.0 {
                *v /= len;
            }
        }
        n
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tetra() -> Mesh {
        Mesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::new(0.0, 0.0, 1.0),
            ],
            vec![[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]],
            None,
        )
        .unwrap()
    }

    #[test]
    fn closed_tetra_has_euler_two() {
        let m = tetra();
        assert!(m.is_closed());
        assert_eq!(m.euler_characteristic(), 2);
        assert_eq!(m.components().1, 1);
    }

    #[test]
    fn rejects_bad_faces() {
        let v = vec![Vec3::zeros(), Vec3::x(), Vec3::y()];
        assert!(Mesh::new(v.clone(), vec![[0, 1, 3]], None).is_err());
        assert!(Mesh::new(v.clone(), vec![[0, 1, 1]], None).is_err());
        let collinear = vec![Vec3::zeros(), Vec3::x(), Vec3::x() * 2.0];
        let err = Mesh::new(collinear, vec![[0, 1, 2]], None).unwrap_err();
        assert!(err.to_string().contains("degenerate face"));
        let nan = vec![Vec3::zeros(), Vec3::x(), Vec3::new(f64::NAN, 0.0, 0.0)];
        assert!(Mesh::new(nan, vec![[0, 1, 2]], None).is_err());
    }
}
