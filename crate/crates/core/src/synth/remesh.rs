//! Alternative surface topologies of a synthetic rig's bind shape, each
//! with the canonical mesh placed exactly on it (the wrap).

use std::collections::HashMap;

use rayon::prelude::*;

use super::{surface, SynthRig};
use crate::asset::Mesh;
use crate::error::Result;
use crate::geom::Vec3;
use crate::topo::TriangleBvh;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RemeshMode {
    /// Split every triangle into four at edge midpoints.
    Subdivide,
    /// Drop every other interior ring along each capsule.
    DecimateLite,
}

impl RemeshMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "subdivide" => Some(Self::Subdivide),
            "decimate-lite" | "decimate" => Some(Self::DecimateLite),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Subdivide => "subdivide",
            Self::DecimateLite => "decimate-lite",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RemeshVariant {
    pub mesh: Mesh,
    /// Canonical topology positioned on `mesh`'s surface.
    pub wrap: Mesh,
}

/// Vertices and faces of one midpoint subdivision of `faces` over `positions`.
fn split(positions: &[Vec3], faces: &[[u32; 3]]) -> (Vec<Vec3>, Vec<[u32; 3]>) {
    let mut verts = positions.to_vec();
    let mut mid: HashMap<(u32, u32), u32> = HashMap::new();
    let mut out = Vec::with_capacity(faces.len() * 4);
    let mut midpoint = |a: u32, b: u32, verts: &mut Vec<Vec3>| {
        let key = (a.min(b), a.max(b));
        *mid.entry(key).or_insert_with(|| {
            verts.push((verts[a as usize] + verts[b as usize]) * 0.5);
            verts.len() as u32 - 1
        })
    };
    for &[a, b, c] in faces {
        let ab = midpoint(a, b, &mut verts);
        let bc = midpoint(b, c, &mut verts);
        let ca = midpoint(c, a, &mut verts);
        out.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
    }
    (verts, out)
}

fn subdivide(mesh: &Mesh) -> Result<Mesh> {
    let (verts, faces) = split(mesh.vertices(), mesh.faces());
    Mesh::new(verts, faces, None)
}

/// Positions of the subdivided variant when the canonical mesh sits at
/// `canonical_positions` (for example a posed frame).
pub fn subdivided_positions(canonical: &Mesh, canonical_positions: &[Vec3]) -> Vec<Vec3> {
    split(canonical_positions, canonical.faces()).0
}

/// Build the variant and its wrap.
///
/// Subdivision keeps every canonical vertex, so the wrap is the canonical
/// mesh itself. For decimation the wrap is each canonical vertex moved to
/// its closest point on the coarser surface.
pub fn remesh_variant(rig: &SynthRig, mode: RemeshMode) -> Result<RemeshVariant> {
    let canonical = rig.rig.mesh();
    match mode {
        RemeshMode::Subdivide => Ok(RemeshVariant {
            mesh: subdivide(canonical)?,
            wrap: canonical.clone(),
        }),
        RemeshMode::DecimateLite => {
            let s = surface(rig.layout(), rig.density(), &|i| i % 2 == 0);
            let mesh = Mesh::new(s.vertices, s.faces, None)?;
            let bvh = TriangleBvh::build(&mesh)?;
            let placed: Vec<Vec3> = canonical.vertices().par_iter().map(|p| bvh.closest(p).point).collect();
            Ok(RemeshVariant {
                wrap: canonical.with_vertices(placed)?,
                mesh,
            })
        }
    }
}
