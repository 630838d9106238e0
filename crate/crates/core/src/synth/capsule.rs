//! Closed capsule surface swept along one chain of collinear bones.
//!
//! The capsule starts a few rings before its first joint so every joint
//! sits inside the surface with rings on both sides.
//!
//! Vertex order per capsule: start pole, start cap rings, lead rings, body
//! rings, end cap rings, end pole. Every ring has the same number of vertices, so two rigs
//! built from the same config share topology regardless of proportions.

use std::f64::consts::PI;

use crate::geom::Vec3;

use super::layout::{Bone, Chain};

/// Outward bulge of the radius profile at mid-bone, relative to the head
/// radius. Keeps the surface curved along the axis.
const BULGE: f64 = 0.08;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Density {
    pub radial: usize,
    pub axial: usize,
    pub cap: usize,
    /// Rings before the first joint, spaced like the first bone's rings.
    pub prefix: usize,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct Capsule {
    pub vertices: Vec<Vec3>,
    /// Axial coordinate from the chain start (negative on the start cap).
    pub axial: Vec<f64>,
    pub faces: Vec<[u32; 3]>,
}

struct Ring {
    s: f64,
    radius: f64,
}

/// Radius at body station `i` of `axial * bones` intervals.
fn body_ring(i: usize, axial: usize, lengths: &[f64], radii: &[f64]) -> Ring {
    let bone = (i / axial).min(lengths.len() - 1);
    let frac = (i - bone * axial) as f64 / axial as f64;
    let s = lengths[..bone].iter().sum::<f64>() + frac * lengths[bone];
    let lerp = radii[bone] + (radii[bone + 1] - radii[bone]) * frac;
    Ring {
        s,
        radius: lerp + BULGE * radii[bone] * (PI * frac).sin(),
    }
}

/// Sweep `chain`; body rings with `keep(i) == false` are skipped (the first
/// and last body rings are always kept).
pub(crate) fn sweep(chain: &Chain, bones: &[Bone], d: Density, keep: impl Fn(usize) -> bool) -> Capsule {
    let lengths = chain.bone_lengths(bones);
    let radii = chain.radii(bones);
    let total: f64 = lengths.iter().sum();
    let stations = d.axial * lengths.len();
    let (r0, r1) = (radii[0], chain.end_radius);
    let lead = d.prefix as f64 * lengths[0] / d.axial as f64;
    let depth = chain.cap_depth;

    let mut rings = Vec::new();
    for m in 1..=d.cap {
        let a = 0.5 * PI * m as f64 / (d.cap + 1) as f64;
        rings.push(Ring {
            s: -lead - depth * r0 * a.cos(),
            radius: r0 * a.sin(),
        });
    }
    for m in 0..d.prefix {
        rings.push(Ring {
            s: -lead * (d.prefix - m) as f64 / d.prefix as f64,
            radius: r0,
        });
    }
    for i in 0..=stations {
        if i == 0 || i == stations || keep(i) {
            rings.push(body_ring(i, d.axial, &lengths, &radii));
        }
    }
    for m in (1..=d.cap).rev() {
        let a = 0.5 * PI * m as f64 / (d.cap + 1) as f64;
        rings.push(Ring {
            s: total + depth * r1 * a.cos(),
            radius: r1 * a.sin(),
        });
    }

    let origin = chain.start(bones);
    let axis = chain.dir();
    let e1: Vec3 = chain.frame.column(1).into_owned();
    let e2: Vec3 = chain.frame.column(2).into_owned();
    let mut cap = Capsule::default();
    let push = |cap: &mut Capsule, s: f64, offset: Vec3| {
        cap.vertices.push(origin + axis * s + offset);
        cap.axial.push(s);
    };

    push(&mut cap, -lead - depth * r0, Vec3::zeros());
    for ring in &rings {
        for j in 0..d.radial {
            let phi = 2.0 * PI * j as f64 / d.radial as f64;
            push(&mut cap, ring.s, (e1 * phi.cos() + e2 * phi.sin()) * ring.radius);
        }
    }
    push(&mut cap, total + depth * r1, Vec3::zeros());

    let n = d.radial as u32;
    let ring_start = |r: usize| 1 + r as u32 * n;
    for j in 0..n {
        let jn = (j + 1) % n;
        cap.faces.push([0, ring_start(0) + jn, ring_start(0) + j]);
    }
    for r in 0..rings.len() - 1 {
        let (a, b) = (ring_start(r), ring_start(r + 1));
        for j in 0..n {
            let jn = (j + 1) % n;
            cap.faces.push([a + j, a + jn, b + j]);
            cap.faces.push([a + jn, b + jn, b + j]);
        }
    }
    let top = cap.vertices.len() as u32 - 1;
    let last = ring_start(rings.len() - 1);
    for j in 0..n {
        let jn = (j + 1) % n;
        cap.faces.push([last + j, last + jn, top]);
    }
    cap
}
