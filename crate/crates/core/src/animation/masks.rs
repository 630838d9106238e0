use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::asset::RigAsset;
use crate::error::{Error, Result};

/// Skinning weight above which a vertex seeds a joint's mask.
pub const MASK_SEED_WEIGHT: f64 = 1e-3;

/// Per-joint vertex masks; every activation channel of joint `k` uses mask `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectiveMasks {
    pub masks: Vec<Vec<u32>>,
    /// The edge graph has several components; distances never cross them.
    pub disconnected: bool,
}

impl CorrectiveMasks {
    pub fn max_fraction(&self, vertex_count: usize) -> f64 {
        self.masks
            .iter()
            .map(|m| m.len() as f64 / vertex_count.max(1) as f64)
            .fold(0.0, f64::max)
    }
}

#[derive(PartialEq, PartialOrd)]
struct Dist(f64);
impl Eq for Dist {}
impl Ord for Dist {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&o.0)
    }
}

/// Dilate each joint's weight support by edge-graph geodesic distance.
pub fn derive_corrective_masks(rig: &RigAsset, geodesic_radius: f64) -> Result<CorrectiveMasks> {
    if !(geodesic_radius >= 0.0 && geodesic_radius.is_finite()) {
        return Err(Error::InvalidConfig(format!("geodesic radius {geodesic_radius} must be >= 0")));
    }
    let mesh = rig.mesh();
    let n = mesh.vertex_count();
    let adj = mesh.adjacency();
    let (_, ncomp) = mesh.components();
    let cols = rig.weights().columns(rig.joint_count(), MASK_SEED_WEIGHT);

    let mut dist = vec![f64::INFINITY; n];
    let mut touched = Vec::new();
    let masks = cols
        .iter()
        .map(|col| {
            let mut heap = BinaryHeap::new();
            for &(i, w) in col {
                if w > MASK_SEED_WEIGHT {
                    dist[i] = 0.0;
                    touched.push(i);
                    heap.push(Reverse((Dist(0.0), i)));
                }
            }
            while let Some(Reverse((Dist(d), i))) = heap.pop() {
                if d > dist[i] {
                    continue;
                }
                for &(j, len) in &adj[i] {
                    let nd = d + len;
                    let j = j as usize;
                    if nd <= geodesic_radius && nd < dist[j] {
                        if dist[j].is_infinite() {
                            touched.push(j);
                        }
                        dist[j] = nd;
                        heap.push(Reverse((Dist(nd), j)));
                    }
                }
            }
            let mut m: Vec<u32> = touched.iter().map(|&i| i as u32).collect();
            m.sort_unstable();
            for &i in &touched {
                dist[i] = f64::INFINITY;
            }
            touched.clear();
            m
        })
        .collect();
    Ok(CorrectiveMasks {
        masks,
        disconnected: ncomp > 1,
    })
}
