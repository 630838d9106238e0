//! Pose-dependent corrective displacements.
//!
//! Two dense stages with one `tanh` in between. Stage 1 is block diagonal:
//! joint `k`'s `C` activations read only that joint's 6D rotation. Stage 2
//! maps each joint's activations to 3D offsets on the vertices of that
//! joint's mask, so masking is structural and out-of-mask output is exactly
//! zero. Weights are stored as `f32` (the on-disk width) and evaluated in
//! `f64`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::{matrix_to_6d, Mat3, Vec3};

/// Activation width per joint used by the paper's network.
pub const DEFAULT_CHANNELS: usize = 24;

const IDENTITY_6D: [f64; 6] = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0];

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectivesNet {
    joint_count: usize,
    channels: usize,
    vertex_count: usize,
    /// `J × C × 6`, row-major per joint block.
    w1: Vec<f32>,
    /// `J × C`.
    b1: Vec<f32>,
    /// Per-joint vertex masks in CSR layout (sorted vertex ids).
    mask_offsets: Vec<usize>,
    mask_vertices: Vec<u32>,
    /// `nnz(mask) × 3 × C`: one 3×C block per mask entry.
    w2: Vec<f32>,
    /// `N × 3`, only read on the union of masks.
    b2: Vec<f32>,
    subtract_rest: bool,
    /// Union of all masks.
    in_any_mask: Vec<bool>,
    /// Network output at the identity pose, `N × 3`.
    rest_response: Vec<Vec3>,
}

/// Raw parameter arrays, as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectivesParts {
    pub joint_count: usize,
    pub channels: usize,
    pub vertex_count: usize,
    pub w1: Vec<f32>,
    pub b1: Vec<f32>,
    pub mask_offsets: Vec<usize>,
    pub mask_vertices: Vec<u32>,
    pub w2: Vec<f32>,
    pub b2: Vec<f32>,
    pub subtract_rest: bool,
}

impl CorrectivesNet {
    pub fn from_parts(p: CorrectivesParts) -> Result<Self> {
        let (j, c, n) = (p.joint_count, p.channels, p.vertex_count);
        let shape = |what: &str, expected: usize, found: usize| -> Result<()> {
            if expected == found {
                Ok(())
            } else {
                Err(Error::ShapeMismatch(format!("{what}: expected {expected}, found {found}")))
            }
        };
        if c == 0 {
            return Err(Error::ShapeMismatch("activation width is zero".into()));
        }
        shape("stage-1 weights", j * c * 6, p.w1.len())?;
        shape("stage-1 bias", j * c, p.b1.len())?;
        shape("mask offsets", j + 1, p.mask_offsets.len())?;
        if p.mask_offsets[0] != 0 || p.mask_offsets.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::ShapeMismatch("mask offsets are not monotone from zero".into()));
        }
        shape("mask entries", p.mask_offsets[j], p.mask_vertices.len())?;
        shape("stage-2 weights", p.mask_vertices.len() * 3 * c, p.w2.len())?;
        shape("stage-2 bias", n * 3, p.b2.len())?;
        for k in 0..j {
            let m = &p.mask_vertices[p.mask_offsets[k]..p.mask_offsets[k + 1]];
            if m.iter().any(|&v| v as usize >= n) || m.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::ShapeMismatch(format!("mask {k} is unsorted or out of range")));
            }
        }
        let mut in_any_mask = vec![false; n];
        for &v in &p.mask_vertices {
            in_any_mask[v as usize] = true;
        }
        let mut net = Self {
            joint_count: j,
            channels: c,
            vertex_count: n,
            w1: p.w1,
            b1: p.b1,
            mask_offsets: p.mask_offsets,
            mask_vertices: p.mask_vertices,
            w2: p.w2,
            b2: p.b2,
            subtract_rest: p.subtract_rest,
            in_any_mask,
            rest_response: Vec::new(),
        };
        if net.subtract_rest {
            let rest = vec![IDENTITY_6D; j];
            net.rest_response = net.raw_forward(&rest).0;
        }
        Ok(net)
    }

    /// A net whose weights are all zero over the given masks.
    pub fn zeros(joint_count: usize, channels: usize, vertex_count: usize, masks: &[Vec<u32>]) -> Result<Self> {
        let (offsets, verts) = pack_masks(masks);
        let nnz = verts.len();
        Self::from_parts(CorrectivesParts {
            joint_count,
            channels,
            vertex_count,
            w1: vec![0.0; joint_count * channels * 6],
            b1: vec![0.0; joint_count * channels],
            mask_offsets: offsets,
            mask_vertices: verts,
            w2: vec![0.0; nnz * 3 * channels],
            b2: vec![0.0; vertex_count * 3],
            subtract_rest: true,
        })
    }

    pub fn to_parts(&self) -> CorrectivesParts {
        CorrectivesParts {
            joint_count: self.joint_count,
            channels: self.channels,
            vertex_count: self.vertex_count,
            w1: self.w1.clone(),
            b1: self.b1.clone(),
            mask_offsets: self.mask_offsets.clone(),
            mask_vertices: self.mask_vertices.clone(),
            w2: self.w2.clone(),
            b2: self.b2.clone(),
            subtract_rest: self.subtract_rest,
        }
    }

    pub fn joint_count(&self) -> usize {
        self.joint_count
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Total activation count `K = J · C`.
    pub fn activation_count(&self) -> usize {
        self.joint_count * self.channels
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn subtracts_rest(&self) -> bool {
        self.subtract_rest
    }

    pub fn mask(&self, k: usize) -> &[u32] {
        &self.mask_vertices[self.mask_offsets[k]..self.mask_offsets[k + 1]]
    }

    /// Mask of activation `a` (masks are shared by a joint's channels).
    pub fn activation_mask(&self, a: usize) -> &[u32] {
        self.mask(a / self.channels)
    }

    pub fn in_any_mask(&self, v: usize) -> bool {
        self.in_any_mask[v]
    }

    /// Largest mask coverage over all activations, as a vertex fraction.
    pub fn max_mask_fraction(&self) -> f64 {
        (0..self.joint_count)
            .map(|k| self.mask(k).len() as f64 / self.vertex_count.max(1) as f64)
            .fold(0.0, f64::max)
    }

    /// Replace the stage-2 blocks of joint `k` (`mask(k).len() × 3 × C`).
    pub fn with_stage2_block(mut self, k: usize, block: &[f32]) -> Result<Self> {
        let (a, b) = (self.mask_offsets[k] * 3 * self.channels, self.mask_offsets[k + 1] * 3 * self.channels);
        if block.len() != b - a {
            return Err(Error::ShapeMismatch(format!("stage-2 block {k}")));
        }
        self.w2[a..b].copy_from_slice(block);
        Self::from_parts(self.to_parts())
    }

    fn check_input(&self, n: usize) -> Result<()> {
        if n != self.joint_count {
            return Err(Error::ShapeMismatch(format!(
                "net expects {} joint rotations, got {n}",
                self.joint_count
            )));
        }
        Ok(())
    }

    /// Stage-1 activations for one joint.
    fn activations(&self, k: usize, x: &[f64; 6]) -> Vec<f64> {
        let c = self.channels;
        (0..c)
            .map(|ch| {
                let row = &self.w1[(k * c + ch) * 6..(k * c + ch + 1) * 6];
                let pre = self.b1[k * c + ch] as f64 + row.iter().zip(x).map(|(&w, &xi)| w as f64 * xi).sum::<f64>();
                pre.tanh()
            })
            .collect()
    }

    /// Output before rest subtraction, plus per-joint activations.
    fn raw_forward(&self, six_d: &[[f64; 6]]) -> (Vec<Vec3>, Vec<Vec<f64>>) {
        let c = self.channels;
        let acts: Vec<Vec<f64>> = (0..self.joint_count).map(|k| self.activations(k, &six_d[k])).collect();
        let mut out: Vec<Vec3> = (0..self.vertex_count)
            .map(|v| {
                if self.in_any_mask[v] {
                    Vec3::new(self.b2[3 * v] as f64, self.b2[3 * v + 1] as f64, self.b2[3 * v + 2] as f64)
                } else {
                    Vec3::zeros()
                }
            })
            .collect();
        for (k, h) in acts.iter().enumerate() {
            for e in self.mask_offsets[k]..self.mask_offsets[k + 1] {
                let v = self.mask_vertices[e] as usize;
                let blk = &self.w2[e * 3 * c..(e + 1) * 3 * c];
                for axis in 0..3 {
                    let row = &blk[axis * c..(axis + 1) * c];
                    out[v][axis] += row.iter().zip(h).map(|(&w, &a)| w as f64 * a).sum::<f64>();
                }
            }
        }
        (out, acts)
    }

    /// Displacements for joint-orient-relative local rotations.
    pub fn forward(&self, local: &[Mat3]) -> Result<Vec<Vec3>> {
        self.check_input(local.len())?;
        let x: Vec<[f64; 6]> = local.iter().map(matrix_to_6d).collect();
        self.forward_6d(&x)
    }

    pub fn forward_6d(&self, six_d: &[[f64; 6]]) -> Result<Vec<Vec3>> {
        self.check_input(six_d.len())?;
        let (mut out, _) = self.raw_forward(six_d);
        if self.subtract_rest {
            out.par_iter_mut().zip(&self.rest_response).for_each(|(o, r)| *o -= r);
        }
        Ok(out)
    }

    /// Pull a displacement cotangent back to the 6D inputs.
    pub fn vjp_6d(&self, six_d: &[[f64; 6]], cotangent: &[Vec3]) -> Result<Vec<[f64; 6]>> {
        self.check_input(six_d.len())?;
        if cotangent.len() != self.vertex_count {
            return Err(Error::ShapeMismatch("cotangent length".into()));
        }
        let c = self.channels;
        Ok((0..self.joint_count)
            .map(|k| {
                let h = self.activations(k, &six_d[k]);
                let mut dh = vec![0.0; c];
                for e in self.mask_offsets[k]..self.mask_offsets[k + 1] {
                    let g = cotangent[self.mask_vertices[e] as usize];
                    let blk = &self.w2[e * 3 * c..(e + 1) * 3 * c];
                    for axis in 0..3 {
                        for ch in 0..c {
                            dh[ch] += blk[axis * c + ch] as f64 * g[axis];
                        }
                    }
                }
                let mut dx = [0.0; 6];
                for ch in 0..c {
                    let dpre = dh[ch] * (1.0 - h[ch] * h[ch]);
                    let row = &self.w1[(k * c + ch) * 6..(k * c + ch + 1) * 6];
                    for i in 0..6 {
                        dx[i] += row[i] as f64 * dpre;
                    }
                }
                dx
            })
            .collect())
    }
}

/// Pack per-joint vertex lists into CSR (each list sorted and deduplicated).
pub fn pack_masks(masks: &[Vec<u32>]) -> (Vec<usize>, Vec<u32>) {
    let mut offsets = vec![0];
    let mut verts = Vec::new();
    for m in masks {
        let mut m = m.clone();
        m.sort_unstable();
        m.dedup();
        verts.extend(m);
        offsets.push(verts.len());
    }
    (offsets, verts)
}
