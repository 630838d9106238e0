//! Sparse joint regressor: one fixed linear map from canonical vertices to
//! joint positions, factored once from the bind pose.
//!
//! Row `k` is supported on a subset of the vertices skinned to joint `k` or
//! its parent (see [`SupportRule`]).
//! Its weights solve
//!
//! ```text
//! min_w ‖Σᵢ wᵢ (vᵢ − jₖ)‖² + λ Σᵢ φ(rᵢ)² wᵢ²    s.t.  Σᵢ wᵢ = 1
//! ```
//!
//! where `rᵢ = ‖vᵢ − jₖ‖` and `φ` is the linear radial kernel (floored at
//! 1 mm). The penalty keeps the combination local to the joint; the
//! constraint makes the map translation-equivariant. With a diagonal penalty
//! the solve reduces to one 3×3 inverse per joint via Woodbury.

use crate::asset::{RigAsset, SkinningWeights, Skeleton};
use crate::error::{Error, Result};
use crate::geom::{Mat3, Vec3};

#[derive(Debug, Clone, Copy)]
pub struct RegressorConfig {
    pub lambda: f64,
    /// Kernel floor in meters.
    pub kernel_floor: f64,
    /// Exponent `p` of the radial kernel `φ(r) = r^p`.
    pub kernel_power: f64,
    pub support: SupportRule,
    /// Post-solve sparsification threshold.
    pub drop_below: f64,
}

impl Default for RegressorConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-6,
            kernel_floor: 1e-3,
            kernel_power: 1.0,
            support: SupportRule::Joint,
            drop_below: 1e-8,
        }
    }
}

/// Which vertices may contribute to joint `k`'s row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupportRule {
    /// Every vertex with nonzero weight for `k` or its parent.
    JointAndParent,
    /// Every vertex with nonzero weight for `k`. The parent's vertices
    /// follow the parent segment's proportions, so leaving them out keeps
    /// the regressed joint local to its own segment.
    Joint,
}

/// `J × N` sparse matrix in CSR layout (row = joint).
#[derive(Debug, Clone, PartialEq)]
pub struct JointRegressor {
    offsets: Vec<usize>,
    vertices: Vec<u32>,
    weights: Vec<f64>,
    vertex_count: usize,
}

impl JointRegressor {
    pub fn from_csr(offsets: Vec<usize>, vertices: Vec<u32>, weights: Vec<f64>, vertex_count: usize) -> Result<Self> {
        if offsets.first() != Some(&0) || offsets.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::ValidationFailure("regressor offsets malformed".into()));
        }
        let nnz = *offsets.last().unwrap();
        if vertices.len() != nnz || weights.len() != nnz {
            return Err(Error::ValidationFailure("regressor CSR length mismatch".into()));
        }
        if vertices.iter().any(|&v| v as usize >= vertex_count) {
            return Err(Error::ValidationFailure("regressor references missing vertex".into()));
        }
        let r = Self {
            offsets,
            vertices,
            weights,
            vertex_count,
        };
        for k in 0..r.joint_count() {
            let s: f64 = r.row(k).map(|(_, w)| w).sum();
            if (s - 1.0).abs() > 1e-6 {
                return Err(Error::ValidationFailure(format!("regressor row {k} sums to {s}")));
            }
        }
        Ok(r)
    }

    pub fn joint_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn nnz(&self) -> usize {
        self.vertices.len()
    }

    #[inline]
    pub fn row(&self, k: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.offsets[k], self.offsets[k + 1]);
        self.vertices[a..b]
            .iter()
            .zip(&self.weights[a..b])
            .map(|(&v, &w)| (v as usize, w))
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn vertex_indices(&self) -> &[u32] {
        &self.vertices
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Joint positions for a rest shape: one sparse multiply.
    pub fn regress(&self, vertices: &[Vec3]) -> Result<Vec<Vec3>> {
        if vertices.len() != self.vertex_count {
            return Err(Error::SizeMismatch {
                what: "regressor input vertices",
                expected: self.vertex_count,
                found: vertices.len(),
            });
        }
        Ok((0..self.joint_count())
            .map(|k| self.row(k).fold(Vec3::zeros(), |acc, (v, w)| acc + vertices[v] * w))
            .collect())
    }

    /// Transposed product: scatter a cotangent per joint back to vertices.
    pub fn regress_vjp(&self, cotangent: &[Vec3]) -> Vec<Vec3> {
        let mut g = vec![Vec3::zeros(); self.vertex_count];
        for (k, c) in cotangent.iter().enumerate() {
            for (v, w) in self.row(k) {
                g[v] += c * w;
            }
        }
        g
    }
}

pub fn build_joint_regressor(rig: &RigAsset) -> Result<JointRegressor> {
    build_joint_regressor_with(rig.mesh().vertices(), rig.skeleton(), rig.weights(), &RegressorConfig::default())
}

pub fn build_joint_regressor_with(
    bind_vertices: &[Vec3],
    skeleton: &Skeleton,
    weights: &SkinningWeights,
    config: &RegressorConfig,
) -> Result<JointRegressor> {
    let jc = skeleton.joint_count();
    let n = bind_vertices.len();
    if weights.vertex_count() != n {
        return Err(Error::SizeMismatch {
            what: "skinning weight rows",
            expected: n,
            found: weights.vertex_count(),
        });
    }
    let cols = weights.columns(jc, f64::MIN_POSITIVE);

    let mut offsets = vec![0usize];
    let mut vertices = Vec::new();
    let mut values = Vec::new();
    let mut in_support = vec![false; n];
    for k in 0..jc {
        let mut support: Vec<usize> = cols[k].iter().map(|&(i, _)| i).collect();
        if let (SupportRule::JointAndParent, Some(p)) = (config.support, skeleton.parent(k)) {
            support.extend(cols[p].iter().map(|&(i, _)| i));
        }
        support.retain(|&i| !std::mem::replace(&mut in_support[i], true));
        support.iter().for_each(|&i| in_support[i] = false);
        support.sort_unstable();
        if support.is_empty() {
            return Err(Error::EmptySupport(k));
        }
        let row = solve_row(k, bind_vertices, &support, skeleton.bind_position(k), config)?;
        for (i, w) in support.iter().zip(row) {
            vertices.push(*i as u32);
            values.push(w);
        }
        offsets.push(vertices.len());
    }
    Ok(JointRegressor {
        offsets,
        vertices,
        weights: values,
        vertex_count: n,
    })
}

fn solve_row(k: usize, verts: &[Vec3], support: &[usize], joint: &Vec3, cfg: &RegressorConfig) -> Result<Vec<f64>> {
    let floor2 = cfg.kernel_floor * cfg.kernel_floor;
    let xs: Vec<Vec3> = support.iter().map(|&i| verts[i] - joint).collect();
    let inv_pen: Vec<f64> = xs
        .iter()
        .map(|x| 1.0 / (x.norm_squared() + floor2).powf(cfg.kernel_power))
        .collect();
    let mut s = Vec3::zeros();
    let mut big_s = Mat3::zeros();
    for (x, u) in xs.iter().zip(&inv_pen) {
        s += x * *u;
        big_s += x * x.transpose() * *u;
    }
    let q = (big_s + Mat3::identity() * cfg.lambda)
        .try_inverse()
        .ok_or(Error::SingularSystem(k))?
        * s;
    let mut w: Vec<f64> = xs.iter().zip(&inv_pen).map(|(x, u)| u * (1.0 - x.dot(&q))).collect();
    normalize(&mut w).ok_or(Error::SingularSystem(k))?;
    // sparsify then restore the partition of unity
    let mut dropped = false;
    for v in &mut w {
        if v.abs() < cfg.drop_below {
            *v = 0.0;
            dropped = true;
        }
    }
    if dropped {
        normalize(&mut w).ok_or(Error::SingularSystem(k))?;
    }
    Ok(w)
}

fn normalize(w: &mut [f64]) -> Option<()> {
    let total: f64 = w.iter().sum();
    if !total.is_finite() || total.abs() < 1e-300 {
        return None;
    }
    w.iter_mut().for_each(|v| *v /= total);
    Some(())
}
