use crate::error::{Error, Result};

/// Tolerance on per-vertex weight sums.
pub const WEIGHT_SUM_TOL: f64 = 1e-6;

/// Sparse per-vertex skinning weights in CSR layout.
///
/// Rows are kept as given (for storage) and also divided by their sum, so
/// that blending is affine to rounding even when the stored values were
/// single precision. [`SkinningWeights::row`] yields the normalized rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SkinningWeights {
    offsets: Vec<usize>,
    joints: Vec<u32>,
    values: Vec<f64>,
    normalized: Vec<f64>,
}

impl SkinningWeights {
    /// Build from CSR arrays and validate against `joint_count`.
    pub fn from_csr(offsets: Vec<usize>, joints: Vec<u32>, values: Vec<f64>, joint_count: usize) -> Result<Self> {
        if offsets.first() != Some(&0) {
            return Err(Error::ValidationFailure("weights offsets must start at 0".into()));
        }
        if offsets.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::ValidationFailure("weights offsets not monotone".into()));
        }
        let nnz = *offsets.last().unwrap();
        if joints.len() != nnz || values.len() != nnz {
            return Err(Error::ValidationFailure(format!(
                "weights CSR length mismatch: offsets end {nnz}, {} indices, {} values",
                joints.len(),
                values.len()
            )));
        }
        let mut w = Self {
            normalized: values.clone(),
            offsets,
            joints,
            values,
        };
        for i in 0..w.vertex_count() {
            let mut sum = 0.0;
            let (a, b) = (w.offsets[i], w.offsets[i + 1]);
            for (&j, &v) in w.joints[a..b].iter().zip(&w.values[a..b]) {
                let j = j as usize;
                if j >= joint_count {
                    return Err(Error::ValidationFailure(format!("weights reference joint {j} at vertex {i}")));
                }
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::ValidationFailure(format!("negative or non-finite weight at vertex {i}")));
                }
                sum += v;
            }
            if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
                return Err(Error::ValidationFailure(format!("weights sum to {sum} at vertex {i}")));
            }
            for x in &mut w.normalized[a..b] {
                *x /= sum;
            }
        }
        Ok(w)
    }

    /// Build from per-vertex rows of `(joint, weight)`.
    pub fn from_rows(rows: &[Vec<(usize, f64)>], joint_count: usize) -> Result<Self> {
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        let mut joints = Vec::new();
        let mut values = Vec::new();
        offsets.push(0);
        for r in rows {
            for &(j, w) in r {
                joints.push(j as u32);
                values.push(w);
            }
            offsets.push(joints.len());
        }
        Self::from_csr(offsets, joints, values, joint_count)
    }

    pub fn vertex_count(&self) -> usize {
        self.offsets.len() - 1
    }

    #[inline]
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.offsets[i], self.offsets[i + 1]);
        self.joints[a..b]
            .iter()
            .zip(&self.normalized[a..b])
            .map(|(&j, &w)| (j as usize, w))
    }

    /// Weight of joint `k` at vertex `i` (zero when absent).
    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.row(i).find(|&(j, _)| j == k).map_or(0.0, |(_, w)| w)
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn joint_indices(&self) -> &[u32] {
        &self.joints
    }

    /// Values as given at construction (what gets stored on disk).
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Per joint, the `(vertex, weight)` pairs with weight `>= threshold`.
    pub fn columns(&self, joint_count: usize, threshold: f64) -> Vec<Vec<(usize, f64)>> {
        let mut cols = vec![Vec::new(); joint_count];
        for i in 0..self.vertex_count() {
            for (j, w) in self.row(i) {
                if w >= threshold && w > 0.0 {
                    cols[j].push((i, w));
                }
            }
        }
        cols
    }
}
