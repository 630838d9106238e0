//! Weighted orthogonal Procrustes (Kabsch) through SVD.

use crate::error::{Error, Result};
use crate::geom::{Mat3, Vec3};

/// Points with weight at or below this are ignored.
pub const WEIGHT_EPS: f64 = 1e-12;
/// Relative threshold on the second singular value for rank detection.
const RANK_EPS: f64 = 1e-12;

/// Rotation minimizing `Σ wᵢ ‖R srcᵢ − dstᵢ‖²` over SO(3).
///
/// Inputs are used as given (no centroid removal): callers pass vectors
/// relative to the pivot they care about.
pub fn kabsch_rotation(src: &[Vec3], dst: &[Vec3], weights: &[f64]) -> Result<Mat3> {
    weighted_procrustes(src, dst, weights, 3)
}

pub(crate) fn weighted_procrustes(src: &[Vec3], dst: &[Vec3], weights: &[f64], min_points: usize) -> Result<Mat3> {
    if src.len() != dst.len() || src.len() != weights.len() {
        return Err(Error::SizeMismatch {
            what: "procrustes inputs",
            expected: src.len(),
            found: dst.len().min(weights.len()),
        });
    }
    let mut h = Mat3::zeros();
    let mut used = 0;
    let mut total = 0.0;
    for ((s, d), &w) in src.iter().zip(dst).zip(weights) {
        if w > WEIGHT_EPS {
            h += d * s.transpose() * w;
            used += 1;
            total += w;
        }
    }
    if used < min_points || !(total > 0.0) {
        return Err(Error::InsufficientPoints(used));
    }
    kabsch_from_covariance(&h)
}

/// Nearest proper rotation to `h` (`h = Σ w dst srcᵀ`), sign-correcting the
/// smallest singular direction when `det(U Vᵀ) < 0`.
pub fn kabsch_from_covariance(h: &Mat3) -> Result<Mat3> {
    let svd = h.svd(true, true);
    let s = svd.singular_values;
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let (s_max, s_mid, s_min_idx) = (s[order[0]], s[order[1]], order[2]);
    if !(s_max > 0.0) || s_mid <= RANK_EPS * s_max {
        return Err(Error::DegenerateCovariance);
    }
    let r = u * v_t;
    if r.determinant() >= 0.0 {
        return Ok(r);
    }
    let mut u = u;
    let mut col = u.column_mut(s_min_idx);
    col *= -1.0;
    Ok(u * v_t)
}

/// Unconstrained orthogonal polar factor `U Vᵀ` (may be improper).
pub fn svd_polar(h: &Mat3) -> Mat3 {
    let svd = h.svd(true, true);
    svd.u.unwrap() * svd.v_t.unwrap()
}
