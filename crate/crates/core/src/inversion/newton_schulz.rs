//! Polar factor by Newton-Schulz iteration, taken relative to a current
//! rotation so the answer moves continuously with the covariance.
//!
//! The SVD route picks singular-vector signs afresh on every call. When the
//! cross-covariance loses rank the sign choice can change between two nearby
//! inputs and the rotation jumps by up to 180°. Here the covariance is first
//! expressed relative to the current estimate, `ΔH = R_currᵀ H`, and only the
//! increment is orthogonalized. Increments whose polar factor would be
//! improper (`det ΔH < 0`) are refused: the estimate stays where it is.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::geom::Mat3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NsConfig {
    pub max_iterations: usize,
    /// Stop once `‖RᵀR − I‖_F` drops below this.
    pub tolerance: f64,
}

impl Default for NsConfig {
    fn default() -> Self {
        Self {
            max_iterations: 30,
            tolerance: 1e-9,
        }
    }
}

/// `‖H‖_∞` below this counts as no information.
pub const ZERO_COVARIANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolarStatus {
    Converged,
    /// `‖H‖_∞` under [`ZERO_COVARIANCE`]; current rotation kept.
    ZeroCovariance,
    /// `det(ΔH) ≤ 0`; current rotation kept.
    ImproperIncrement,
    /// Iteration cap hit before the tolerance; current rotation kept.
    NotConverged,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Polar {
    pub rotation: Mat3,
    pub iterations: usize,
    pub status: PolarStatus,
}

impl Polar {
    pub fn is_flagged(&self) -> bool {
        self.status != PolarStatus::Converged
    }

    /// The rotation, or the error matching a flagged status.
    pub fn into_result(self) -> crate::Result<Mat3> {
        match self.status {
            PolarStatus::Converged => Ok(self.rotation),
            PolarStatus::ZeroCovariance => Err(Error::ZeroCovariance),
            PolarStatus::ImproperIncrement | PolarStatus::NotConverged => Err(Error::DegenerateCovariance),
        }
    }
}

/// Maximum absolute row sum.
pub fn inf_norm(m: &Mat3) -> f64 {
    (0..3).map(|r| m.row(r).abs().sum()).fold(0.0, f64::max)
}

/// Rotation nearest to `h` (with `h = Σ w dst srcᵀ`), reached from `r_current`.
pub fn newton_schulz_polar(h: &Mat3, r_current: &Mat3, config: &NsConfig) -> Polar {
    let keep = |status, iterations| Polar {
        rotation: *r_current,
        iterations,
        status,
    };
    let scale = inf_norm(h);
    if !(scale >= ZERO_COVARIANCE) {
        return keep(PolarStatus::ZeroCovariance, 0);
    }
    let dh = r_current.transpose() * h;
    if !(dh.determinant() > 0.0) {
        return keep(PolarStatus::ImproperIncrement, 0);
    }
    let identity = Mat3::identity();
    let mut r = dh / inf_norm(&dh);
    let mut iterations = 0;
    loop {
        let gram = r.transpose() * r;
        if (gram - identity).norm() < config.tolerance {
            break;
        }
        if iterations == config.max_iterations {
            return keep(PolarStatus::NotConverged, iterations);
        }
        r = r * (identity * 3.0 - gram) * 0.5;
        iterations += 1;
    }
    // One extra step costs nothing and takes the residual to rounding level,
    // so chained increments do not accumulate drift.
    r = r * (identity * 3.0 - r.transpose() * r) * 0.5;
    Polar {
        rotation: r_current * r,
        iterations,
        status: PolarStatus::Converged,
    }
}
