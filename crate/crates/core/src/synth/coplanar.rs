//! Near-coplanar point clouds whose cross-covariance loses a singular value.
//!
//! The source cloud is a symmetric planar grid with a tiny checkerboard
//! thickness, so its second moment is diagonal with `Sz ≪ Sy < Sx`. The
//! target is `R(t) · diag(1, p(t), 1) · src` where `p` ramps from `+1` to
//! `-1` (or stays in a well-conditioned band). The covariance then has
//! singular values `Sx, |p| Sy, Sz`: the middle one crosses zero with `p`,
//! and once `|p| Sy > Sz` again the sign-corrected SVD answer snaps to the
//! other branch, 180° away. `R(t)` is a slow rotation path known exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, UnitSphere};

use crate::geom::{axis_angle_to_matrix, Mat3, Vec3};

const FRAMES: usize = 101;
const GRID_X: usize = 7;
const GRID_Y: usize = 5;
/// Out-of-plane half thickness relative to the in-plane y extent.
const THICKNESS: f64 = 0.01;
/// Total rotation of the ground-truth path over the sweep.
const SWEEP_ANGLE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct CoplanarFrame {
    pub src: Vec<Vec3>,
    pub dst: Vec<Vec3>,
    pub weights: Vec<f64>,
    /// Ground-truth rotation of the underlying smooth path.
    pub rotation: Mat3,
    /// Scale applied to the in-plane y axis before rotating.
    pub perturbation: f64,
}

impl CoplanarFrame {
    /// `Σ w dst srcᵀ`.
    pub fn covariance(&self) -> Mat3 {
        self.src
            .iter()
            .zip(&self.dst)
            .zip(&self.weights)
            .fold(Mat3::zeros(), |h, ((s, d), w)| h + d * s.transpose() * *w)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoplanarFixture {
    pub frames: Vec<CoplanarFrame>,
}

impl CoplanarFixture {
    pub fn covariances(&self) -> Vec<Mat3> {
        self.frames.iter().map(CoplanarFrame::covariance).collect()
    }
}

fn grid() -> Vec<Vec3> {
    let mut pts = Vec::with_capacity(GRID_X * GRID_Y);
    for i in 0..GRID_X {
        for j in 0..GRID_Y {
            let x = -1.0 + 2.0 * i as f64 / (GRID_X - 1) as f64;
            let y = -0.5 + j as f64 / (GRID_Y - 1) as f64;
            let z = if (i + j) % 2 == 0 { THICKNESS } else { -THICKNESS };
            pts.push(Vec3::new(x, y, z));
        }
    }
    pts
}

fn build(seed: u64, ramp: impl Fn(f64) -> f64) -> CoplanarFixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let axis: [f64; 3] = UnitSphere.sample(&mut rng);
    let base_axis: [f64; 3] = UnitSphere.sample(&mut rng);
    let base = axis_angle_to_matrix(&(Vec3::from(base_axis) * rng.random_range(0.0..std::f64::consts::PI)));
    let axis = Vec3::from(axis);
    let src = grid();
    let weights = vec![1.0; src.len()];
    let frames = (0..FRAMES)
        .map(|f| {
            let t = f as f64 / (FRAMES - 1) as f64;
            let rotation = axis_angle_to_matrix(&(axis * (SWEEP_ANGLE * t))) * base;
            let p = ramp(t);
            let d = Mat3::from_diagonal(&Vec3::new(1.0, p, 1.0));
            CoplanarFrame {
                dst: src.iter().map(|a| rotation * d * a).collect(),
                src: src.clone(),
                weights: weights.clone(),
                rotation,
                perturbation: p,
            }
        })
        .collect();
    CoplanarFixture { frames }
}

/// Sweep `p` linearly from `+1` to `-1`.
pub fn coplanar_fixture(seed: u64) -> CoplanarFixture {
    build(seed, |t| 1.0 - 2.0 * t)
}

/// Same path with `p` in `[0.5, 1]`: the covariance stays well conditioned.
pub fn coplanar_fixture_well_conditioned(seed: u64) -> CoplanarFixture {
    build(seed, |t| 1.0 - 0.5 * t)
}
