//! Random poses and smooth motions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, UnitSphere};

use crate::asset::{LocalRotations, MotionSequence, PoseFrame, RigAsset, RotationEncoding};
use crate::error::{Error, Result};
use crate::geom::Vec3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseLimits {
    /// Largest rotation angle per joint, radians.
    pub max_angle: f64,
    /// Largest root translation per axis, meters.
    pub max_translation: f64,
}

impl PoseLimits {
    pub fn new(max_angle: f64) -> Self {
        Self {
            max_angle,
            max_translation: 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=std::f64::consts::PI).contains(&self.max_angle) {
            return Err(Error::InvalidConfig(format!("max angle {} outside [0, pi]", self.max_angle)));
        }
        if !(self.max_translation >= 0.0 && self.max_translation.is_finite()) {
            return Err(Error::InvalidConfig("max translation must be >= 0".into()));
        }
        Ok(())
    }
}

fn frame(rotations: Vec<Vec3>, root_translation: Vec3) -> PoseFrame {
    PoseFrame {
        rotations: LocalRotations::AxisAngle(rotations),
        root_translation,
        joint_orient: true,
    }
}

/// Uniform axis, uniform angle in `[0, max_angle]` for every joint.
pub fn sample_pose(rig: &RigAsset, seed: u64, limits: &PoseLimits) -> Result<PoseFrame> {
    limits.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rotations = (0..rig.joint_count())
        .map(|_| {
            let axis: [f64; 3] = UnitSphere.sample(&mut rng);
            let angle = if limits.max_angle > 0.0 {
                rng.random_range(0.0..=limits.max_angle)
            } else {
                0.0
            };
            Vec3::from(axis) * angle
        })
        .collect();
    let t = limits.max_translation;
    let mut coord = || if t > 0.0 { rng.random_range(-t..=t) } else { 0.0 };
    let root = Vec3::new(coord(), coord(), coord());
    Ok(frame(rotations, root))
}

/// Low-pass-filtered random walk in axis-angle space.
///
/// Each joint's rotation vector follows two cascaded one-pole filters of
/// white noise, rescaled to unit stationary spread and clamped to the
/// angle limit. `smoothness` in `[0, 1)` is the filter pole: higher is
/// smoother.
pub fn sample_motion(
    rig: &RigAsset,
    seed: u64,
    frames: usize,
    smoothness: f64,
    limits: &PoseLimits,
) -> Result<MotionSequence> {
    limits.validate()?;
    if !(0.0..1.0).contains(&smoothness) {
        return Err(Error::InvalidConfig(format!("smoothness {smoothness} outside [0, 1)")));
    }
    let jc = rig.joint_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = smoothness;
    // stationary std of the cascade output for unit input noise
    let gain = (1.0 - a).powi(2) * ((1.0 + a * a) / (1.0 - a * a).powi(3)).sqrt();
    let mut stage1 = vec![Vec3::zeros(); jc + 1];
    let mut stage2 = vec![Vec3::zeros(); jc + 1];
    let mut normal = || Vec3::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal));
    let mut out = Vec::with_capacity(frames);
    for _ in 0..frames {
        for (s1, s2) in stage1.iter_mut().zip(stage2.iter_mut()) {
            *s1 = *s1 * a + normal() * (1.0 - a);
            *s2 = *s2 * a + *s1 * (1.0 - a);
        }
        let rot = stage2[..jc]
            .iter()
            .map(|y| {
                let v = y / gain * (limits.max_angle / 3.0);
                let n = v.norm();
                if n > limits.max_angle {
                    v * (limits.max_angle / n)
                } else {
                    v
                }
            })
            .collect();
        let root = stage2[jc] / gain * (limits.max_translation / 3.0);
        out.push(frame(rot, root.map(|x| x.clamp(-limits.max_translation, limits.max_translation))));
    }
    MotionSequence::new(30.0, RotationEncoding::AxisAngle, jc, out)
}
