//! Procedural capsule humanoids with known ground truth.
//!
//! Everything here is deterministic in the config and seed. The oracles
//! ([`reference`], ground-truth joints, the coplanar fixture) deliberately
//! avoid the main posing and fitting code paths.

mod capsule;
pub mod coplanar;
pub mod correctives;
mod layout;
pub mod reference;
pub mod remesh;
pub mod sampling;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::asset::{Mesh, Region, RigAsset, Skeleton, SkinningWeights};
use crate::error::{Error, Result};
use crate::geom::{quantize, quantize_vec, Rigid, Vec3};

use capsule::{sweep, Density};
use layout::{ChainKind, Layout};

pub use coplanar::{coplanar_fixture, coplanar_fixture_well_conditioned, CoplanarFixture, CoplanarFrame};
pub use correctives::{bulge_targets, distill_correctives, random_correctives};
pub use reference::ReferenceSkinner;
pub use remesh::{remesh_variant, subdivided_positions, RemeshMode, RemeshVariant};
pub use sampling::{sample_motion, sample_pose, PoseLimits};

/// Bone lengths in meters at unit scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentLengths {
    /// Pelvis to neck, split evenly over the torso joints.
    pub torso: f64,
    pub head: f64,
    pub upperarm: f64,
    /// Elbow to fingertip base; includes the hand.
    pub forearm: f64,
    /// Distal part of the forearm bone labeled as hand.
    pub hand: f64,
    pub finger: f64,
    pub thigh: f64,
    pub shin: f64,
    /// Distal part of the shin labeled as foot.
    pub foot: f64,
}

impl Default for SegmentLengths {
    fn default() -> Self {
        Self {
            torso: 0.52,
            head: 0.23,
            upperarm: 0.28,
            forearm: 0.35,
            hand: 0.10,
            finger: 0.07,
            thigh: 0.42,
            shin: 0.42,
            foot: 0.06,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    /// Seed for everything sampled from this config (identities, poses).
    pub seed: u64,
    /// Joints between the pelvis and the head.
    pub torso_joints: usize,
    pub head: bool,
    pub arms: usize,
    pub legs: usize,
    pub fingers_per_hand: usize,
    pub phalanges: usize,
    /// Joints per upper/lower limb segment.
    pub limb_subdivision: usize,
    pub lengths: SegmentLengths,
    pub radial_segments: usize,
    /// Rings per bone along a capsule.
    pub axial_segments: usize,
    /// Rings per hemispherical cap, pole excluded.
    pub cap_rings: usize,
    /// Rings each capsule extends before its first joint.
    pub lead_rings: usize,
    pub length_scale_range: [f64; 2],
    pub girth_scale_range: [f64; 2],
    /// Largest sampled rotation angle per joint, radians.
    pub max_pose_angle: f64,
}

impl Default for SynthConfig {
    /// Twelve joints, 2,562 vertices.
    fn default() -> Self {
        Self {
            seed: 7,
            torso_joints: 2,
            head: true,
            arms: 2,
            legs: 2,
            fingers_per_hand: 0,
            phalanges: 1,
            limb_subdivision: 1,
            lengths: SegmentLengths::default(),
            radial_segments: 8,
            axial_segments: 22,
            cap_rings: 4,
            lead_rings: 2,
            length_scale_range: [0.85, 1.15],
            girth_scale_range: [0.8, 1.25],
            max_pose_angle: 0.6,
        }
    }
}

impl SynthConfig {
    /// Default body plus five single-segment fingers per hand (22 joints).
    pub fn with_fingers() -> Self {
        Self {
            fingers_per_hand: 5,
            ..Self::default()
        }
    }

    /// 78 joints: a root plus 77 posable joints.
    pub fn dense() -> Self {
        Self {
            torso_joints: 6,
            limb_subdivision: 5,
            fingers_per_hand: 5,
            phalanges: 3,
            axial_segments: 4,
            ..Self::default()
        }
    }

    /// No limbs and no head: a one-joint capsule.
    pub fn single_capsule() -> Self {
        Self {
            torso_joints: 0,
            head: false,
            arms: 0,
            legs: 0,
            ..Self::default()
        }
    }

    /// Joint count the config will produce.
    pub fn joint_count(&self) -> usize {
        1 + self.torso_joints
            + self.head as usize
            + 2 * self.limb_subdivision * (self.arms + self.legs)
            + self.arms * self.fingers_per_hand * self.phalanges
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.arms > 2 || self.legs > 2 {
            return bad(format!("at most two arms and legs (got {} / {})", self.arms, self.legs));
        }
        if self.fingers_per_hand > 0 && self.arms == 0 {
            return bad("fingers need arms".into());
        }
        if self.limb_subdivision == 0 || self.phalanges == 0 {
            return bad("limb_subdivision and phalanges must be positive".into());
        }
        if self.radial_segments < 3 || self.axial_segments == 0 {
            return bad("need radial_segments >= 3 and axial_segments >= 1".into());
        }
        let l = &self.lengths;
        let all = [l.torso, l.head, l.upperarm, l.forearm, l.hand, l.finger, l.thigh, l.shin, l.foot];
        if all.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return bad("segment lengths must be positive".into());
        }
        if l.hand >= l.forearm || l.foot >= l.shin {
            return bad("hand/foot must be shorter than their bone".into());
        }
        for (name, [lo, hi]) in [("length", self.length_scale_range), ("girth", self.girth_scale_range)] {
            if !(IdentityScales::MIN <= lo && lo <= hi && hi <= IdentityScales::MAX) {
                return bad(format!("{name} scale range [{lo}, {hi}] outside [0.5, 2]"));
            }
        }
        if !(0.0..=std::f64::consts::PI).contains(&self.max_pose_angle) {
            return bad(format!("max_pose_angle {} outside [0, pi]", self.max_pose_angle));
        }
        Ok(())
    }

    fn density(&self) -> Density {
        Density {
            radial: self.radial_segments,
            axial: self.axial_segments,
            cap: self.cap_rings,
            prefix: self.lead_rings,
        }
    }
}

/// Per-segment stretch and global girth of an identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityScales {
    pub torso: f64,
    pub arms: f64,
    pub legs: f64,
    pub girth: f64,
}

impl Default for IdentityScales {
    fn default() -> Self {
        Self::uniform(1.0)
    }
}

impl IdentityScales {
    pub const MIN: f64 = 0.5;
    pub const MAX: f64 = 2.0;

    pub fn uniform(s: f64) -> Self {
        Self {
            torso: s,
            arms: s,
            legs: s,
            girth: s,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("torso", self.torso), ("arms", self.arms), ("legs", self.legs), ("girth", self.girth)] {
            if !(Self::MIN..=Self::MAX).contains(&v) {
                return Err(Error::OutOfRange(format!("{name} scale {v} outside [0.5, 2]")));
            }
        }
        Ok(())
    }

    /// Draw scales inside the config's perturbation ranges.
    pub fn sample(config: &SynthConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let [a, b] = config.length_scale_range;
        let [ga, gb] = config.girth_scale_range;
        let mut draw = |lo: f64, hi: f64| if hi > lo { rng.random_range(lo..=hi) } else { lo };
        Self {
            torso: draw(a, b),
            arms: draw(a, b),
            legs: draw(a, b),
            girth: draw(ga, gb),
        }
    }
}

/// A generated rig plus the ground truth the generator knows about it.
#[derive(Debug, Clone)]
pub struct SynthRig {
    pub rig: RigAsset,
    pub config: SynthConfig,
    /// Bind joint positions exactly as constructed.
    pub joints: Vec<Vec3>,
    layout: Layout,
}

/// Rest shape of one identity on the canonical topology.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityVariant {
    pub scales: IdentityScales,
    pub vertices: Vec<Vec3>,
    pub joints: Vec<Vec3>,
}

impl IdentityVariant {
    /// Ground-truth joint frames: bind rotations at the variant's joints.
    pub fn transforms(&self, rig: &RigAsset) -> Vec<Rigid> {
        rig.skeleton()
            .bind()
            .iter()
            .zip(&self.joints)
            .map(|(b, j)| Rigid::new(b.rotation, *j))
            .collect()
    }
}

struct Surface {
    vertices: Vec<Vec3>,
    faces: Vec<[u32; 3]>,
    /// Owning chain and axial coordinate of each vertex.
    origin: Vec<(usize, f64)>,
}

fn surface(layout: &Layout, d: Density, keep: &dyn Fn(usize) -> bool) -> Surface {
    let mut s = Surface {
        vertices: Vec::new(),
        faces: Vec::new(),
        origin: Vec::new(),
    };
    for (c, chain) in layout.chains.iter().enumerate() {
        let cap = sweep(chain, &layout.bones, d, keep);
        let base = s.vertices.len() as u32;
        s.faces.extend(cap.faces.iter().map(|f| f.map(|i| i + base)));
        s.vertices.extend(cap.vertices.iter().map(quantize_vec));
        s.origin.extend(cap.axial.iter().map(|&a| (c, a)));
    }
    s
}

fn segment_distance(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Inverse fourth-power distance to each candidate bone, top four kept,
/// small weights dropped, renormalized, stored at `f32` precision.
fn skin_weights(layout: &Layout, s: &Surface) -> Vec<Vec<(usize, f64)>> {
    s.vertices
        .iter()
        .zip(&s.origin)
        .map(|(p, &(c, _))| {
            let chain = &layout.chains[c];
            let mut cand: Vec<(usize, f64)> = chain
                .bones
                .iter()
                .copied()
                .map(|k| {
                    let b = &layout.bones[k];
                    (k, segment_distance(p, &b.head, &b.tail).max(1e-6).powi(-4))
                })
                .collect();
            cand.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            cand.truncate(4);
            let total: f64 = cand.iter().map(|c| c.1).sum();
            cand.retain(|c| c.1 / total >= 0.01);
            let total: f64 = cand.iter().map(|c| c.1).sum();
            let mut row: Vec<(usize, f64)> = cand.into_iter().map(|(k, w)| (k, quantize(w / total))).collect();
            row.sort_by_key(|c| c.0);
            row
        })
        .collect()
}

fn regions(layout: &Layout, s: &Surface) -> Vec<Region> {
    s.origin
        .iter()
        .map(|&(c, a)| {
            let chain = &layout.chains[c];
            let past = chain.region_start.is_some_and(|r| a >= r);
            match (chain.kind, past) {
                (ChainKind::Finger, _) => Region::Hands,
                (ChainKind::Arm, true) => Region::Hands,
                (ChainKind::Leg, true) => Region::Feet,
                (ChainKind::Torso, true) => Region::Head,
                _ => Region::Body,
            }
        })
        .collect()
}

fn keep_all(_: usize) -> bool {
    true
}

/// Generate a capsule-limb humanoid rig.
pub fn make_rig(config: &SynthConfig) -> Result<SynthRig> {
    config.validate()?;
    let layout = layout::build(config, &IdentityScales::default());
    let s = surface(&layout, config.density(), &keep_all);
    let joints: Vec<Vec3> = layout.bones.iter().map(|b| quantize_vec(&b.head)).collect();
    let skeleton = Skeleton::new(
        layout.bones.iter().map(|b| b.name.clone()).collect(),
        layout.bones.iter().map(|b| b.parent).collect(),
        layout
            .bones
            .iter()
            .zip(&joints)
            .map(|(b, j)| Rigid::new(layout.chains[b.chain].frame, *j))
            .collect(),
    )?;
    let weights = SkinningWeights::from_rows(&skin_weights(&layout, &s), layout.bones.len())?;
    let regions = regions(&layout, &s);
    let mesh = Mesh::new(s.vertices, s.faces, Some(regions))?;
    let rig = RigAsset::new(mesh, skeleton, weights, 1.0)?;
    Ok(SynthRig {
        rig,
        config: config.clone(),
        joints,
        layout,
    })
}

impl SynthRig {
    pub fn rest(&self) -> &[Vec3] {
        self.rig.mesh().vertices()
    }

    /// Ground-truth bone lengths (distance from each joint to its parent).
    pub fn bone_lengths(joints: &[Vec3], parents: &[Option<usize>]) -> Vec<Option<f64>> {
        parents
            .iter()
            .enumerate()
            .map(|(k, p)| p.map(|p| (joints[k] - joints[p]).norm()))
            .collect()
    }

    /// Rest shape and joints for the given proportions.
    pub fn identity(&self, scales: &IdentityScales) -> Result<IdentityVariant> {
        scales.validate()?;
        let layout = layout::build(&self.config, scales);
        let s = surface(&layout, self.config.density(), &keep_all);
        Ok(IdentityVariant {
            scales: *scales,
            vertices: s.vertices,
            joints: layout.bones.iter().map(|b| quantize_vec(&b.head)).collect(),
        })
    }

    /// Identity drawn from the config's perturbation ranges.
    pub fn random_identity(&self, seed: u64) -> Result<IdentityVariant> {
        self.identity(&IdentityScales::sample(&self.config, seed))
    }

    pub(crate) fn layout(&self) -> &Layout {
        &self.layout
    }

    pub(crate) fn density(&self) -> Density {
        self.config.density()
    }
}

/// Stretch / thicken the rig's bind shape; joints move consistently.
pub fn make_identity_variant(rig: &SynthRig, scales: &IdentityScales) -> Result<IdentityVariant> {
    rig.identity(scales)
}
