use rayon::prelude::*;

use super::fk::{GlobalTransforms, Kinematics};
use super::lbs::lbs_with_skinning;
use crate::asset::{PoseFrame, RigAsset};
use crate::error::{Error, Result};
use crate::fit::{SkeletonFitter, SkeletonState};
use crate::geom::{Mat3, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoseOptions {
    /// Add the correctives net's displacements (when the rig carries one).
    pub correctives: bool,
}

impl Default for PoseOptions {
    fn default() -> Self {
        Self { correctives: true }
    }
}

/// One identity ready to be posed: rest shape plus its fitted skeleton.
///
/// Building a `Poser` runs the skeleton fit once; every pose afterwards is
/// FK, optional correctives and LBS.
#[derive(Debug, Clone)]
pub struct Poser<'a> {
    rig: &'a RigAsset,
    rest: Vec<Vec3>,
    state: SkeletonState,
    kin: Kinematics,
}

impl<'a> Poser<'a> {
    /// Fit the skeleton into `rest` and prepare for posing.
    pub fn new(rig: &'a RigAsset, rest: &[Vec3]) -> Result<Self> {
        Self::with_fitter(rig, &SkeletonFitter::new(rig)?, rest)
    }

    pub fn with_fitter(rig: &'a RigAsset, fitter: &SkeletonFitter, rest: &[Vec3]) -> Result<Self> {
        let state = fitter.fit(rest)?;
        Self::with_state(rig, rest, state)
    }

    /// Pose `rest` against an explicit skeleton state.
    pub fn with_state(rig: &'a RigAsset, rest: &[Vec3], state: SkeletonState) -> Result<Self> {
        if rest.len() != rig.vertex_count() {
            return Err(Error::SizeMismatch {
                what: "rest vertices",
                expected: rig.vertex_count(),
                found: rest.len(),
            });
        }
        if state.joint_count() != rig.joint_count() {
            return Err(Error::JointCountMismatch {
                expected: rig.joint_count(),
                found: state.joint_count(),
            });
        }
        let kin = Kinematics::from_state(rig.skeleton(), &state);
        Ok(Self {
            rig,
            rest: rest.to_vec(),
            state,
            kin,
        })
    }

    /// The canonical bind shape on the rig's own bind skeleton.
    pub fn bind(rig: &'a RigAsset) -> Self {
        let kin = Kinematics::from_skeleton(rig.skeleton());
        let state = SkeletonState::from_transforms(rig.skeleton().bind(), crate::fit::StateSource::Posed);
        Self {
            rig,
            rest: rig.mesh().vertices().to_vec(),
            state,
            kin,
        }
    }

    pub fn rig(&self) -> &'a RigAsset {
        self.rig
    }

    pub fn rest(&self) -> &[Vec3] {
        &self.rest
    }

    pub fn state(&self) -> &SkeletonState {
        &self.state
    }

    pub fn kinematics(&self) -> &Kinematics {
        &self.kin
    }

    pub fn globals(&self, pose: &PoseFrame) -> Result<GlobalTransforms> {
        self.kin.forward(pose)
    }

    pub fn pose(&self, pose: &PoseFrame, opts: PoseOptions) -> Result<Vec<Vec3>> {
        let rel = self.kin.relative_rotations(pose)?;
        self.pose_relative(&rel, &pose.root_translation, opts)
    }

    /// Pose from joint-orient-relative rotation matrices.
    pub fn pose_relative(&self, rel: &[Mat3], root_translation: &Vec3, opts: PoseOptions) -> Result<Vec<Vec3>> {
        let g = self.kin.forward_relative(rel, root_translation);
        let skin = g.skinning(self.kin.rest_inverse());
        let weights = self.rig.weights();
        match (opts.correctives, self.rig.correctives()) {
            (true, Some(net)) => {
                let d = net.forward(rel)?;
                let shaped: Vec<Vec3> = self.rest.iter().zip(&d).map(|(v, d)| v + d).collect();
                Ok(lbs_with_skinning(&shaped, weights, &skin))
            }
            _ => Ok(lbs_with_skinning(&self.rest, weights, &skin)),
        }
    }

    /// Pose many frames of this identity; frames run in parallel.
    pub fn pose_batch(&self, poses: &[PoseFrame], opts: PoseOptions) -> Result<Vec<Vec<Vec3>>> {
        poses.par_iter().map(|p| self.pose(p, opts)).collect()
    }
}

/// Full pipeline for one frame: fit skeleton, FK, correctives, LBS.
pub fn pose_mesh(rig: &RigAsset, rest: &[Vec3], pose: &PoseFrame, opts: PoseOptions) -> Result<Vec<Vec3>> {
    Poser::new(rig, rest)?.pose(pose, opts)
}

/// Batched pipeline: one skeleton fit shared by every frame of the identity.
pub fn pose_mesh_batch(
    rig: &RigAsset,
    rest: &[Vec3],
    poses: &[PoseFrame],
    opts: PoseOptions,
) -> Result<Vec<Vec<Vec3>>> {
    Poser::new(rig, rest)?.pose_batch(poses, opts)
}
