//! Forward kinematics, corrective displacements and linear blend skinning.

pub mod correctives;
pub mod fk;
pub mod grad;
pub mod lbs;
pub mod masks;
pub mod pose_mesh;

pub use correctives::{pack_masks, CorrectivesNet, CorrectivesParts, DEFAULT_CHANNELS};
pub use fk::{forward_kinematics, GlobalTransforms, Kinematics};
pub use grad::{weighted_sq_error, Gradients, PoseParams, SkinningModel};
pub use lbs::{lbs_pose, lbs_with_skinning};
pub use masks::{derive_corrective_masks, CorrectiveMasks, MASK_SEED_WEIGHT};
pub use pose_mesh::{pose_mesh, pose_mesh_batch, PoseOptions, Poser};

/// Apply a correctives net to a pose (joint-orient-relative after decoding).
pub fn apply_correctives(
    net: &CorrectivesNet,
    kin: &Kinematics,
    pose: &crate::asset::PoseFrame,
) -> crate::Result<Vec<crate::geom::Vec3>> {
    net.forward(&kin.relative_rotations(pose)?)
}
