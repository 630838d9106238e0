//! Canonical data model and on-disk asset format.

pub mod io;
pub mod mesh;
pub mod pose;
pub mod rig;
pub mod skeleton;
pub mod weights;

pub use io::{
    load_correspondence, load_motion, load_obj, load_rig, load_vertex_animation, obj_string, parse_obj,
    save_correspondence, save_motion, save_obj, save_rig, save_vertex_animation,
};
pub use mesh::{Mesh, Region};
pub use pose::{LocalRotations, MotionSequence, PoseFrame, RotationEncoding};
pub use rig::RigAsset;
pub use skeleton::{Skeleton, FINGER_PREFIX};
pub use weights::SkinningWeights;
