//! Closed-form skeleton fitting: sparse joint regression then two-stage
//! rotation alignment.

pub mod kabsch;
pub mod regressor;
pub mod skeleton_fit;

pub use kabsch::{kabsch_from_covariance, kabsch_rotation, svd_polar};
pub use regressor::{
    build_joint_regressor, build_joint_regressor_with, JointRegressor, RegressorConfig, SupportRule,
};
pub use skeleton_fit::{
    fit_joint_rotations, fit_skeleton, FitConfig, FitStats, SkeletonFitter, SkeletonState, StateSource,
};
