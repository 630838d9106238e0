//! Analytical skeleton fitting: regressed joint positions, then per-joint
//! rotations from a vertex-cloud Procrustes (stage 2a) refined by aligning
//! child bone directions (stage 2b).

use rayon::prelude::*;

use super::kabsch::{kabsch_rotation, weighted_procrustes};
use super::regressor::{build_joint_regressor_with, JointRegressor, RegressorConfig};
use crate::asset::RigAsset;
use crate::error::{Error, Result};
use crate::geom::{shortest_arc, Mat3, Rigid, Vec3};

#[derive(Debug, Clone, Copy)]
pub struct FitConfig {
    /// Minimum skinning weight for a vertex to enter the stage-2a cloud.
    pub support_threshold: f64,
    /// Stage-2a Procrustes weights are `w_ik^weight_power`. The default 1
    /// uses skinning weights as given; larger values favour rigidly bound
    /// vertices, which matters when the input is posed rather than at rest.
    pub weight_power: f64,
    /// Remove weighted centroids before the stage-2a Procrustes instead of
    /// measuring both clouds from the joint. Makes the rotation insensitive
    /// to errors in the regressed joint position.
    pub centered: bool,
    pub regressor: RegressorConfig,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            support_threshold: 1e-3,
            weight_power: 1.0,
            centered: false,
            regressor: RegressorConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateSource {
    Fitted,
    Posed,
}

/// World-space rigid transform per joint.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonState {
    pub rotations: Vec<Mat3>,
    pub positions: Vec<Vec3>,
    pub source: StateSource,
    /// Joints whose stage-2a covariance was degenerate and fell back to the
    /// reference orientation.
    pub degenerate_joints: Vec<usize>,
}

impl SkeletonState {
    pub fn from_transforms(transforms: &[Rigid], source: StateSource) -> Self {
        Self {
            rotations: transforms.iter().map(|t| t.rotation).collect(),
            positions: transforms.iter().map(|t| t.translation).collect(),
            source,
            degenerate_joints: Vec::new(),
        }
    }

    pub fn joint_count(&self) -> usize {
        self.rotations.len()
    }

    pub fn transform(&self, k: usize) -> Rigid {
        Rigid::new(self.rotations[k], self.positions[k])
    }

    pub fn transforms(&self) -> Vec<Rigid> {
        (0..self.joint_count()).map(|k| self.transform(k)).collect()
    }
}

/// Work done by one fit; constant for a given rig regardless of input.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FitStats {
    pub procrustes_solves: usize,
    pub arc_solves: usize,
}

/// Precomputed state for repeated fits against one reference skeleton.
#[derive(Debug, Clone)]
pub struct SkeletonFitter {
    regressor: JointRegressor,
    parents: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    ref_vertices: Vec<Vec3>,
    ref_joints: Vec<Vec3>,
    ref_rotations: Vec<Mat3>,
    /// Stage-2a cloud per joint: (vertex, weight).
    supports: Vec<Vec<(usize, f64)>>,
    centered: bool,
}

impl SkeletonFitter {
    pub fn new(rig: &RigAsset) -> Result<Self> {
        Self::with_config(rig, &FitConfig::default())
    }

    pub fn with_config(rig: &RigAsset, config: &FitConfig) -> Result<Self> {
        let skel = rig.skeleton();
        let regressor = match rig.regressor() {
            Some(r) => r.clone(),
            None => build_joint_regressor_with(rig.mesh().vertices(), skel, rig.weights(), &config.regressor)?,
        };
        let jc = skel.joint_count();
        Ok(Self {
            regressor,
            parents: skel.parents().to_vec(),
            children: (0..jc).map(|k| skel.children(k).to_vec()).collect(),
            ref_vertices: rig.mesh().vertices().to_vec(),
            ref_joints: skel.bind_positions(),
            ref_rotations: skel.bind().iter().map(|t| t.rotation).collect(),
            supports: rig
                .weights()
                .columns(jc, config.support_threshold)
                .into_iter()
                .map(|col| col.into_iter().map(|(i, w)| (i, w.powf(config.weight_power))).collect())
                .collect(),
            centered: config.centered,
        })
    }

    /// Re-anchor stage 2 on another rest shape and its fitted skeleton, so
    /// that fitting `reference_vertices` returns `reference` unchanged.
    pub fn rereferenced(&self, reference_vertices: &[Vec3], reference: &SkeletonState) -> Result<Self> {
        if reference_vertices.len() != self.ref_vertices.len() {
            return Err(Error::SizeMismatch {
                what: "reference vertices",
                expected: self.ref_vertices.len(),
                found: reference_vertices.len(),
            });
        }
        let mut f = self.clone();
        f.ref_vertices = reference_vertices.to_vec();
        f.ref_joints = reference.positions.clone();
        f.ref_rotations = reference.rotations.clone();
        Ok(f)
    }

    pub fn regressor(&self) -> &JointRegressor {
        &self.regressor
    }

    pub fn joint_count(&self) -> usize {
        self.parents.len()
    }

    pub fn reference_rotations(&self) -> &[Mat3] {
        &self.ref_rotations
    }

    pub fn reference_joints(&self) -> &[Vec3] {
        &self.ref_joints
    }

    pub fn regress_joints(&self, vertices: &[Vec3]) -> Result<Vec<Vec3>> {
        self.regressor.regress(vertices)
    }

    pub fn fit(&self, rest_vertices: &[Vec3]) -> Result<SkeletonState> {
        let joints = self.regressor.regress(rest_vertices)?;
        self.fit_joint_rotations(rest_vertices, &joints)
    }

    pub fn fit_with_stats(&self, rest_vertices: &[Vec3]) -> Result<(SkeletonState, FitStats)> {
        let joints = self.regressor.regress(rest_vertices)?;
        self.fit_rotations_inner(rest_vertices, &joints)
    }

    pub fn fit_joint_rotations(&self, rest_vertices: &[Vec3], joints: &[Vec3]) -> Result<SkeletonState> {
        self.fit_rotations_inner(rest_vertices, joints).map(|(s, _)| s)
    }

    fn fit_rotations_inner(&self, verts: &[Vec3], joints: &[Vec3]) -> Result<(SkeletonState, FitStats)> {
        let jc = self.joint_count();
        if joints.len() != jc {
            return Err(Error::SizeMismatch {
                what: "joint positions",
                expected: jc,
                found: joints.len(),
            });
        }
        if verts.len() != self.ref_vertices.len() {
            return Err(Error::SizeMismatch {
                what: "rest vertices",
                expected: self.ref_vertices.len(),
                found: verts.len(),
            });
        }

        // stage 2a + 2b, independent per joint
        let per_joint: Vec<JointFit> = (0..jc).into_par_iter().map(|k| self.fit_one(k, verts, joints)).collect();

        let mut stats = FitStats::default();
        let mut rotations = vec![Mat3::identity(); jc];
        let mut degenerate = Vec::new();
        for (k, jf) in per_joint.iter().enumerate() {
            stats.procrustes_solves += jf.procrustes;
            stats.arc_solves += jf.arcs;
            if jf.degenerate {
                degenerate.push(k);
            }
            rotations[k] = match jf.delta {
                Some(d) => d * self.ref_rotations[k],
                // unskinned leaf helper: follow the parent (parents come first)
                None => match self.parents[k] {
                    Some(p) => rotations[p] * self.ref_rotations[p].transpose() * self.ref_rotations[k],
                    None => self.ref_rotations[k],
                },
            };
        }
        Ok((
            SkeletonState {
                rotations,
                positions: joints.to_vec(),
                source: StateSource::Fitted,
                degenerate_joints: degenerate,
            },
            stats,
        ))
    }

    fn fit_one(&self, k: usize, verts: &[Vec3], joints: &[Vec3]) -> JointFit {
        let mut out = JointFit::default();
        let cloud = &self.supports[k];
        let children = &self.children[k];
        if cloud.is_empty() && children.is_empty() {
            return out;
        }
        let r_init = if cloud.is_empty() {
            Mat3::identity()
        } else {
            out.procrustes += 1;
            let w: Vec<f64> = cloud.iter().map(|&(_, w)| w).collect();
            let (src_pivot, dst_pivot) = if self.centered {
                let total: f64 = w.iter().sum();
                let mean = |pts: &[Vec3]| cloud.iter().map(|&(i, w)| pts[i] * w).sum::<Vec3>() / total;
                (mean(&self.ref_vertices), mean(verts))
            } else {
                (self.ref_joints[k], joints[k])
            };
            let src: Vec<Vec3> = cloud.iter().map(|&(i, _)| self.ref_vertices[i] - src_pivot).collect();
            let dst: Vec<Vec3> = cloud.iter().map(|&(i, _)| verts[i] - dst_pivot).collect();
            match kabsch_rotation(&src, &dst, &w) {
                Ok(r) => r,
                Err(_) => {
                    out.degenerate = true;
                    Mat3::identity()
                }
            }
        };

        let bones: Vec<(Vec3, Vec3)> = children
            .iter()
            .map(|&c| (r_init * (self.ref_joints[c] - self.ref_joints[k]), joints[c] - joints[k]))
            .filter(|(a, b)| a.norm() > 1e-9 && b.norm() > 1e-9)
            .map(|(a, b)| (a.normalize(), b.normalize()))
            .collect();
        let r_align = match bones.len() {
            0 => Mat3::identity(),
            1 => {
                out.arcs += 1;
                shortest_arc(&bones[0].0, &bones[0].1)
            }
            _ => {
                out.procrustes += 1;
                let (src, dst): (Vec<Vec3>, Vec<Vec3>) = bones.iter().cloned().unzip();
                weighted_procrustes(&src, &dst, &vec![1.0; src.len()], 2).unwrap_or_else(|_| {
                    // parallel child bones: align the mean direction
                    let a: Vec3 = src.iter().sum();
                    let b: Vec3 = dst.iter().sum();
                    shortest_arc(&a, &b)
                })
            }
        };
        out.delta = Some(r_align * r_init);
        out
    }
}

#[derive(Debug, Default)]
struct JointFit {
    /// `R_align · R_init`; `None` for unconstrained leaf helpers.
    delta: Option<Mat3>,
    degenerate: bool,
    procrustes: usize,
    arcs: usize,
}

/// One-shot convenience: build a fitter and fit `rest_vertices`.
pub fn fit_skeleton(rig: &RigAsset, rest_vertices: &[Vec3]) -> Result<SkeletonState> {
    SkeletonFitter::new(rig)?.fit(rest_vertices)
}

pub fn fit_joint_rotations(rig: &RigAsset, rest_vertices: &[Vec3], joints: &[Vec3]) -> Result<SkeletonState> {
    SkeletonFitter::new(rig)?.fit_joint_rotations(rest_vertices, joints)
}
