//! Pose recovery from posed vertices: skeleton-fit initialization,
//! hierarchical inverse LBS, and optional gradient refinement.
//!
//! All stages work against one identity (rest shape plus fitted skeleton)
//! held by an [`Inverter`]. Recovered poses are joint-orient-relative.

mod analytical;
mod autograd;
pub mod config;
pub mod newton_schulz;

use serde::Serialize;

pub use config::{AutogradConfig, InversionConfig, Mode, RegionWeights, Schedule};
pub use newton_schulz::{inf_norm, newton_schulz_polar, NsConfig, Polar, PolarStatus};

use crate::animation::{PoseOptions, Poser};
use crate::asset::{PoseFrame, RigAsset};
use crate::error::{Error, Result};
use crate::fit::{FitConfig, SkeletonFitter, SkeletonState};
use crate::geom::{Mat3, Vec3};

/// Skeleton-fit estimate of a posed mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct InitEstimate {
    /// World transforms fitted into the posed vertices.
    pub state: SkeletonState,
    pub pose: PoseFrame,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JointResidual {
    /// Vertices in the joint's subtree selection.
    pub selected: usize,
    /// Mean distance between observed and re-posed selected vertices (m).
    pub mean: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FlagKind {
    EmptySelection,
    ZeroCovariance,
    ImproperIncrement,
    NotConverged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct JointFlag {
    pub joint: usize,
    pub pass: usize,
    pub kind: FlagKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AutogradTrace {
    pub iterations: usize,
    pub initial_loss: f64,
    pub best_loss: f64,
    pub final_loss: f64,
    /// Iteration that produced the returned pose (0 = the warm start).
    pub best_iteration: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub passes_run: usize,
    pub joint_solves: usize,
    pub ns_iterations_total: usize,
    pub ns_iterations_max: usize,
    pub flags: Vec<JointFlag>,
    pub autograd: Option<AutogradTrace>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InversionResult {
    pub pose: PoseFrame,
    /// Mean distance between observed and re-posed vertices (m).
    pub mean_error: f64,
    pub residuals: Vec<JointResidual>,
    pub diagnostics: Diagnostics,
}

/// Fitter settings for posed input: stage-2a clouds weighted by `w⁸`.
pub fn init_fit_config() -> FitConfig {
    FitConfig {
        weight_power: 8.0,
        centered: true,
        ..FitConfig::default()
    }
}

/// One identity prepared for repeated inversion.
#[derive(Debug, Clone)]
pub struct Inverter<'a> {
    poser: Poser<'a>,
    fitter: SkeletonFitter,
    /// Per joint: every vertex with positive skinning mass over the subtree.
    masses: Vec<Vec<(u32, f64)>>,
    subtrees: Vec<Vec<bool>>,
    finger: Vec<bool>,
}

impl<'a> Inverter<'a> {
    /// Invert poses of the rig's own bind shape.
    pub fn bind(rig: &'a RigAsset) -> Result<Self> {
        let fitter = SkeletonFitter::with_config(rig, &init_fit_config())?;
        Self::from_poser(Poser::bind(rig), fitter)
    }

    /// Invert poses of the identity with rest shape `rest`.
    pub fn new(rig: &'a RigAsset, rest: &[Vec3]) -> Result<Self> {
        let poser = Poser::new(rig, rest)?;
        let fitter = SkeletonFitter::with_config(rig, &init_fit_config())?;
        Self::from_poser(poser, fitter)
    }

    /// `fitter` is re-anchored on the poser's rest shape and skeleton.
    pub fn from_poser(poser: Poser<'a>, fitter: SkeletonFitter) -> Result<Self> {
        let fitter = fitter.rereferenced(poser.rest(), poser.state())?;
        let rig = poser.rig();
        let skel = rig.skeleton();
        let jc = skel.joint_count();
        let mut masses = vec![Vec::new(); jc];
        let mut acc = vec![0.0; jc];
        for i in 0..rig.vertex_count() {
            let mut touched = Vec::new();
            for (j, w) in rig.weights().row(i) {
                let mut a = Some(j);
                while let Some(k) = a {
                    if acc[k] == 0.0 {
                        touched.push(k);
                    }
                    acc[k] += w;
                    a = skel.parent(k);
                }
            }
            touched.sort_unstable();
            for k in touched {
                masses[k].push((i as u32, std::mem::take(&mut acc[k])));
            }
        }
        Ok(Self {
            subtrees: (0..jc).map(|k| skel.subtree_mask(k)).collect(),
            finger: (0..jc).map(|k| skel.is_finger(k)).collect(),
            poser,
            fitter,
            masses,
        })
    }

    pub fn poser(&self) -> &Poser<'a> {
        &self.poser
    }

    pub fn rig(&self) -> &'a RigAsset {
        self.poser.rig()
    }

    pub fn joint_count(&self) -> usize {
        self.subtrees.len()
    }

    fn check_vertices(&self, posed: &[Vec3]) -> Result<()> {
        let n = self.rig().vertex_count();
        if posed.len() != n {
            return Err(Error::SizeMismatch {
                what: "posed vertices",
                expected: n,
                found: posed.len(),
            });
        }
        Ok(())
    }

    /// Vertices whose subtree mass for `k` reaches `tau`, with that mass.
    fn selection(&self, k: usize, tau: f64) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.masses[k].iter().filter(move |&&(_, s)| s >= tau).map(|&(i, s)| (i as usize, s))
    }

    /// Fit the skeleton into the posed vertices and read off local rotations.
    pub fn init(&self, posed: &[Vec3]) -> Result<InitEstimate> {
        self.check_vertices(posed)?;
        let state = self.fitter.fit(posed)?;
        let kin = self.poser.kinematics();
        let local = kin.local_rest();
        let rel: Vec<Mat3> = (0..self.joint_count())
            .map(|k| {
                let parent = match kin.parents()[k] {
                    Some(p) => state.rotations[p],
                    None => Mat3::identity(),
                };
                local[k].rotation.transpose() * parent.transpose() * state.rotations[k]
            })
            .collect();
        let root_translation = state.positions[0] - kin.rest()[0].translation;
        Ok(InitEstimate {
            pose: PoseFrame::from_matrices(rel, root_translation),
            state,
        })
    }

    /// Re-pose `pose` and compare against `posed`.
    fn evaluate(&self, posed: &[Vec3], pose: &PoseFrame, config: &InversionConfig) -> Result<(f64, Vec<JointResidual>)> {
        let opts = PoseOptions {
            correctives: config.correctives,
        };
        let pred = self.poser.pose(pose, opts)?;
        let err: Vec<f64> = pred.iter().zip(posed).map(|(a, b)| (a - b).norm()).collect();
        let mean = err.iter().sum::<f64>() / err.len().max(1) as f64;
        let residuals = (0..self.joint_count())
            .map(|k| {
                let (mut n, mut sum, mut max) = (0, 0.0, 0.0f64);
                for (i, _) in self.selection(k, config.tau) {
                    n += 1;
                    sum += err[i];
                    max = max.max(err[i]);
                }
                JointResidual {
                    selected: n,
                    mean: if n > 0 { sum / n as f64 } else { 0.0 },
                    max,
                }
            })
            .collect();
        Ok((mean, residuals))
    }

    fn finish(&self, posed: &[Vec3], pose: PoseFrame, diagnostics: Diagnostics, config: &InversionConfig) -> Result<InversionResult> {
        let (mean_error, residuals) = self.evaluate(posed, &pose, config)?;
        Ok(InversionResult {
            pose,
            mean_error,
            residuals,
            diagnostics,
        })
    }

    /// Initialization only, packaged as a result.
    pub fn invert_init(&self, posed: &[Vec3], config: &InversionConfig) -> Result<InversionResult> {
        let init = self.init(posed)?;
        self.finish(posed, init.pose, Diagnostics::default(), config)
    }

    /// Initialization followed by the configured sweeps.
    pub fn invert_analytical(&self, posed: &[Vec3], config: &InversionConfig) -> Result<InversionResult> {
        config.validate()?;
        let init = self.init(posed)?;
        self.refine_analytical(posed, &init.pose, config)
    }

    /// Full pipeline. `source_topology` names a registered correspondence
    /// that maps `posed` onto the canonical topology first.
    pub fn invert(&self, posed: &[Vec3], source_topology: Option<&str>, config: &InversionConfig) -> Result<InversionResult> {
        config.validate()?;
        let canonical;
        let posed = match source_topology {
            Some(id) => {
                canonical = self.rig().correspondence(id)?.apply(posed)?;
                &canonical[..]
            }
            None => posed,
        };
        match config.mode {
            Mode::Init => self.invert_init(posed, config),
            Mode::Analytical => self.invert_analytical(posed, config),
            Mode::Autograd => {
                let a = self.invert_analytical(posed, config)?;
                let mut r = self.invert_autograd(posed, Some(&a.pose), config)?;
                let ad = r.diagnostics.autograd.take();
                r.diagnostics = Diagnostics { autograd: ad, ..a.diagnostics };
                Ok(r)
            }
        }
    }
}

/// Skeleton-fit initialization against the rig's bind shape.
pub fn invert_init(rig: &RigAsset, posed: &[Vec3]) -> Result<InitEstimate> {
    Inverter::bind(rig)?.init(posed)
}

pub fn invert_analytical(rig: &RigAsset, posed: &[Vec3], config: &InversionConfig) -> Result<InversionResult> {
    Inverter::bind(rig)?.invert_analytical(posed, config)
}

pub fn invert_autograd(
    rig: &RigAsset,
    posed: &[Vec3],
    init: Option<&PoseFrame>,
    config: &InversionConfig,
) -> Result<InversionResult> {
    Inverter::bind(rig)?.invert_autograd(posed, init, config)
}

pub fn invert(
    rig: &RigAsset,
    posed: &[Vec3],
    source_topology: Option<&str>,
    config: &InversionConfig,
) -> Result<InversionResult> {
    Inverter::bind(rig)?.invert(posed, source_topology, config)
}
