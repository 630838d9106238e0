//! Hierarchical inverse LBS.
//!
//! For joint `k` the blended position of a selected vertex splits into the
//! part driven by joints outside `k`'s subtree and the part driven by the
//! subtree. Rotating `k` about its world position `jₖ` moves the whole
//! subtree rigidly, so with `sᵢ` the subtree mass
//!
//! ```text
//! pᵢ − outsideᵢ ≈ sᵢ jₖ + Δ (subtreeᵢ − sᵢ jₖ)
//! ```
//!
//! and `Δ` is a Procrustes problem. It is solved in `k`'s local frame and
//! applied as an increment through Newton-Schulz. The root also takes a
//! translation, so its solve removes centroids first.
//!
//! Each sample is weighted by `wᵢₖ^p`, the vertex's own skinning weight for
//! `k` raised to [`InversionConfig::own_weight_power`]. Vertices rigidly
//! bound to `k` then dominate its solve and barely depend on descendants
//! that have not been updated yet, so a parent-to-child sweep behaves almost
//! like back substitution. With `p = 0` every selected vertex counts equally;
//! that variant is correct but needs tens of sweeps to settle.

use super::newton_schulz::{newton_schulz_polar, PolarStatus};
use super::{Diagnostics, FlagKind, InversionConfig, InversionResult, Inverter, JointFlag};
use crate::asset::PoseFrame;
use crate::error::Result;
use crate::geom::{Mat3, Vec3};

#[derive(Clone, Copy)]
enum Sweep {
    Body,
    Finger,
    Global,
}

impl Inverter<'_> {
    /// Run the configured sweeps starting from `start`.
    pub fn refine_analytical(&self, posed: &[Vec3], start: &PoseFrame, config: &InversionConfig) -> Result<InversionResult> {
        self.check_vertices(posed)?;
        config.validate()?;
        let kin = self.poser.kinematics();
        let mut rel = kin.relative_rotations(start)?;
        let mut t0 = start.root_translation;
        let mut diag = Diagnostics::default();

        let s = config.schedule;
        let passes = std::iter::repeat_n(Sweep::Body, s.body)
            .chain(std::iter::repeat_n(Sweep::Finger, s.finger))
            .chain(std::iter::repeat_n(Sweep::Global, s.global));
        for (pass, sweep) in passes.enumerate() {
            for k in 0..self.joint_count() {
                let visit = match sweep {
                    Sweep::Body => !self.finger[k],
                    Sweep::Finger => self.finger[k],
                    Sweep::Global => true,
                };
                if visit {
                    self.solve_joint(k, pass, posed, &mut rel, &mut t0, config, &mut diag);
                }
            }
            diag.passes_run += 1;
        }
        let pose = PoseFrame::from_matrices(rel, t0);
        self.finish(posed, pose, diag, config)
    }

    #[allow(clippy::too_many_arguments)]
    fn solve_joint(
        &self,
        k: usize,
        pass: usize,
        posed: &[Vec3],
        rel: &mut [Mat3],
        t0: &mut Vec3,
        config: &InversionConfig,
        diag: &mut Diagnostics,
    ) {
        let mut flag = |kind| diag.flags.push(JointFlag { joint: k, pass, kind });
        let kin = self.poser.kinematics();
        let g = kin.forward_relative(rel, t0).transforms;
        let rest_inv = kin.rest_inverse();
        let skin: Vec<_> = g.iter().zip(rest_inv).map(|(g, t)| g.compose(t)).collect();
        let weights = self.rig().weights();
        let rest = self.poser.rest();
        let subtree = &self.subtrees[k];

        // (residual observation, predicted subtree part, subtree mass, weight)
        let mut samples: Vec<(Vec3, Vec3, f64, f64)> = Vec::new();
        for (i, mass) in self.selection(k, config.tau) {
            let x = &rest[i];
            let (mut inside, mut outside) = (Vec3::zeros(), Vec3::zeros());
            for (j, w) in weights.row(i) {
                let v = skin[j].apply(x) * w;
                if subtree[j] {
                    inside += v;
                } else {
                    outside += v;
                }
            }
            let own = weights.get(i, k).powf(config.own_weight_power);
            samples.push((posed[i] - outside, inside, mass, own));
        }
        if samples.is_empty() {
            flag(FlagKind::EmptySelection);
            return;
        }
        if samples.iter().all(|s| s.3 == 0.0) {
            // joint drives no vertex itself: fall back to its subtree mass
            for s in &mut samples {
                s.3 = s.2;
            }
        }

        let parent = kin.parents()[k];
        let (pivot_obs, pivot_pred): (Vec<Vec3>, Vec<Vec3>) = match parent {
            Some(_) => {
                let j = g[k].translation;
                samples.iter().map(|&(_, _, s, _)| (j * s, j * s)).unzip()
            }
            None => {
                let n: f64 = samples.iter().map(|s| s.3).sum();
                let cr = samples.iter().map(|s| s.0 * s.3).sum::<Vec3>() / n;
                let cy = samples.iter().map(|s| s.1 * s.3).sum::<Vec3>() / n;
                (vec![cr; samples.len()], vec![cy; samples.len()])
            }
        };
        let mut h_world = Mat3::zeros();
        for ((r, y, _, om), (po, pp)) in samples.iter().zip(pivot_obs.iter().zip(&pivot_pred)) {
            h_world += (r - po) * (y - pp).transpose() * *om;
        }

        // world increment Δ = A rel' relᵀ Aᵀ with A the frame rel acts in
        let a = match parent {
            Some(p) => g[p].rotation * kin.local_rest()[k].rotation,
            None => kin.local_rest()[k].rotation,
        };
        let h = a.transpose() * h_world * a * rel[k];
        let polar = newton_schulz_polar(&h, &rel[k], &config.newton_schulz);
        diag.joint_solves += 1;
        diag.ns_iterations_total += polar.iterations;
        diag.ns_iterations_max = diag.ns_iterations_max.max(polar.iterations);
        match polar.status {
            PolarStatus::Converged => {}
            PolarStatus::ZeroCovariance => flag(FlagKind::ZeroCovariance),
            PolarStatus::ImproperIncrement => flag(FlagKind::ImproperIncrement),
            PolarStatus::NotConverged => flag(FlagKind::NotConverged),
        }
        let delta = a * polar.rotation * rel[k].transpose() * a.transpose();
        rel[k] = polar.rotation;
        if parent.is_none() {
            // carry the root so the predicted centroid lands on the observed one
            let (cr, cy) = (pivot_obs[0], pivot_pred[0]);
            *t0 = delta * (g[k].translation - cy) + cr - kin.local_rest()[k].translation;
        }
    }
}
