//! Gradient refinement: Adam on 6D rotations and root translation through
//! the exact FK + LBS adjoint, keeping the best iterate seen.

use super::{AutogradTrace, Diagnostics, InversionConfig, InversionResult, Inverter};
use crate::animation::{PoseParams, SkinningModel};
use crate::asset::PoseFrame;
use crate::error::{Error, Result};
use crate::geom::Vec3;

/// Loss growth over the starting loss that counts as divergence.
pub const DIVERGENCE_FACTOR: f64 = 10.0;

fn flatten(p: &PoseParams) -> Vec<f64> {
    let mut out: Vec<f64> = p.six_d.iter().flatten().copied().collect();
    out.extend(p.root_translation.iter());
    out
}

fn unflatten(x: &[f64]) -> PoseParams {
    let j = (x.len() - 3) / 6;
    PoseParams {
        six_d: (0..j).map(|k| x[6 * k..6 * k + 6].try_into().unwrap()).collect(),
        root_translation: Vec3::new(x[6 * j], x[6 * j + 1], x[6 * j + 2]),
    }
}

impl Inverter<'_> {
    /// Refine `init` by minimizing the region-weighted squared vertex error.
    ///
    /// Without `init` this refuses to run unless cold starts are allowed in
    /// the config, in which case it starts from the bind pose.
    pub fn invert_autograd(&self, posed: &[Vec3], init: Option<&PoseFrame>, config: &InversionConfig) -> Result<InversionResult> {
        self.check_vertices(posed)?;
        config.validate()?;
        let ac = &config.autograd;
        let start = match init {
            Some(p) => p.clone(),
            None if ac.allow_cold_start => PoseFrame::zero(self.joint_count()),
            None => return Err(Error::MissingInit),
        };
        let kin = self.poser.kinematics();
        let rig = self.rig();
        let model = SkinningModel {
            kinematics: kin,
            weights: rig.weights(),
            rest: self.poser.rest(),
            correctives: if config.correctives { rig.correctives() } else { None },
        };
        let vw = ac.region_weights.per_vertex(rig.mesh().regions(), rig.vertex_count());

        let rel = kin.relative_rotations(&start)?;
        let mut x = flatten(&PoseParams::from_matrices(&rel, start.root_translation));
        let (mut m, mut v) = (vec![0.0; x.len()], vec![0.0; x.len()]);
        // The iterate is chosen by plain mean vertex distance, the number the
        // result reports, so refinement can never hand back a worse frame
        // than it was given even when region weights reshape the objective.
        let (mut best_x, mut best_loss, mut best_iteration) = (x.clone(), f64::NAN, 0);
        let mut best_dist = f64::INFINITY;
        let mut initial_loss = f64::NAN;
        let mut last_loss = f64::NAN;
        for it in 0..=ac.iterations {
            let (out, loss, grad) = model.posed_loss_and_grad(&unflatten(&x), posed, &vw)?;
            if it == 0 {
                initial_loss = loss;
            }
            last_loss = loss;
            let dist = out.iter().zip(posed).map(|(a, b)| (a - b).norm()).sum::<f64>() / out.len() as f64;
            if dist < best_dist {
                best_dist = dist;
                best_loss = loss;
                best_x.clone_from(&x);
                best_iteration = it;
            }
            if !loss.is_finite() {
                break;
            }
            if it == ac.iterations {
                break;
            }
            let mut g: Vec<f64> = grad.six_d.iter().flatten().copied().collect();
            g.extend(grad.root_translation.iter());
            let t = (it + 1) as i32;
            let (c1, c2) = (1.0 - ac.beta1.powi(t), 1.0 - ac.beta2.powi(t));
            for i in 0..x.len() {
                m[i] = ac.beta1 * m[i] + (1.0 - ac.beta1) * g[i];
                v[i] = ac.beta2 * v[i] + (1.0 - ac.beta2) * g[i] * g[i];
                x[i] -= ac.step_size * (m[i] / c1) / ((v[i] / c2).sqrt() + ac.epsilon);
            }
        }

        // A transient overshoot is normal for Adam from a good start; only a
        // run that never improved and ends far above its start has diverged.
        let blown = last_loss > DIVERGENCE_FACTOR * initial_loss && last_loss > ac.divergence_floor;
        if !last_loss.is_finite() || (best_iteration == 0 && blown) {
            return Err(Error::Diverged {
                initial: initial_loss,
                last: last_loss,
            });
        }
        let pose = if best_iteration == 0 {
            // exact start, not its 6D round trip
            start
        } else {
            let best = unflatten(&best_x);
            PoseFrame::from_matrices(best.matrices()?, best.root_translation)
        };
        let mut diag = Diagnostics::default();
        diag.autograd = Some(AutogradTrace {
            iterations: ac.iterations,
            initial_loss,
            best_loss,
            final_loss: last_loss,
            best_iteration,
        });
        self.finish(posed, pose, diag, config)
    }
}
