//! Reverse-mode derivatives of the posing chain
//! `6D → Gram-Schmidt → (correctives) → FK → LBS` for a fixed skeleton.
//!
//! Every step is a small closed-form adjoint, so gradients are exact up to
//! rounding and cost about one extra forward pass.

use super::fk::Kinematics;
use super::lbs::lbs_with_skinning;
use super::CorrectivesNet;
use crate::asset::SkinningWeights;
use crate::error::{Error, Result};
use crate::geom::{matrix_from_6d, matrix_to_6d, Mat3, Rigid, Vec3};

/// Pose parameters: 6D rotation per joint (joint-orient-relative) plus root
/// translation.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseParams {
    pub six_d: Vec<[f64; 6]>,
    pub root_translation: Vec3,
}

impl PoseParams {
    pub fn from_matrices(rel: &[Mat3], root_translation: Vec3) -> Self {
        Self {
            six_d: rel.iter().map(matrix_to_6d).collect(),
            root_translation,
        }
    }

    pub fn matrices(&self) -> Result<Vec<Mat3>> {
        self.six_d
            .iter()
            .enumerate()
            .map(|(k, x)| matrix_from_6d(x).ok_or_else(|| Error::EncodingMismatch(format!("joint {k}: degenerate 6D"))))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub six_d: Vec<[f64; 6]>,
    pub root_translation: Vec3,
    pub rest: Vec<Vec3>,
}

/// Posing chain with the skeleton held fixed.
#[derive(Debug, Clone, Copy)]
pub struct SkinningModel<'a> {
    pub kinematics: &'a Kinematics,
    pub weights: &'a SkinningWeights,
    pub rest: &'a [Vec3],
    pub correctives: Option<&'a CorrectivesNet>,
}

/// Intermediates kept for the backward pass.
struct Tape {
    rel: Vec<Mat3>,
    globals: Vec<Rigid>,
    skin: Vec<Rigid>,
    shaped: Vec<Vec3>,
}

impl<'a> SkinningModel<'a> {
    fn record(&self, p: &PoseParams) -> Result<Tape> {
        let rel = p.matrices()?;
        let g = self.kinematics.forward_relative(&rel, &p.root_translation);
        let skin = g.skinning(self.kinematics.rest_inverse());
        let shaped = match self.correctives {
            Some(net) => {
                let d = net.forward(&rel)?;
                self.rest.iter().zip(&d).map(|(v, d)| v + d).collect()
            }
            None => self.rest.to_vec(),
        };
        Ok(Tape {
            rel,
            globals: g.transforms,
            skin,
            shaped,
        })
    }

    pub fn forward(&self, p: &PoseParams) -> Result<Vec<Vec3>> {
        let t = self.record(p)?;
        Ok(lbs_with_skinning(&t.shaped, self.weights, &t.skin))
    }

    /// Pull back a cotangent on posed vertices to parameters and rest shape.
    pub fn vjp(&self, p: &PoseParams, cotangent: &[Vec3]) -> Result<Gradients> {
        let t = self.record(p)?;
        Ok(self.backward(p, &t, cotangent))
    }

    /// `Σ rᵢ‖v'ᵢ − yᵢ‖² / Σ rᵢ` and its gradient.
    pub fn loss_and_grad(&self, p: &PoseParams, target: &[Vec3], vertex_weights: &[f64]) -> Result<(f64, Gradients)> {
        self.posed_loss_and_grad(p, target, vertex_weights).map(|(_, l, g)| (l, g))
    }

    /// As [`Self::loss_and_grad`], also returning the posed vertices.
    pub fn posed_loss_and_grad(
        &self,
        p: &PoseParams,
        target: &[Vec3],
        vertex_weights: &[f64],
    ) -> Result<(Vec<Vec3>, f64, Gradients)> {
        let t = self.record(p)?;
        let posed = lbs_with_skinning(&t.shaped, self.weights, &t.skin);
        let (loss, cot) = weighted_sq_error(&posed, target, vertex_weights)?;
        let grad = self.backward(p, &t, &cot);
        Ok((posed, loss, grad))
    }

    pub fn loss(&self, p: &PoseParams, target: &[Vec3], vertex_weights: &[f64]) -> Result<f64> {
        let posed = self.forward(p)?;
        weighted_sq_error(&posed, target, vertex_weights).map(|(l, _)| l)
    }

    fn backward(&self, p: &PoseParams, t: &Tape, cot: &[Vec3]) -> Gradients {
        let jc = t.rel.len();
        // LBS: v' = Σ w (A x + b)
        let mut d_a = vec![Mat3::zeros(); jc];
        let mut d_b = vec![Vec3::zeros(); jc];
        let mut d_shaped = vec![Vec3::zeros(); t.shaped.len()];
        for (i, g) in cot.iter().enumerate() {
            if *g == Vec3::zeros() {
                continue;
            }
            let x = &t.shaped[i];
            for (k, w) in self.weights.row(i) {
                let wg = g * w;
                d_a[k] += wg * x.transpose();
                d_b[k] += wg;
                d_shaped[i] += t.skin[k].rotation.transpose() * wg;
            }
        }
        // skinning transform M = G ∘ T⁻¹
        let rest_inv = self.kinematics.rest_inverse();
        let mut d_gr: Vec<Mat3> = (0..jc)
            .map(|k| d_a[k] * rest_inv[k].rotation.transpose() + d_b[k] * rest_inv[k].translation.transpose())
            .collect();
        let mut d_gt = d_b;
        // FK, children first
        let local = self.kinematics.local_rest();
        let parents = self.kinematics.parents();
        let mut d_rel = vec![Mat3::zeros(); jc];
        let mut d_root_t = Vec3::zeros();
        for k in (0..jc).rev() {
            let lr = local[k].rotation;
            match parents[k] {
                Some(pk) => {
                    let rp = t.globals[pk].rotation;
                    d_rel[k] = (rp * lr).transpose() * d_gr[k];
                    let contrib = d_gr[k] * (lr * t.rel[k]).transpose() + d_gt[k] * local[k].translation.transpose();
                    d_gr[pk] += contrib;
                    let dt = d_gt[k];
                    d_gt[pk] += dt;
                }
                None => {
                    d_rel[k] = lr.transpose() * d_gr[k];
                    d_root_t += d_gt[k];
                }
            }
        }
        // correctives read the first two columns of each decoded rotation
        let mut d_cols: Vec<[f64; 6]> = d_rel.iter().map(matrix_to_6d).collect();
        let mut d_cols3: Vec<Vec3> = d_rel.iter().map(|m| m.column(2).into_owned()).collect();
        if let Some(net) = self.correctives {
            let x: Vec<[f64; 6]> = t.rel.iter().map(matrix_to_6d).collect();
            let extra = net.vjp_6d(&x, &d_shaped).expect("shapes checked in forward");
            for (d, e) in d_cols.iter_mut().zip(extra) {
                for i in 0..6 {
                    d[i] += e[i];
                }
            }
        }
        let six_d = (0..jc)
            .map(|k| gram_schmidt_vjp(&p.six_d[k], &t.rel[k], &d_cols[k], &std::mem::take(&mut d_cols3[k])))
            .collect();
        Gradients {
            six_d,
            root_translation: d_root_t,
            rest: d_shaped,
        }
    }
}

/// Adjoint of the 6D decode given cotangents on the three output columns
/// (`d12` holds columns one and two, column-major).
fn gram_schmidt_vjp(x: &[f64; 6], r: &Mat3, d12: &[f64; 6], d3: &Vec3) -> [f64; 6] {
    let a1 = Vec3::new(x[0], x[1], x[2]);
    let a2 = Vec3::new(x[3], x[4], x[5]);
    let b1: Vec3 = r.column(0).into_owned();
    let b2: Vec3 = r.column(1).into_owned();
    let mut g1 = Vec3::new(d12[0], d12[1], d12[2]);
    let mut g2 = Vec3::new(d12[3], d12[4], d12[5]);
    // b3 = b1 × b2
    g1 += b2.cross(d3);
    g2 += d3.cross(&b1);
    // b2 = u2 / |u2|, u2 = a2 − (b1·a2) b1
    let u2 = a2 - b1 * b1.dot(&a2);
    let n2 = u2.norm();
    let du2 = (g2 - b2 * b2.dot(&g2)) / n2;
    let da2 = du2 - b1 * b1.dot(&du2);
    g1 -= du2 * b1.dot(&a2) + a2 * du2.dot(&b1);
    // b1 = a1 / |a1|
    let n1 = a1.norm();
    let da1 = (g1 - b1 * b1.dot(&g1)) / n1;
    [da1.x, da1.y, da1.z, da2.x, da2.y, da2.z]
}

/// Weighted mean squared distance and its cotangent on `a`.
pub fn weighted_sq_error(a: &[Vec3], b: &[Vec3], w: &[f64]) -> Result<(f64, Vec<Vec3>)> {
    if a.len() != b.len() || a.len() != w.len() {
        return Err(Error::SizeMismatch {
            what: "loss inputs",
            expected: a.len(),
            found: b.len().min(w.len()),
        });
    }
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(Error::EmptySelection);
    }
    let mut loss = 0.0;
    let cot = a
        .iter()
        .zip(b)
        .zip(w)
        .map(|((x, y), &wi)| {
            let e = x - y;
            loss += wi * e.norm_squared();
            e * (2.0 * wi / total)
        })
        .collect();
    Ok((loss / total, cot))
}
