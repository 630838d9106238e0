//! Naive dense skinning oracle.
//!
//! Homogeneous 4×4 matrices, a dense `N × J` weight table and general
//! matrix inverses: slow and obvious on purpose. Shares no code with
//! `animation` beyond reading the rig's raw arrays.

use nalgebra::{Matrix4, Rotation3, Vector3, Vector4};

use crate::asset::{LocalRotations, PoseFrame, RigAsset};
use crate::error::{Error, Result};
use crate::geom::{Rigid, Vec3};

fn homogeneous(r: &Rigid) -> Matrix4<f64> {
    let mut m = Matrix4::identity();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&r.rotation);
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(&r.translation);
    m
}

fn rotation4(r: &nalgebra::Matrix3<f64>) -> Matrix4<f64> {
    let mut m = Matrix4::identity();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(r);
    m
}

#[derive(Debug, Clone)]
pub struct ReferenceSkinner {
    parents: Vec<Option<usize>>,
    rest: Vec<Matrix4<f64>>,
    /// Row-major `N × J`.
    weights: Vec<f64>,
    joints: usize,
}

impl ReferenceSkinner {
    /// Skin against `frames` (world joint frames of the rest shape); pass
    /// the bind skeleton for the canonical shape.
    pub fn new(rig: &RigAsset, frames: &[Rigid]) -> Result<Self> {
        let jc = rig.joint_count();
        if frames.len() != jc {
            return Err(Error::JointCountMismatch {
                expected: jc,
                found: frames.len(),
            });
        }
        let n = rig.vertex_count();
        let mut weights = vec![0.0; n * jc];
        let w = rig.weights();
        for i in 0..n {
            for (k, v) in w.row(i) {
                weights[i * jc + k] += v;
            }
        }
        Ok(Self {
            parents: rig.skeleton().parents().to_vec(),
            rest: frames.iter().map(homogeneous).collect(),
            weights,
            joints: jc,
        })
    }

    pub fn bind(rig: &RigAsset) -> Result<Self> {
        Self::new(rig, rig.skeleton().bind())
    }

    fn rotations(pose: &PoseFrame) -> Vec<nalgebra::Matrix3<f64>> {
        match &pose.rotations {
            LocalRotations::AxisAngle(v) => v
                .iter()
                .map(|a| Rotation3::from_scaled_axis(Vector3::new(a.x, a.y, a.z)).into_inner())
                .collect(),
            LocalRotations::Matrix(m) => m.clone(),
            LocalRotations::SixD(x) => x
                .iter()
                .map(|x| {
                    let a = Vector3::new(x[0], x[1], x[2]).normalize();
                    let b = Vector3::new(x[3], x[4], x[5]);
                    let b = (b - a * a.dot(&b)).normalize();
                    nalgebra::Matrix3::from_columns(&[a, b, a.cross(&b)])
                })
                .collect(),
        }
    }

    /// World joint matrices for `pose`.
    pub fn globals(&self, pose: &PoseFrame) -> Result<Vec<Matrix4<f64>>> {
        if pose.joint_count() != self.joints {
            return Err(Error::JointCountMismatch {
                expected: self.joints,
                found: pose.joint_count(),
            });
        }
        let rots = Self::rotations(pose);
        let mut g: Vec<Matrix4<f64>> = Vec::with_capacity(self.joints);
        for k in 0..self.joints {
            // joint frame relative to its parent in the rest shape
            let offset = match self.parents[k] {
                Some(p) => self.rest[p].try_inverse().expect("rigid frame") * self.rest[k],
                None => self.rest[k],
            };
            let local = if pose.joint_orient {
                offset * rotation4(&rots[k])
            } else {
                // absolute local rotation replaces the rest orientation
                let mut m = rotation4(&rots[k]);
                m.fixed_view_mut::<3, 1>(0, 3).copy_from(&offset.fixed_view::<3, 1>(0, 3));
                m
            };
            let world = match self.parents[k] {
                Some(p) => g[p] * local,
                None => {
                    let mut t = Matrix4::identity();
                    t.fixed_view_mut::<3, 1>(0, 3).copy_from(&pose.root_translation);
                    t * local
                }
            };
            g.push(world);
        }
        Ok(g)
    }

    /// `v'ᵢ = Σₖ wᵢₖ Gₖ (Tₖ)⁻¹ vᵢ` over every joint, zero weights included.
    pub fn pose(&self, rest: &[Vec3], pose: &PoseFrame) -> Result<Vec<Vec3>> {
        if rest.len() * self.joints != self.weights.len() {
            return Err(Error::SizeMismatch {
                what: "rest vertices",
                expected: self.weights.len() / self.joints.max(1),
                found: rest.len(),
            });
        }
        let g = self.globals(pose)?;
        let skin: Vec<Matrix4<f64>> = g
            .iter()
            .zip(&self.rest)
            .map(|(g, r)| g * r.try_inverse().expect("rigid frame"))
            .collect();
        Ok(rest
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let h = Vector4::new(v.x, v.y, v.z, 1.0);
                let mut acc = Vector4::zeros();
                for (k, m) in skin.iter().enumerate() {
                    acc += m * h * self.weights[i * self.joints + k];
                }
                Vec3::new(acc.x, acc.y, acc.z)
            })
            .collect())
    }
}
