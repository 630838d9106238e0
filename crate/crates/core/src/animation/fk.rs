//! Forward kinematics over a topologically sorted hierarchy.
//!
//! With joint orient on, joint `k`'s input rotation `θₖ` acts inside its
//! canonical local frame: `Gₖ = G_parent · L_k · Rot(θₖ)` where `L_k` is the
//! bind transform relative to the parent. The zero pose therefore reproduces
//! the bind skeleton. With joint orient off the input is the full local
//! rotation, `Gₖ = G_parent · [θₖ | offsetₖ]`; the two conventions are related
//! by `θ_full = L_k.R · θ_orient`.

use crate::asset::{PoseFrame, Skeleton};
use crate::error::{Error, Result};
use crate::fit::SkeletonState;
use crate::geom::{orthonormality_error, project_to_rotation, Mat3, Rigid, Vec3};

/// World transform per joint for one pose.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalTransforms {
    pub transforms: Vec<Rigid>,
}

impl GlobalTransforms {
    pub fn len(&self) -> usize {
        self.transforms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transforms.is_empty()
    }

    pub fn positions(&self) -> Vec<Vec3> {
        self.transforms.iter().map(|t| t.translation).collect()
    }

    /// `Gₖ · Tₖ⁻¹` per joint: the transforms blended by LBS.
    pub fn skinning(&self, bind_inverse: &[Rigid]) -> Vec<Rigid> {
        self.transforms.iter().zip(bind_inverse).map(|(g, ti)| g.compose(ti)).collect()
    }
}

/// Hierarchy plus the rest frames a pose is applied to (either the rig's
/// bind skeleton or a fitted identity skeleton).
#[derive(Debug, Clone, PartialEq)]
pub struct Kinematics {
    parents: Vec<Option<usize>>,
    rest: Vec<Rigid>,
    /// Rest transform relative to the parent's rest frame (root: absolute).
    local: Vec<Rigid>,
    rest_inverse: Vec<Rigid>,
}

impl Kinematics {
    pub fn from_skeleton(skel: &Skeleton) -> Self {
        Self::from_parts(skel.parents().to_vec(), skel.bind().to_vec())
    }

    /// Use a fitted state (world transforms in the rest shape) as the rest frames.
    pub fn from_state(skel: &Skeleton, state: &SkeletonState) -> Self {
        Self::from_parts(skel.parents().to_vec(), state.transforms())
    }

    fn from_parts(parents: Vec<Option<usize>>, rest: Vec<Rigid>) -> Self {
        // Stored rotations are f32-rounded and only orthonormal to ~1e-8;
        // snapping them keeps `Gₖ Tₖ⁻¹` an exact identity at the zero pose.
        let rest: Vec<Rigid> = rest
            .into_iter()
            .map(|t| match orthonormality_error(&t.rotation) < 1e-13 {
                true => t,
                false => Rigid::new(project_to_rotation(&t.rotation), t.translation),
            })
            .collect();
        let rest_inverse: Vec<Rigid> = rest.iter().map(Rigid::inverse).collect();
        let local = parents
            .iter()
            .enumerate()
            .map(|(k, p)| match p {
                Some(p) => rest_inverse[*p].compose(&rest[k]),
                None => rest[k],
            })
            .collect();
        Self {
            parents,
            rest,
            local,
            rest_inverse,
        }
    }

    pub fn joint_count(&self) -> usize {
        self.parents.len()
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parents
    }

    pub fn rest(&self) -> &[Rigid] {
        &self.rest
    }

    pub fn rest_inverse(&self) -> &[Rigid] {
        &self.rest_inverse
    }

    pub fn local_rest(&self) -> &[Rigid] {
        &self.local
    }

    /// Joint-orient-relative rotations from full local rotations.
    pub fn orient_relative(&self, full: &[Mat3]) -> Vec<Mat3> {
        full.iter().zip(&self.local).map(|(r, l)| l.rotation.transpose() * r).collect()
    }

    /// Full local rotations from joint-orient-relative ones.
    pub fn orient_absolute(&self, relative: &[Mat3]) -> Vec<Mat3> {
        relative.iter().zip(&self.local).map(|(r, l)| l.rotation * r).collect()
    }

    /// Decode a pose into joint-orient-relative rotation matrices.
    pub fn relative_rotations(&self, pose: &PoseFrame) -> Result<Vec<Mat3>> {
        pose.check_joint_count(self.joint_count())
            .map_err(|_| Error::EncodingMismatch(format!(
                "pose has {} rotations, skeleton has {} joints",
                pose.joint_count(),
                self.joint_count()
            )))?;
        let m = pose.matrices()?;
        Ok(if pose.joint_orient { m } else { self.orient_relative(&m) })
    }

    pub fn forward(&self, pose: &PoseFrame) -> Result<GlobalTransforms> {
        let rel = self.relative_rotations(pose)?;
        Ok(self.forward_relative(&rel, &pose.root_translation))
    }

    /// FK from joint-orient-relative rotations; single parent-first pass.
    pub fn forward_relative(&self, rel: &[Mat3], root_translation: &Vec3) -> GlobalTransforms {
        let mut g: Vec<Rigid> = Vec::with_capacity(rel.len());
        for (k, r) in rel.iter().enumerate() {
            let l = &self.local[k];
            let local = Rigid::new(l.rotation * r, l.translation);
            let gk = match self.parents[k] {
                Some(p) => g[p].compose(&local),
                None => Rigid::new(local.rotation, local.translation + root_translation),
            };
            g.push(gk);
        }
        GlobalTransforms { transforms: g }
    }
}

/// Forward kinematics against the rig's bind skeleton.
pub fn forward_kinematics(skel: &Skeleton, pose: &PoseFrame) -> Result<GlobalTransforms> {
    Kinematics::from_skeleton(skel).forward(pose)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asset::LocalRotations;
    use crate::geom::axis_angle_to_matrix;

    fn chain() -> Skeleton {
        let r90 = axis_angle_to_matrix(&Vec3::new(0.0, 0.0, std::f64::consts::FRAC_PI_2));
        Skeleton::new(
            vec!["root".into(), "a".into(), "b".into()],
            vec![None, Some(0), Some(1)],
            vec![
                Rigid::new(Mat3::identity(), Vec3::new(0.0, 1.0, 0.0)),
                Rigid::new(r90, Vec3::new(0.0, 1.5, 0.0)),
                Rigid::new(r90, Vec3::new(0.0, 2.0, 0.1)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn zero_pose_is_bind() {
        let s = chain();
        let g = forward_kinematics(&s, &PoseFrame::zero(3)).unwrap();
        for (a, b) in g.transforms.iter().zip(s.bind()) {
            assert!((a.rotation - b.rotation).norm() < 1e-15);
            assert!((a.translation - b.translation).norm() < 1e-15);
        }
    }

    #[test]
    fn root_translation_shifts_everything() {
        let s = chain();
        let mut p = PoseFrame::zero(3);
        p.root_translation = Vec3::new(0.0, 0.0, 1.0);
        let g = forward_kinematics(&s, &p).unwrap();
        for (a, b) in g.transforms.iter().zip(s.bind()) {
            assert_eq!(a.translation - b.translation, Vec3::new(0.0, 0.0, 1.0));
        }
    }

    #[test]
    fn orient_off_matches_orient_on() {
        let s = chain();
        let kin = Kinematics::from_skeleton(&s);
        let rel: Vec<Mat3> = [0.3, -0.2, 0.7]
            .iter()
            .map(|&a| axis_angle_to_matrix(&Vec3::new(a, 0.1, -a)))
            .collect();
        let on = PoseFrame::from_matrices(rel.clone(), Vec3::new(0.1, 0.0, 0.0));
        let mut off = PoseFrame::from_matrices(kin.orient_absolute(&rel), Vec3::new(0.1, 0.0, 0.0));
        off.joint_orient = false;
        let (a, b) = (kin.forward(&on).unwrap(), kin.forward(&off).unwrap());
        for (x, y) in a.transforms.iter().zip(&b.transforms) {
            assert!((x.rotation - y.rotation).norm() < 1e-12);
            assert!((x.translation - y.translation).norm() < 1e-12);
        }
    }

    #[test]
    fn wrong_count_is_encoding_mismatch() {
        let s = chain();
        let p = PoseFrame {
            rotations: LocalRotations::AxisAngle(vec![Vec3::zeros(); 2]),
            root_translation: Vec3::zeros(),
            joint_orient: true,
        };
        assert!(matches!(forward_kinematics(&s, &p), Err(Error::EncodingMismatch(_))));
    }
}
