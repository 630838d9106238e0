use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{axis_angle_to_matrix, is_rotation, matrix_from_6d, matrix_to_6d, matrix_to_axis_angle, Mat3, Vec3};

/// Tolerance on matrix-encoded rotations in pose data.
pub const POSE_ROTATION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationEncoding {
    AxisAngle,
    Matrix,
    #[serde(rename = "6d")]
    SixD,
}

impl RotationEncoding {
    /// Scalars per joint.
    pub fn width(self) -> usize {
        match self {
            RotationEncoding::AxisAngle => 3,
            RotationEncoding::Matrix => 9,
            RotationEncoding::SixD => 6,
        }
    }
}

/// Local joint rotations in the encoding they were supplied in.
#[derive(Debug, Clone, PartialEq)]
pub enum LocalRotations {
    AxisAngle(Vec<Vec3>),
    Matrix(Vec<Mat3>),
    SixD(Vec<[f64; 6]>),
}

impl LocalRotations {
    pub fn len(&self) -> usize {
        match self {
            LocalRotations::AxisAngle(v) => v.len(),
            LocalRotations::Matrix(v) => v.len(),
            LocalRotations::SixD(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn encoding(&self) -> RotationEncoding {
        match self {
            LocalRotations::AxisAngle(_) => RotationEncoding::AxisAngle,
            LocalRotations::Matrix(_) => RotationEncoding::Matrix,
            LocalRotations::SixD(_) => RotationEncoding::SixD,
        }
    }

    /// Flat scalar layout, `width()` values per joint. Matrices are row-major.
    pub fn to_flat(&self) -> Vec<f64> {
        match self {
            LocalRotations::AxisAngle(v) => v.iter().flat_map(|a| [a.x, a.y, a.z]).collect(),
            LocalRotations::Matrix(v) => v
                .iter()
                .flat_map(|m| (0..3).flat_map(move |r| (0..3).map(move |c| m[(r, c)])))
                .collect(),
            LocalRotations::SixD(v) => v.iter().flat_map(|x| x.iter().copied()).collect(),
        }
    }

    pub fn from_flat(encoding: RotationEncoding, data: &[f64]) -> Result<Self> {
        let w = encoding.width();
        if data.len() % w != 0 {
            return Err(Error::EncodingMismatch(format!(
                "{} scalars is not a multiple of {w}",
                data.len()
            )));
        }
        let chunks = data.chunks_exact(w);
        Ok(match encoding {
            RotationEncoding::AxisAngle => {
                LocalRotations::AxisAngle(chunks.map(|c| Vec3::new(c[0], c[1], c[2])).collect())
            }
            RotationEncoding::Matrix => LocalRotations::Matrix(chunks.map(Mat3::from_row_slice).collect()),
            RotationEncoding::SixD => {
                LocalRotations::SixD(chunks.map(|c| [c[0], c[1], c[2], c[3], c[4], c[5]]).collect())
            }
        })
    }

    /// Decode to rotation matrices.
    pub fn matrices(&self) -> Result<Vec<Mat3>> {
        match self {
            LocalRotations::AxisAngle(v) => Ok(v.iter().map(axis_angle_to_matrix).collect()),
            LocalRotations::Matrix(v) => {
                for (k, m) in v.iter().enumerate() {
                    if !is_rotation(m, POSE_ROTATION_TOL) {
                        return Err(Error::EncodingMismatch(format!("joint {k}: matrix is not a rotation")));
                    }
                }
                Ok(v.clone())
            }
            LocalRotations::SixD(v) => v
                .iter()
                .enumerate()
                .map(|(k, x)| {
                    matrix_from_6d(x)
                        .ok_or_else(|| Error::EncodingMismatch(format!("joint {k}: degenerate 6D vector")))
                })
                .collect(),
        }
    }

    /// Re-encode rotation matrices.
    pub fn encode(encoding: RotationEncoding, mats: &[Mat3]) -> Self {
        match encoding {
            RotationEncoding::AxisAngle => LocalRotations::AxisAngle(mats.iter().map(matrix_to_axis_angle).collect()),
            RotationEncoding::Matrix => LocalRotations::Matrix(mats.to_vec()),
            RotationEncoding::SixD => LocalRotations::SixD(mats.iter().map(matrix_to_6d).collect()),
        }
    }
}

/// One pose: local rotation per joint plus root translation (meters).
#[derive(Debug, Clone, PartialEq)]
pub struct PoseFrame {
    pub rotations: LocalRotations,
    pub root_translation: Vec3,
    /// Rotations are relative to each joint's canonical (bind) local frame.
    pub joint_orient: bool,
}

impl PoseFrame {
    /// Zero pose in axis-angle with joint orient on.
    pub fn zero(joint_count: usize) -> Self {
        Self {
            rotations: LocalRotations::AxisAngle(vec![Vec3::zeros(); joint_count]),
            root_translation: Vec3::zeros(),
            joint_orient: true,
        }
    }

    pub fn from_matrices(mats: Vec<Mat3>, root_translation: Vec3) -> Self {
        Self {
            rotations: LocalRotations::Matrix(mats),
            root_translation,
            joint_orient: true,
        }
    }

    pub fn joint_count(&self) -> usize {
        self.rotations.len()
    }

    pub fn matrices(&self) -> Result<Vec<Mat3>> {
        self.rotations.matrices()
    }

    pub fn check_joint_count(&self, expected: usize) -> Result<()> {
        if self.joint_count() != expected {
            return Err(Error::JointCountMismatch {
                expected,
                found: self.joint_count(),
            });
        }
        Ok(())
    }
}

/// Timestamped sequence of poses sharing one encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionSequence {
    pub fps: f64,
    pub encoding: RotationEncoding,
    pub joint_count: usize,
    pub joint_orient: bool,
    pub frames: Vec<PoseFrame>,
}

impl MotionSequence {
    pub fn new(fps: f64, encoding: RotationEncoding, joint_count: usize, frames: Vec<PoseFrame>) -> Result<Self> {
        if !(fps > 0.0) {
            return Err(Error::MalformedMotion(format!("fps must be positive, got {fps}")));
        }
        let mut orient = true;
        for (i, f) in frames.iter().enumerate() {
            f.check_joint_count(joint_count)?;
            if f.rotations.encoding() != encoding {
                return Err(Error::EncodingMismatch(format!("frame {i} encoding differs from sequence")));
            }
            if i == 0 {
                orient = f.joint_orient;
            } else if f.joint_orient != orient {
                return Err(Error::MalformedMotion("mixed joint_orient flags".into()));
            }
        }
        Ok(Self {
            fps,
            encoding,
            joint_count,
            joint_orient: orient,
            frames,
        })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn timestamp(&self, i: usize) -> f64 {
        i as f64 / self.fps
    }
}
