use std::collections::BTreeMap;

use super::{Mesh, Skeleton, SkinningWeights};
use crate::animation::CorrectivesNet;
use crate::error::{Error, Result};
use crate::fit::JointRegressor;
use crate::topo::Correspondence;

/// Relative inflation of the mesh bounding box that bind joints must fit in.
pub const JOINT_BOX_MARGIN: f64 = 0.10;

/// Immutable rig bundle: canonical mesh, skeleton, weights and optional
/// precomputed attachments. All positions are in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct RigAsset {
    mesh: Mesh,
    skeleton: Skeleton,
    weights: SkinningWeights,
    correctives: Option<CorrectivesNet>,
    correspondences: BTreeMap<String, Correspondence>,
    regressor: Option<JointRegressor>,
    unit_scale: f64,
}

impl RigAsset {
    pub fn new(mesh: Mesh, skeleton: Skeleton, weights: SkinningWeights, unit_scale: f64) -> Result<Self> {
        if !(unit_scale > 0.0 && unit_scale.is_finite()) {
            return Err(Error::ValidationFailure(format!("unit scale {unit_scale} is not positive")));
        }
        if weights.vertex_count() != mesh.vertex_count() {
            return Err(Error::ValidationFailure(format!(
                "weights rows ({}) differ from vertex count ({})",
                weights.vertex_count(),
                mesh.vertex_count()
            )));
        }
        let jc = skeleton.joint_count();
        if weights.joint_indices().iter().any(|&k| k as usize >= jc) {
            return Err(Error::ValidationFailure("weights reference a joint outside the skeleton".into()));
        }
        let (lo, hi) = mesh.bounding_box();
        let pad = (hi - lo) * JOINT_BOX_MARGIN;
        let (lo, hi) = (lo - pad, hi + pad);
        for k in 0..jc {
            let p = skeleton.bind_position(k);
            if (0..3).any(|a| p[a] < lo[a] || p[a] > hi[a]) {
                return Err(Error::ValidationFailure(format!(
                    "bind joint '{}' lies outside the inflated mesh bounding box",
                    skeleton.names()[k]
                )));
            }
        }
        Ok(Self {
            mesh,
            skeleton,
            weights,
            correctives: None,
            correspondences: BTreeMap::new(),
            regressor: None,
            unit_scale,
        })
    }

    pub fn with_correctives(mut self, net: CorrectivesNet) -> Result<Self> {
        if net.vertex_count() != self.mesh.vertex_count() || net.joint_count() != self.skeleton.joint_count() {
            return Err(Error::ShapeMismatch(format!(
                "correctives net is {}x{} but rig is {}x{}",
                net.joint_count(),
                net.vertex_count(),
                self.skeleton.joint_count(),
                self.mesh.vertex_count()
            )));
        }
        self.correctives = Some(net);
        Ok(self)
    }

    pub fn without_correctives(mut self) -> Self {
        self.correctives = None;
        self
    }

    pub fn with_correspondence(mut self, corr: Correspondence) -> Result<Self> {
        if corr.target_vertex_count() != self.mesh.vertex_count() {
            return Err(Error::ValidationFailure(format!(
                "correspondence '{}' produces {} vertices, rig has {}",
                corr.source_id(),
                corr.target_vertex_count(),
                self.mesh.vertex_count()
            )));
        }
        self.correspondences.insert(corr.source_id().to_string(), corr);
        Ok(self)
    }

    pub fn with_regressor(mut self, reg: JointRegressor) -> Result<Self> {
        if reg.joint_count() != self.skeleton.joint_count() || reg.vertex_count() != self.mesh.vertex_count() {
            return Err(Error::ValidationFailure("cached regressor shape does not match the rig".into()));
        }
        self.regressor = Some(reg);
        Ok(self)
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn skeleton(&self) -> &Skeleton {
        &self.skeleton
    }

    pub fn weights(&self) -> &SkinningWeights {
        &self.weights
    }

    pub fn correctives(&self) -> Option<&CorrectivesNet> {
        self.correctives.as_ref()
    }

    pub fn correspondences(&self) -> &BTreeMap<String, Correspondence> {
        &self.correspondences
    }

    pub fn correspondence(&self, source_id: &str) -> Result<&Correspondence> {
        self.correspondences
            .get(source_id)
            .ok_or_else(|| Error::UnknownTopology(source_id.to_string()))
    }

    pub fn regressor(&self) -> Option<&JointRegressor> {
        self.regressor.as_ref()
    }

    /// Meters per native unit declared by the source asset.
    pub fn unit_scale(&self) -> f64 {
        self.unit_scale
    }

    pub fn joint_count(&self) -> usize {
        self.skeleton.joint_count()
    }

    pub fn vertex_count(&self) -> usize {
        self.mesh.vertex_count()
    }
}
