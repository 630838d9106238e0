use rayon::prelude::*;

use super::fk::GlobalTransforms;
use crate::asset::SkinningWeights;
use crate::error::{Error, Result};
use crate::geom::{Rigid, Vec3};

const PAR_CHUNK: usize = 2048;

/// `v'ᵢ = Σₖ wᵢₖ Gₖ Tₖ⁻¹ vᵢ`.
pub fn lbs_pose(
    rest: &[Vec3],
    weights: &SkinningWeights,
    globals: &GlobalTransforms,
    bind_inverse: &[Rigid],
) -> Result<Vec<Vec3>> {
    if rest.len() != weights.vertex_count() {
        return Err(Error::SizeMismatch {
            what: "rest vertices vs weight rows",
            expected: weights.vertex_count(),
            found: rest.len(),
        });
    }
    if globals.len() != bind_inverse.len() {
        return Err(Error::SizeMismatch {
            what: "global vs bind-inverse transforms",
            expected: bind_inverse.len(),
            found: globals.len(),
        });
    }
    if let Some(&k) = weights.joint_indices().iter().find(|&&k| k as usize >= globals.len()) {
        return Err(Error::SizeMismatch {
            what: "joint transforms",
            expected: k as usize + 1,
            found: globals.len(),
        });
    }
    Ok(lbs_with_skinning(rest, weights, &globals.skinning(bind_inverse)))
}

/// LBS with precomposed skinning transforms `Gₖ Tₖ⁻¹` (sizes unchecked).
pub fn lbs_with_skinning(rest: &[Vec3], weights: &SkinningWeights, skin: &[Rigid]) -> Vec<Vec3> {
    let mut out = vec![Vec3::zeros(); rest.len()];
    out.par_chunks_mut(PAR_CHUNK).enumerate().for_each(|(c, chunk)| {
        let base = c * PAR_CHUNK;
        for (o, i) in chunk.iter_mut().zip(base..) {
            *o = blend(&rest[i], weights, i, skin);
        }
    });
    out
}

#[inline]
fn blend(p: &Vec3, weights: &SkinningWeights, i: usize, skin: &[Rigid]) -> Vec3 {
    weights.row(i).fold(Vec3::zeros(), |acc, (k, w)| acc + skin[k].apply(p) * w)
}
