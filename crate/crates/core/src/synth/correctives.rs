//! Random correctives nets over geodesic masks, for exercising the
//! correctives path (gradients, masking, file round trips).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nalgebra::DMatrix;

use crate::animation::{derive_corrective_masks, pack_masks, CorrectivesNet, CorrectivesParts, MASK_SEED_WEIGHT};
use crate::asset::RigAsset;
use crate::error::{Error, Result};
use crate::geom::{geodesic_angle, matrix_to_6d, Mat3, Vec3};

/// Net with uniform random weights: stage 1 in `±1`, stage 2 in
/// `±amplitude` meters per unit activation.
pub fn random_correctives(
    rig: &RigAsset,
    channels: usize,
    geodesic_radius: f64,
    amplitude: f64,
    seed: u64,
) -> Result<CorrectivesNet> {
    let masks = derive_corrective_masks(rig, geodesic_radius)?;
    let (offsets, verts) = pack_masks(&masks.masks);
    let (j, n) = (rig.joint_count(), rig.vertex_count());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |len: usize, scale: f64| -> Vec<f32> {
        (0..len).map(|_| (rng.random_range(-1.0..=1.0) * scale) as f32).collect()
    };
    CorrectivesNet::from_parts(CorrectivesParts {
        joint_count: j,
        channels,
        vertex_count: n,
        w1: draw(j * channels * 6, 1.0),
        b1: draw(j * channels, 0.5),
        w2: draw(verts.len() * 3 * channels, amplitude),
        b2: draw(n * 3, amplitude * 0.1),
        mask_offsets: offsets,
        mask_vertices: verts,
        subtract_rest: true,
    })
}

/// Ground-truth bulge for a pose: near each non-root joint, vertices move
/// radially away from the bone by `amplitude · (1 − cos θ_k)` scaled by
/// their skinning weight and a linear falloff over `radius` from the joint.
/// Rest-frame offsets, zero at the identity pose.
pub fn bulge_targets(rig: &RigAsset, local: &[Mat3], amplitude: f64, radius: f64) -> Vec<Vec3> {
    let skel = rig.skeleton();
    let verts = rig.mesh().vertices();
    let mut out = vec![Vec3::zeros(); verts.len()];
    for (i, v) in verts.iter().enumerate() {
        for (k, w) in rig.weights().row(i) {
            if skel.parent(k).is_none() || w < MASK_SEED_WEIGHT {
                continue;
            }
            let bind = &skel.bind()[k];
            let d = v - bind.translation;
            let dist = d.norm();
            if dist >= radius {
                continue;
            }
            let axis = bind.rotation.column(0).into_owned();
            let radial = d - axis * d.dot(&axis);
            if radial.norm() < 1e-9 {
                continue;
            }
            let theta = geodesic_angle(&local[k], &Mat3::identity());
            out[i] += radial.normalize() * (amplitude * (1.0 - theta.cos()) * w * (1.0 - dist / radius));
        }
    }
    out
}

/// Fit a correctives net to `(pose, displacement)` pairs.
///
/// Stage 1 is random (seeded, like [`random_correctives`]); stage 2 is the
/// ridge solution per vertex over the activations of every joint whose
/// mask holds it. Targets must be rest-subtracted offsets.
pub fn distill_correctives(
    rig: &RigAsset,
    poses: &[Vec<Mat3>],
    targets: &[Vec<Vec3>],
    channels: usize,
    geodesic_radius: f64,
    lambda: f64,
    seed: u64,
) -> Result<CorrectivesNet> {
    let (j, n, c) = (rig.joint_count(), rig.vertex_count(), channels);
    if poses.len() != targets.len() || poses.is_empty() {
        return Err(Error::SizeMismatch {
            what: "distillation samples",
            expected: poses.len(),
            found: targets.len(),
        });
    }
    if !(lambda > 0.0) || c == 0 {
        return Err(Error::InvalidConfig("distillation needs lambda > 0 and channels > 0".into()));
    }
    let masks = derive_corrective_masks(rig, geodesic_radius)?;
    let (offsets, verts) = pack_masks(&masks.masks);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |len: usize, scale: f64| -> Vec<f32> {
        (0..len).map(|_| (rng.random_range(-1.0..=1.0) * scale) as f32).collect()
    };
    let w1 = draw(j * c * 6, 1.0);
    let b1 = draw(j * c, 0.5);

    // stage-1 activations as the net will compute them, rest response removed
    let act = |k: usize, x: &[f64; 6]| -> Vec<f64> {
        (0..c)
            .map(|ch| {
                let row = &w1[(k * c + ch) * 6..(k * c + ch + 1) * 6];
                let pre = b1[k * c + ch] as f64 + row.iter().zip(x).map(|(&w, &xi)| w as f64 * xi).sum::<f64>();
                pre.tanh()
            })
            .collect()
    };
    let rest: Vec<Vec<f64>> = (0..j).map(|k| act(k, &matrix_to_6d(&Mat3::identity()))).collect();
    let feats: Vec<Vec<Vec<f64>>> = poses
        .iter()
        .map(|p| {
            (0..j)
                .map(|k| act(k, &matrix_to_6d(&p[k])).iter().zip(&rest[k]).map(|(a, r)| a - r).collect())
                .collect()
        })
        .collect();

    // mask entries per vertex: (joint, entry index)
    let mut entries: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for k in 0..j {
        for e in offsets[k]..offsets[k + 1] {
            entries[verts[e] as usize].push((k, e));
        }
    }
    let mut w2 = vec![0.0f32; verts.len() * 3 * c];
    for (v, ents) in entries.iter().enumerate() {
        if ents.is_empty() {
            continue;
        }
        let m = ents.len() * c;
        let phi = DMatrix::from_fn(poses.len(), m, |s, col| feats[s][ents[col / c].0][col % c]);
        let y = DMatrix::from_fn(poses.len(), 3, |s, axis| targets[s][v][axis]);
        let a = phi.transpose() * &phi + DMatrix::identity(m, m) * lambda;
        let rhs = phi.transpose() * y;
        let sol = a.cholesky().ok_or_else(|| Error::InvalidConfig(format!("ridge system at vertex {v} is singular")))?.solve(&rhs);
        for (slot, &(_, e)) in ents.iter().enumerate() {
            for axis in 0..3 {
                for ch in 0..c {
                    w2[e * 3 * c + axis * c + ch] = sol[(slot * c + ch, axis)] as f32;
                }
            }
        }
    }
    CorrectivesNet::from_parts(CorrectivesParts {
        joint_count: j,
        channels: c,
        vertex_count: n,
        w1,
        b1,
        w2,
        b2: vec![0.0; n * 3],
        mask_offsets: offsets,
        mask_vertices: verts,
        subtract_rest: true,
    })
}
