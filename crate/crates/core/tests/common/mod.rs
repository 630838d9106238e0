#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rigkit::animation::{PoseParams, SkinningModel};
use rigkit::asset::RigAsset;
use rigkit::geom::{axis_angle_to_matrix, Vec3};
use rigkit::synth::*;

pub fn default_rig() -> SynthRig {
    make_rig(&SynthConfig::default()).unwrap()
}

pub fn mean_dist(a: &[Vec3], b: &[Vec3]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).sum::<f64>() / a.len() as f64
}

fn unit(rng: &mut ChaCha8Rng) -> Vec3 {
    Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// Finger rig carrying a random correctives net, so the check covers every
/// stage of the posing chain.
pub fn gradient_rig() -> RigAsset {
    let s = make_rig(&SynthConfig::with_fingers()).unwrap();
    let net = random_correctives(&s.rig, 4, 0.05, 0.03, 11).unwrap();
    s.rig.clone().with_correctives(net).unwrap()
}

/// Worst relative disagreement between the adjoint and central differences
/// for one random configuration, over several random directions. The scalar
/// probed is `c · v'` for a random cotangent `c`, plus the mean posed
/// position along a random axis.
pub fn gradient_check(rig: &RigAsset, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let j = rig.joint_count();
    let rel: Vec<_> = (0..j).map(|_| axis_angle_to_matrix(&(unit(&mut rng) * 0.6))).collect();
    let mut p = PoseParams::from_matrices(&rel, unit(&mut rng) * 0.1);
    // leave the 6D off the rotation manifold so Gram-Schmidt is exercised
    for x in p.six_d.iter_mut() {
        for v in x.iter_mut() {
            *v += rng.random_range(-0.05..0.05);
        }
    }
    let rest: Vec<Vec3> = rig.mesh().vertices().to_vec();
    let kin = rigkit::animation::Kinematics::from_skeleton(rig.skeleton());
    let n = rest.len();
    let axis = unit(&mut rng).normalize();
    let cot: Vec<Vec3> = (0..n).map(|_| unit(&mut rng) + axis / n as f64).collect();

    let eval = |p: &PoseParams, rest: &[Vec3]| -> f64 {
        let model = SkinningModel {
            kinematics: &kin,
            weights: rig.weights(),
            rest,
            correctives: rig.correctives(),
        };
        model.forward(p).unwrap().iter().zip(&cot).map(|(v, c)| v.dot(c)).sum()
    };
    let model = SkinningModel {
        kinematics: &kin,
        weights: rig.weights(),
        rest: &rest,
        correctives: rig.correctives(),
    };
    let g = model.vjp(&p, &cot).unwrap();

    let h = 1e-5;
    let mut worst = 0.0f64;
    for _ in 0..4 {
        let d6: Vec<[f64; 6]> = (0..j).map(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0))).collect();
        let dt = unit(&mut rng);
        let dr: Vec<Vec3> = (0..n).map(|_| unit(&mut rng)).collect();
        let analytic: f64 = g.six_d.iter().flatten().zip(d6.iter().flatten()).map(|(a, b)| a * b).sum::<f64>()
            + g.root_translation.dot(&dt)
            + g.rest.iter().zip(&dr).map(|(a, b)| a.dot(b)).sum::<f64>();
        let shifted = |s: f64| {
            let q = PoseParams {
                six_d: p.six_d.iter().zip(&d6).map(|(x, d)| std::array::from_fn(|i| x[i] + s * d[i])).collect(),
                root_translation: p.root_translation + dt * s,
            };
            let r: Vec<Vec3> = rest.iter().zip(&dr).map(|(x, d)| x + d * s).collect();
            eval(&q, &r)
        };
        let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
        worst = worst.max((analytic - fd).abs() / fd.abs().max(1e-3));
    }
    worst
}
