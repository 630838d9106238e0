mod common;

use common::*;
use proptest::prelude::*;
use rigkit::animation::*;
use rigkit::asset::{PoseFrame, Region};
use rigkit::geom::{axis_angle_to_matrix, Mat3, Rigid, Vec3};
use rigkit::synth::*;

fn limits() -> PoseLimits {
    PoseLimits {
        max_angle: 0.8,
        max_translation: 0.2,
    }
}

#[test]
fn zero_pose_reproduces_rest() {
    let s = default_rig();
    let v = s.random_identity(4).unwrap();
    let poser = Poser::new(&s.rig, &v.vertices).unwrap();
    let out = poser.pose(&PoseFrame::zero(12), PoseOptions { correctives: false }).unwrap();
    let err = out.iter().zip(&v.vertices).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(err < 1e-9, "{err}");

    let g = forward_kinematics(s.rig.skeleton(), &PoseFrame::zero(12)).unwrap();
    for (a, b) in g.transforms.iter().zip(s.rig.skeleton().bind()) {
        assert!((a.rotation - b.rotation).norm() < 1e-7);
        assert!((a.translation - b.translation).norm() < 1e-12);
    }
}

#[test]
fn zero_pose_with_correctives_is_still_rest() {
    let s = default_rig();
    let net = random_correctives(&s.rig, 4, 0.05, 0.03, 2).unwrap();
    let rig = s.rig.clone().with_correctives(net).unwrap();
    let out = Poser::bind(&rig).pose(&PoseFrame::zero(12), PoseOptions::default()).unwrap();
    let err = out.iter().zip(s.rest()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(err < 1e-9, "{err}");
}

#[test]
fn root_rotation_moves_everything_about_the_root() {
    let s = default_rig();
    let skel = s.rig.skeleton();
    let r0 = axis_angle_to_matrix(&Vec3::new(0.3, -0.8, 0.5));
    let mut mats = vec![Mat3::identity(); 12];
    mats[0] = r0;
    let g = forward_kinematics(skel, &PoseFrame::from_matrices(mats, Vec3::zeros())).unwrap();

    // the input acts in the root's bind frame: world rotation B₀ R₀ B₀ᵀ about j₀
    let b0 = skel.bind()[0];
    let w = b0.rotation * r0 * b0.rotation.transpose();
    for (k, t) in skel.bind().iter().enumerate() {
        let want_r = w * t.rotation;
        let want_t = b0.translation + w * (t.translation - b0.translation);
        assert!((g.transforms[k].rotation - want_r).norm() < 1e-12, "joint {k}");
        assert!((g.transforms[k].translation - want_t).norm() < 1e-12, "joint {k}");
    }
}

#[test]
fn root_translation_is_a_pure_shift() {
    let s = default_rig();
    let mut p = PoseFrame::zero(12);
    p.root_translation = Vec3::new(0.0, 0.0, 1.0);
    let g = forward_kinematics(s.rig.skeleton(), &p).unwrap();
    for (a, b) in g.positions().iter().zip(s.rig.skeleton().bind_positions()) {
        assert_eq!(a - b, Vec3::new(0.0, 0.0, 1.0));
    }
}

#[test]
fn single_joint_rig_is_rigid() {
    let s = make_rig(&SynthConfig::single_capsule()).unwrap();
    let r0 = axis_angle_to_matrix(&Vec3::new(0.4, 0.1, -0.9));
    let out = Poser::bind(&s.rig)
        .pose(&PoseFrame::from_matrices(vec![r0], Vec3::zeros()), PoseOptions::default())
        .unwrap();
    let b = s.rig.skeleton().bind()[0];
    let w = b.rotation * r0 * b.rotation.transpose();
    for (o, v) in out.iter().zip(s.rest()) {
        assert!((o - (b.translation + w * (v - b.translation))).norm() < 1e-12);
    }
}

#[test]
fn poser_matches_the_reference_skinner() {
    for cfg in [SynthConfig::default(), SynthConfig::with_fingers()] {
        let s = make_rig(&cfg).unwrap();
        let reference = ReferenceSkinner::bind(&s.rig).unwrap();
        let poser = Poser::bind(&s.rig);
        for seed in 0..10 {
            let pose = sample_pose(&s.rig, seed, &limits()).unwrap();
            let a = reference.pose(s.rest(), &pose).unwrap();
            let b = poser.pose(&pose, PoseOptions::default()).unwrap();
            let err = a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            assert!(err < 1e-7, "seed {seed}: {err}");
        }
    }
}

#[test]
fn batch_of_identical_inputs_is_identical() {
    let s = default_rig();
    let pose = sample_pose(&s.rig, 9, &limits()).unwrap();
    let out = Poser::bind(&s.rig).pose_batch(&vec![pose; 128], PoseOptions::default()).unwrap();
    assert_eq!(out.len(), 128);
    assert!(out.iter().all(|o| o == &out[0]));
}

#[test]
fn zero_radius_masks_are_the_weight_support() {
    let s = default_rig();
    let m = derive_corrective_masks(&s.rig, 0.0).unwrap();
    let cols = s.rig.weights().columns(12, MASK_SEED_WEIGHT);
    for (mask, col) in m.masks.iter().zip(cols) {
        let want: Vec<u32> = col.iter().map(|&(i, _)| i as u32).collect();
        assert_eq!(mask, &want);
    }
}

#[test]
fn huge_radius_masks_cover_the_component() {
    let s = default_rig();
    let (lo, hi) = s.rig.mesh().bounding_box();
    let m = derive_corrective_masks(&s.rig, (hi - lo).norm()).unwrap();
    let (labels, _) = s.rig.mesh().components();
    for mask in &m.masks {
        let comps: std::collections::BTreeSet<usize> = mask.iter().map(|&v| labels[v as usize]).collect();
        let want = labels.iter().filter(|c| comps.contains(c)).count();
        assert_eq!(mask.len(), want);
    }
}

#[test]
fn elbow_mask_stays_off_the_head() {
    let s = default_rig();
    let k = s.rig.skeleton().index_of("l_forearm").unwrap();
    let m = derive_corrective_masks(&s.rig, 0.1).unwrap();
    let elbow = s.rig.skeleton().bind_position(k);
    let regions = s.rig.mesh().regions().unwrap();
    let ring: Vec<usize> = (0..s.rig.vertex_count())
        .filter(|&i| (s.rest()[i] - elbow).norm() < 0.08)
        .collect();
    assert!(!ring.is_empty());
    assert!(ring.iter().all(|&i| m.masks[k].contains(&(i as u32))));
    assert!(m.masks[k].iter().all(|&v| regions[v as usize] != Region::Head));
}

#[test]
fn correctives_only_touch_masked_vertices() {
    let s = default_rig();
    let net = random_correctives(&s.rig, 4, 0.05, 0.03, 5).unwrap();
    let kin = Kinematics::from_skeleton(s.rig.skeleton());
    for seed in 0..5 {
        let pose = sample_pose(&s.rig, seed, &limits()).unwrap();
        let d = apply_correctives(&net, &kin, &pose).unwrap();
        for (v, di) in d.iter().enumerate() {
            if *di != Vec3::zeros() {
                assert!(net.in_any_mask(v), "vertex {v}");
            }
        }
    }
}

#[test]
fn distilled_net_reproduces_the_bulge() {
    let s = default_rig();
    let (amplitude, radius) = (0.1, 0.12);
    let kin = Kinematics::from_skeleton(s.rig.skeleton());
    let poses: Vec<Vec<Mat3>> = (0..96)
        .map(|seed| kin.relative_rotations(&sample_pose(&s.rig, seed, &PoseLimits::new(0.6)).unwrap()).unwrap())
        .collect();
    let targets: Vec<Vec<Vec3>> = poses.iter().map(|p| bulge_targets(&s.rig, p, amplitude, radius)).collect();
    let net = distill_correctives(&s.rig, &poses, &targets, 16, 0.05, 1e-6, 3).unwrap();

    for (p, t) in poses.iter().zip(&targets).take(8) {
        let d = net.forward(p).unwrap();
        let moved: Vec<usize> = (0..t.len()).filter(|&i| t[i].norm() > 0.0).collect();
        let err = moved.iter().map(|&i| (d[i] - t[i]).norm()).sum::<f64>() / moved.len() as f64;
        let size = moved.iter().map(|&i| t[i].norm()).sum::<f64>() / moved.len() as f64;
        assert!(err < 2e-3, "mean error {err}");
        assert!(err < 0.25 * size, "error {err} vs bulge {size}");
    }

    // the posed mesh picks the bulge up through the rig
    let rig = s.rig.clone().with_correctives(net).unwrap();
    let pose = sample_pose(&rig, 0, &PoseLimits::new(0.6)).unwrap();
    let with = Poser::bind(&rig).pose(&pose, PoseOptions { correctives: true }).unwrap();
    let without = Poser::bind(&rig).pose(&pose, PoseOptions { correctives: false }).unwrap();
    assert!(mean_dist(&with, &without) > 0.0);
}

#[test]
fn gradients_match_finite_differences() {
    let rig = gradient_rig();
    for seed in 0..20 {
        let e = gradient_check(&rig, seed);
        assert!(e < 1e-4, "seed {seed}: relative error {e}");
    }
}

fn rotation() -> impl Strategy<Value = Mat3> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, 0.0..3.0f64).prop_filter_map("axis", |(x, y, z, a)| {
        let v = Vec3::new(x, y, z);
        (v.norm() > 1e-3).then(|| axis_angle_to_matrix(&(v.normalize() * a)))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn posing_commutes_with_rigid_motion(r in rotation(), tx in -1.0..1.0f64, seed in 0u64..1000) {
        let s = default_rig();
        let m = Rigid::new(r, Vec3::new(tx, 0.3, -tx));
        let moved: Vec<Vec3> = s.rest().iter().map(|v| m.apply(v)).collect();
        let mut pose = sample_pose(&s.rig, seed, &limits()).unwrap();
        pose.root_translation = Vec3::zeros();
        let a = Poser::new(&s.rig, &moved).unwrap().pose(&pose, PoseOptions::default()).unwrap();
        let b = Poser::new(&s.rig, s.rest()).unwrap().pose(&pose, PoseOptions::default()).unwrap();
        let err = a.iter().zip(&b).map(|(x, y)| (x - m.apply(y)).norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-6, "{}", err);
    }

    #[test]
    fn lbs_is_linear_in_the_rest_shape(a in 0.0..1.0f64, seed in 0u64..1000, id in 0u64..1000) {
        let s = default_rig();
        let v2 = s.random_identity(id).unwrap().vertices;
        let skel = s.rig.skeleton();
        let g = forward_kinematics(skel, &sample_pose(&s.rig, seed, &limits()).unwrap()).unwrap();
        let inv: Vec<Rigid> = skel.bind().iter().map(|t| t.inverse()).collect();
        let mix: Vec<Vec3> = s.rest().iter().zip(&v2).map(|(x, y)| x * a + y * (1.0 - a)).collect();
        let lhs = lbs_pose(&mix, s.rig.weights(), &g, &inv).unwrap();
        let p1 = lbs_pose(s.rest(), s.rig.weights(), &g, &inv).unwrap();
        let p2 = lbs_pose(&v2, s.rig.weights(), &g, &inv).unwrap();
        let err = lhs.iter().zip(p1.iter().zip(&p2)).map(|(l, (x, y))| (l - (x * a + y * (1.0 - a))).norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-12, "{}", err);
    }
}
