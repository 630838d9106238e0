//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

mod common;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rigkit::animation::{pose_mesh_batch, PoseOptions, Poser};
use rigkit::asset::{PoseFrame, Region, RigAsset};
use rigkit::fit::{fit_skeleton, kabsch_from_covariance, svd_polar};
use rigkit::geom::{axis_angle_to_matrix, geodesic_angle, Mat3, Vec3};
use rigkit::inversion::*;
use rigkit::metrics::{throughput_bench, BenchConfig};
use rigkit::synth::*;
use rigkit::topo::precompute_correspondence;
use rigkit::Error;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn mean_dist(a: &[Vec3], b: &[Vec3]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).sum::<f64>() / a.len() as f64
}

fn random_rotation(rng: &mut ChaCha8Rng) -> Mat3 {
    let v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    axis_angle_to_matrix(&(v.normalize() * rng.random_range(0.0..3.1)))
}

fn limits() -> PoseLimits {
    PoseLimits {
        max_angle: 0.6,
        max_translation: 0.1,
    }
}

fn topology_round_trip() -> Verdict {
    let s = common::default_rig();
    let sub = remesh_variant(&s, RemeshMode::Subdivide).unwrap();
    let corr = precompute_correspondence(&sub.mesh, &sub.wrap, "sub").unwrap();
    let e_sub = mean_dist(&corr.apply(sub.mesh.vertices()).unwrap(), sub.wrap.vertices());
    let dec = remesh_variant(&s, RemeshMode::DecimateLite).unwrap();
    let corr = precompute_correspondence(&dec.mesh, &dec.wrap, "dec").unwrap();
    let e_dec = mean_dist(&corr.apply(dec.mesh.vertices()).unwrap(), dec.wrap.vertices());

    // a denser canonical mesh so the source carries ~10k vertices or more
    let dense = make_rig(&SynthConfig {
        radial_segments: 18,
        axial_segments: 44,
        ..SynthConfig::default()
    })
    .unwrap();
    let big = remesh_variant(&dense, RemeshMode::Subdivide).unwrap();
    let t = Instant::now();
    let corr = precompute_correspondence(&big.mesh, &big.wrap, "big").unwrap();
    let mapped = corr.apply(big.mesh.vertices()).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let e_big = mean_dist(&mapped, big.wrap.vertices());
    let n = big.mesh.vertices().len().min(big.wrap.vertices().len());
    verdict(
        e_sub <= 1e-6 && e_dec <= 2e-3 && secs < 10.0 && n >= 10_000 && e_big <= 1e-6,
        format!(
            "subdivide mean {e_sub:.2e} m (<= 1e-6), decimate-lite mean {:.3} mm (<= 2), {} -> {} vertices in {secs:.2} s (< 10)",
            e_dec * 1e3,
            big.mesh.vertices().len(),
            big.wrap.vertices().len()
        ),
    )
}

fn barycentric_invariants() -> Verdict {
    let s = common::default_rig();
    let sub = remesh_variant(&s, RemeshMode::Subdivide).unwrap();
    let base = precompute_correspondence(&sub.mesh, &sub.wrap, "sub").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut worst_eq, mut worst_pu) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let r = random_rotation(&mut rng);
        let t = Vec3::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let src: Vec<Vec3> = sub.mesh.vertices().iter().map(|p| r * p + t).collect();
        let moved = base.apply(&src).unwrap();
        let expect: Vec<Vec3> = base.apply(sub.mesh.vertices()).unwrap().iter().map(|p| r * p + t).collect();
        worst_eq = moved.iter().zip(&expect).map(|(a, b)| (a - b).norm()).fold(worst_eq, f64::max);
        // coordinates recomputed on the moved meshes still partition unity
        let wrap: Vec<Vec3> = sub.wrap.vertices().iter().map(|p| r * p + t).collect();
        let c = precompute_correspondence(
            &sub.mesh.with_vertices(src).unwrap(),
            &sub.wrap.with_vertices(wrap).unwrap(),
            "moved",
        )
        .unwrap();
        worst_pu = c.bary().iter().map(|b| (b.iter().sum::<f64>() - 1.0).abs()).fold(worst_pu, f64::max);
    }
    verdict(
        worst_eq <= 1e-6 && worst_pu <= 1e-6,
        format!("100 rigid transforms: equivariance {worst_eq:.2e} m (<= 1e-6), partition of unity {worst_pu:.2e} (<= 1e-6)"),
    )
}

fn skeleton_fit_identity() -> Verdict {
    let s = common::default_rig();
    let st = fit_skeleton(&s.rig, s.rest()).unwrap();
    let pos = st.positions.iter().zip(&s.joints).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let rot = st
        .rotations
        .iter()
        .zip(s.rig.skeleton().bind())
        .map(|(a, b)| (a - b.rotation).norm())
        .fold(0.0, f64::max);
    let parents = s.rig.skeleton().parents();
    let mut worst_len = 0.0f64;
    let mut identities: Vec<IdentityScales> = (0..10).map(|k| IdentityScales::sample(&s.config, 100 + k)).collect();
    identities.push(IdentityScales { torso: 1.1, arms: 1.15, legs: 0.9, girth: 1.2 });
    for scales in &identities {
        let v = s.identity(scales).unwrap();
        let fit = fit_skeleton(&s.rig, &v.vertices).unwrap();
        let got = SynthRig::bone_lengths(&fit.positions, parents);
        let want = SynthRig::bone_lengths(&v.joints, parents);
        for (a, b) in got.iter().zip(&want) {
            if let (Some(a), Some(b)) = (a, b) {
                worst_len = worst_len.max((a - b).abs() / b);
            }
        }
    }
    verdict(
        pos <= 1e-6 && rot <= 1e-7 && worst_len <= 0.01,
        format!(
            "bind positions {pos:.2e} m (<= 1e-6), rotations {rot:.2e} (<= 1e-7), bone lengths over {} identities {:.3}% (<= 1%)",
            identities.len(),
            worst_len * 100.0
        ),
    )
}

fn inversion_round_trip() -> Verdict {
    let s = common::default_rig();
    let rig = s.rig.clone().without_correctives();
    let poser = Poser::bind(&rig);
    let inv = Inverter::bind(&rig).unwrap();
    let cfg = InversionConfig {
        correctives: false,
        ..Default::default()
    };
    let opts = PoseOptions { correctives: false };
    let (mut init, mut ana, mut grad) = (Vec::new(), Vec::new(), Vec::new());
    let mut violations = 0;
    for seed in 0..100 {
        let posed = poser.pose(&sample_pose(&rig, 5000 + seed, &limits()).unwrap(), opts).unwrap();
        let i = inv.invert_init(&posed, &cfg).unwrap();
        let a = inv.invert_analytical(&posed, &cfg).unwrap();
        let g = inv.invert_autograd(&posed, Some(&a.pose), &cfg).unwrap();
        assert_eq!(g.diagnostics.autograd.unwrap().iterations, 100);
        if g.mean_error > a.mean_error {
            violations += 1;
        }
        init.push(i.mean_error);
        ana.push(a.mean_error);
        grad.push(g.mean_error);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64 * 1e3;
    let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max) * 1e3;
    let (mi, ma, mg) = (mean(&init), mean(&ana), mean(&grad));
    verdict(
        mi < 25.0 && ma < 2.0 && violations == 0,
        format!(
            "100 poses: init {mi:.2} mm (< 25, worst {:.2}), analytical {ma:.3} mm (< 2, worst {:.3}), autograd {mg:.3} mm, worse than analytical on {violations} frames (0)",
            max(&init),
            max(&ana)
        ),
    )
}

fn ns_path(covs: &[Mat3]) -> Vec<Mat3> {
    let mut r = Mat3::identity();
    covs.iter()
        .map(|h| {
            r = newton_schulz_polar(h, &r, &NsConfig::default()).rotation;
            r
        })
        .collect()
}

fn max_step(path: &[Mat3]) -> f64 {
    path.windows(2).map(|w| geodesic_angle(&w[0], &w[1])).fold(0.0, f64::max)
}

fn newton_schulz_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = 0.0f64;
    let mut unconverged = 0;
    for _ in 0..1000 {
        let q = random_rotation(&mut rng);
        let d = Mat3::from_diagonal(&Vec3::new(
            rng.random_range(0.2..2.0),
            rng.random_range(0.2..2.0),
            rng.random_range(0.2..2.0),
        ));
        let h = random_rotation(&mut rng) * q * d * q.transpose();
        let p = newton_schulz_polar(&h, &Mat3::identity(), &NsConfig::default());
        if p.status != PolarStatus::Converged {
            unconverged += 1;
        }
        worst = worst.max((p.rotation - svd_polar(&h)).norm());
    }
    let mut ratio = 0.0f64;
    let mut steps = (0.0, 0.0);
    for seed in [1, 2, 3] {
        let covs = coplanar_fixture(seed).covariances();
        let svd: Vec<Mat3> = covs.iter().map(|h| kabsch_from_covariance(h).unwrap()).collect();
        let (s, n) = (max_step(&svd), max_step(&ns_path(&covs)));
        if n / s >= ratio {
            ratio = n / s;
            steps = (n.to_degrees(), s.to_degrees());
        }
    }
    verdict(
        worst <= 1e-6 && unconverged == 0 && ratio <= 0.5,
        format!(
            "1000 covariances: max |NS - SVD|_F {worst:.2e} (<= 1e-6); coplanar sweep NS step {:.2} deg vs SVD {:.1} deg, ratio {ratio:.3} (<= 0.5)",
            steps.0, steps.1
        ),
    )
}

fn cold_start_guard() -> Verdict {
    let s = common::default_rig();
    let posed = Poser::bind(&s.rig)
        .pose(&sample_pose(&s.rig, 2, &PoseLimits::new(0.3)).unwrap(), PoseOptions::default())
        .unwrap();
    let inv = Inverter::bind(&s.rig).unwrap();
    let mut cfg = InversionConfig::default();
    let guarded = matches!(inv.invert_autograd(&posed, None, &cfg), Err(Error::MissingInit));
    cfg.autograd.allow_cold_start = true;
    let unguarded = match inv.invert_autograd(&posed, None, &cfg) {
        Ok(r) => r.diagnostics.autograd.is_some_and(|t| t.iterations == 100),
        Err(e) => matches!(e, Error::Diverged { .. }),
    };
    verdict(
        guarded && unguarded,
        format!("no init -> MissingInit: {guarded}; with the unsafe flag the cold-start path ran: {unguarded}"),
    )
}

fn gradient_checks() -> Verdict {
    let rig = common::gradient_rig();
    let worst = (0..20).map(|seed| common::gradient_check(&rig, seed)).fold(0.0, f64::max);
    verdict(worst <= 1e-4, format!("20 configurations: worst relative error {worst:.2e} (<= 1e-4)"))
}

fn region_error(a: &[Vec3], b: &[Vec3], regions: &[Region], r: Region) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).zip(regions).filter(|(_, &x)| x == r).map(|((p, q), _)| (p - q).norm()).collect();
    d.iter().sum::<f64>() / d.len() as f64
}

fn finger_rig_with_correctives() -> RigAsset {
    let s = make_rig(&SynthConfig::with_fingers()).unwrap();
    let net = random_correctives(&s.rig, 4, 0.05, 0.03, 11).unwrap();
    s.rig.clone().with_correctives(net).unwrap()
}

fn hand_refinement() -> Verdict {
    let rig = finger_rig_with_correctives();
    let regions = rig.mesh().regions().unwrap().to_vec();
    let poser = Poser::bind(&rig);
    let inv = Inverter::bind(&rig).unwrap();
    let mut cfg = InversionConfig::default();
    cfg.autograd.region_weights = "hands:5".parse().unwrap();
    let opts = PoseOptions::default();
    let (mut wins, mut before, mut after) = (0, 0.0, 0.0);
    for seed in 0..50 {
        let posed = poser.pose(&sample_pose(&rig, 9000 + seed, &limits()).unwrap(), opts).unwrap();
        let a = inv.invert_analytical(&posed, &cfg).unwrap();
        let g = inv.invert_autograd(&posed, Some(&a.pose), &cfg).unwrap();
        let ea = region_error(&poser.pose(&a.pose, opts).unwrap(), &posed, &regions, Region::Hands);
        let eg = region_error(&poser.pose(&g.pose, opts).unwrap(), &posed, &regions, Region::Hands);
        if eg < ea {
            wins += 1;
        }
        before += ea / 50.0;
        after += eg / 50.0;
    }
    verdict(
        wins >= 45,
        format!(
            "hands x5: autograd beat analytical on {wins}/50 frames (>= 45); mean hand error {:.3} -> {:.3} mm",
            before * 1e3,
            after * 1e3
        ),
    )
}

fn throughput() -> Verdict {
    let s = common::default_rig();
    let poser = Poser::bind(&s.rig);
    let motion = sample_motion(&s.rig, 31, 32, 0.5, &limits()).unwrap();
    let opts = PoseOptions::default();
    let cfg = BenchConfig {
        warmup: 3,
        repetitions: 15,
        threads: None,
    };
    // the stage is the whole pose_mesh call, skeleton fit included, so a
    // batch shares one fit across its frames
    let pose = |b: usize| pose_mesh_batch(&s.rig, s.rest(), &motion.frames[..b], opts);
    let untimed: Vec<_> = [1, 32].iter().map(|&b| pose(b).unwrap()).collect();
    let (report, timed) = throughput_bench("pose_mesh", &[1, 32], &cfg, pose).unwrap();
    let pose_ratio = report.row(32).unwrap().items_per_sec / report.row(1).unwrap().items_per_sec;
    let mut identical = timed == untimed;

    let posed = poser.pose_batch(&motion.frames[..8], opts).unwrap();
    let inv = Inverter::bind(&s.rig).unwrap();
    let (posed, inv) = (&posed, &inv);
    let run = |mode: Mode| {
        let c = InversionConfig { mode, ..Default::default() };
        move |b: usize| -> rigkit::Result<Vec<PoseFrame>> {
            posed[..b].iter().map(|p| inv.invert(p, None, &c).map(|r| r.pose)).collect()
        }
    };
    let few = BenchConfig {
        warmup: 1,
        repetitions: 5,
        threads: None,
    };
    let rate = |mode: Mode, name: &str| {
        let untimed = run(mode)(8).unwrap();
        let (r, timed) = throughput_bench(name, &[8], &few, run(mode)).unwrap();
        (r.rows[0].items_per_sec, timed[0] == untimed)
    };
    let (init, same_init) = rate(Mode::Init, "init");
    let (ana, same_ana) = rate(Mode::Analytical, "analytical");
    identical &= same_init && same_ana;
    let inv_ratio = init / ana;
    verdict(
        pose_ratio >= 3.0 && inv_ratio >= 5.0 && identical,
        format!(
            "pose batch-32/batch-1 {pose_ratio:.2}x (>= 3) on {} threads; init/analytical {inv_ratio:.1}x (>= 5, {init:.0} vs {ana:.0} meshes/s); bit-identical {identical}",
            report.machine.threads
        ),
    )
}

fn main() {
    let start = Instant::now();
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("topology round-trip", topology_round_trip),
        ("barycentric equivariance and partition of unity", barycentric_invariants),
        ("skeleton-fit identity", skeleton_fit_identity),
        ("pose-inversion round-trip", inversion_round_trip),
        ("Newton-Schulz oracle and coplanar stability", newton_schulz_oracle),
        ("cold-start guard", cold_start_guard),
        ("gradient checks", gradient_checks),
        ("per-region refinement direction", hand_refinement),
        ("throughput sanity", throughput),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let v = check();
        failed += usize::from(!v.pass);
        println!(
            "{} {:>2} {name} [{:.1} s]: {}",
            if v.pass { "PASS" } else { "FAIL" },
            i + 1,
            t.elapsed().as_secs_f64(),
            v.detail
        );
    }
    let total = start.elapsed().as_secs_f64();
    let in_budget = total < 600.0;
    failed += usize::from(!in_budget);
    println!(
        "{} 10 full suite runtime: {total:.1} s (< 600)",
        if in_budget { "PASS" } else { "FAIL" }
    );
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
