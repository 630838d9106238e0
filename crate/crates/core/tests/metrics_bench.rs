mod common;

use common::default_rig;
use proptest::prelude::*;
use rigkit::animation::{PoseOptions, Poser};
use rigkit::geom::{axis_angle_to_matrix, Vec3};
use rigkit::metrics::*;
use rigkit::synth::{make_rig, sample_motion, PoseLimits, SynthConfig};
use rigkit::topo::brute_force_closest;
use rigkit::Error;

fn line(n: usize) -> Vec<Vec3> {
    (0..n).map(|i| Vec3::new(i as f64 * 0.01, (i % 7) as f64 * 0.002, 0.0)).collect()
}

#[test]
fn identical_positions_give_zero_stats() {
    let a = line(40);
    let s = vertex_error_stats(&a, &a, None).unwrap();
    assert_eq!((s.mean, s.median, s.p95, s.max, s.count), (0.0, 0.0, 0.0, 0.0, 40));
}

#[test]
fn constant_offset_is_three_millimeters() {
    let a = line(100);
    let b: Vec<Vec3> = a.iter().map(|p| p + Vec3::new(0.003, 0.0, 0.0)).collect();
    let s = vertex_error_stats(&a, &b, None).unwrap().in_mm();
    for v in [s.mean, s.median, s.p95, s.max] {
        assert!((v - 3.0).abs() < 1e-9, "{v}");
    }
}

#[test]
fn mixed_offsets_interpolate_the_median() {
    let a = line(100);
    let b: Vec<Vec3> = a
        .iter()
        .enumerate()
        .map(|(i, p)| p + Vec3::new(0.0, 0.0, if i % 2 == 0 { 0.001 } else { 0.010 }))
        .collect();
    let s = vertex_error_stats(&a, &b, None).unwrap().in_mm();
    assert!((s.median - 5.5).abs() < 1e-9, "{}", s.median);
    assert!((s.max - 10.0).abs() < 1e-9);
    assert!((s.mean - 5.5).abs() < 1e-9);
    // 0.95 · 99 = 94.05, both neighbours are in the 10 mm half
    assert!((s.p95 - 10.0).abs() < 1e-9);
}

#[test]
fn vertex_stats_reject_bad_input() {
    let a = line(5);
    assert!(matches!(vertex_error_stats(&a, &a[..4], None), Err(Error::SizeMismatch { .. })));
    assert!(matches!(vertex_error_stats(&a, &a, Some(&[false; 5])), Err(Error::EmptySelection)));
}

#[test]
fn surface_vertices_lie_on_the_surface() {
    let s = default_rig();
    let mesh = s.rig.mesh();
    let e = closest_point_error(mesh.vertices(), mesh, None).unwrap();
    assert!(e.max < 1e-9, "{}", e.max);
}

#[test]
fn normal_offset_on_a_convex_mesh() {
    let s = make_rig(&SynthConfig::single_capsule()).unwrap();
    let mesh = s.rig.mesh();
    let normals = mesh.vertex_normals();
    let q: Vec<Vec3> = mesh.vertices().iter().zip(&normals).map(|(p, n)| p + n * 0.002).collect();
    let e = closest_point_error(&q, mesh, None).unwrap().in_mm();
    // independent brute-force oracle
    let oracle = q.iter().map(|p| brute_force_closest(mesh, p).unwrap().distance).sum::<f64>() / q.len() as f64 * 1e3;
    assert!((e.mean - oracle).abs() < 1e-9, "{} vs {oracle}", e.mean);
    assert!((e.mean - 2.0).abs() < 0.1, "{}", e.mean);
}

#[test]
fn closest_point_errors() {
    let s = default_rig();
    let mesh = s.rig.mesh();
    let q = &mesh.vertices()[..10];
    assert!(matches!(closest_point_error(q, mesh, Some(&[true; 10])), Err(Error::EmptySelection)));
    let empty = rigkit::asset::Mesh::new(vec![], vec![], None);
    if let Ok(m) = empty {
        assert!(matches!(closest_point_error(q, &m, None), Err(Error::EmptyMesh)));
    }
}

#[test]
fn region_breakdown_covers_every_label() {
    let s = default_rig();
    let mesh = s.rig.mesh();
    let regions = mesh.regions().unwrap();
    let b: Vec<Vec3> = mesh.vertices().iter().map(|p| p + Vec3::new(0.001, 0.0, 0.0)).collect();
    let r = region_breakdown(mesh.vertices(), &b, regions).unwrap().in_mm();
    let total: usize = r.rows().iter().skip(1).filter_map(|(_, s)| s.map(|s| s.count)).sum();
    assert_eq!(total, r.all.count);
    assert!(r.body.is_some() && r.hands.is_some() && r.head.is_some());
    assert!((r.all.mean - 1.0).abs() < 1e-9);
}

#[test]
fn temporal_deltas() {
    let constant = vec![vec![0.001; 8]; 5];
    let s = temporal_stability(&constant, None).unwrap();
    assert_eq!(s.max_delta, 0.0);
    let alt: Vec<Vec<f64>> = (0..10).map(|i| vec![if i % 2 == 0 { 1.0 } else { 2.0 }; 8]).collect();
    let s = temporal_stability(&alt, None).unwrap();
    assert!((s.max_delta - 1.0).abs() < 1e-12 && (s.mean_delta - 1.0).abs() < 1e-12);
    assert_eq!(s.deltas.len(), 9);
    assert!(matches!(temporal_stability(&alt[..1], None), Err(Error::TooFewFrames)));
    let rots: Vec<_> = (0..5).map(|i| axis_angle_to_matrix(&Vec3::new(0.0, 0.0, i as f64 * 0.1))).collect();
    let r = rotation_stability(&rots).unwrap();
    assert!((r.max_delta - 0.1f64.to_degrees()).abs() < 1e-6);
}

#[test]
fn masked_series_uses_the_region_mean() {
    let frames = vec![vec![1.0, 100.0], vec![3.0, -50.0]];
    let s = temporal_stability(&frames, Some(&[true, false])).unwrap();
    assert_eq!(s.max_delta, 2.0);
}

#[test]
fn single_repetition_is_low_confidence() {
    let cfg = BenchConfig { warmup: 0, repetitions: 1, threads: Some(1) };
    let (r, out) = throughput_bench("noop", &[1, 4], &cfg, |b| Ok(b * 2)).unwrap();
    assert_eq!(out, vec![2, 8]);
    assert!(r.rows.iter().all(|row| row.low_confidence && row.repetitions == 1));
    assert_eq!(r.machine.threads, 1);
    assert!(r.table().contains("low confidence"));
    let cfg = BenchConfig { warmup: 0, repetitions: 0, threads: None };
    assert!(throughput_bench("noop", &[1], &cfg, |b| Ok(b)).is_err());
}

#[test]
fn timed_posing_matches_untimed_bit_for_bit() {
    let s = default_rig();
    let poser = Poser::new(&s.rig, s.rig.mesh().vertices()).unwrap();
    let motion = sample_motion(&s.rig, 3, 8, 0.5, &PoseLimits::new(0.8)).unwrap();
    let opts = PoseOptions::default();
    let untimed = poser.pose_batch(&motion.frames, opts).unwrap();
    let cfg = BenchConfig { warmup: 1, repetitions: 3, threads: Some(1) };
    let (report, timed) =
        throughput_bench("pose_mesh", &[8], &cfg, |b| poser.pose_batch(&motion.frames[..b], opts)).unwrap();
    assert_eq!(timed[0], untimed);
    let row = report.row(8).unwrap();
    assert!(!row.low_confidence && row.items_per_sec > 0.0);
}

fn distances() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..0.05, 1..60)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stats_are_ordered(d in distances()) {
        let s = ErrorStats::from_distances(&d).unwrap();
        prop_assert!(s.mean <= s.max && s.median <= s.p95 && s.p95 <= s.max);
        prop_assert!(s.mean >= 0.0 && s.median >= 0.0);
    }

    #[test]
    fn stats_ignore_vertex_order(d in distances(), seed in any::<u64>()) {
        let a: Vec<Vec3> = d.iter().map(|&x| Vec3::new(x, 0.0, 0.0)).collect();
        let zero = vec![Vec3::zeros(); a.len()];
        let mut perm: Vec<usize> = (0..a.len()).collect();
        let n = perm.len();
        for i in 0..n {
            perm.swap(i, (seed.wrapping_mul(i as u64 + 7) % n as u64) as usize);
        }
        let b: Vec<Vec3> = perm.iter().map(|&i| a[i]).collect();
        prop_assert_eq!(vertex_error_stats(&a, &zero, None).unwrap(), vertex_error_stats(&b, &zero, None).unwrap());
    }

    #[test]
    fn masking_equals_prefiltering(d in distances(), bits in any::<u64>()) {
        let a: Vec<Vec3> = d.iter().map(|&x| Vec3::new(0.0, x, 0.0)).collect();
        let zero = vec![Vec3::zeros(); a.len()];
        let mut mask: Vec<bool> = (0..a.len()).map(|i| bits >> (i % 64) & 1 == 1).collect();
        mask[0] = true;
        let fa: Vec<Vec3> = a.iter().zip(&mask).filter(|(_, &m)| m).map(|(p, _)| *p).collect();
        let fz = vec![Vec3::zeros(); fa.len()];
        prop_assert_eq!(
            vertex_error_stats(&a, &zero, Some(&mask)).unwrap(),
            vertex_error_stats(&fa, &fz, None).unwrap()
        );
    }
}
