use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rigkit::animation::{PoseOptions, Poser};
use rigkit::asset::*;
use rigkit::inversion::{InversionConfig, Inverter, Mode, Schedule};
use serde_json::Value;
use tempfile::TempDir;

fn rigkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rigkit")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Value {
    let out = rigkit(args);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json report")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new(extra: &[&str]) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("fx");
        let mut args = vec!["synth", "--out", s(&out), "--frames", "6", "--seed", "3"];
        args.extend_from_slice(extra);
        ok(&args);
        Self { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn rig(&self) -> PathBuf {
        self.path("fx/rig.json")
    }

    fn posed(&self) -> PathBuf {
        let p = self.path("posed.json");
        if !p.exists() {
            ok(&["pose", "--rig", s(&self.rig()), "--motion", s(&self.path("fx/motion.json")), "--out", s(&p)]);
        }
        p
    }
}

#[test]
fn analytical_round_trip_stays_under_two_millimeters() {
    let fx = Fixture::new(&[]);
    let inv = fx.path("inv.json");
    let r = ok(&[
        "invert",
        "--rig",
        s(&fx.rig()),
        "--input",
        s(&fx.posed()),
        "--out",
        s(&inv),
        "--mode=analytical",
        "--schedule=body:2,finger:1,global:1",
    ]);
    assert_eq!(r["results"]["frames"], 6);
    let mean = r["results"]["mean_error_mm"].as_f64().unwrap();
    assert!(mean < 2.0, "{mean}");
    assert_eq!(r["config"]["inversion"]["mode"], "analytical");
    assert_eq!(r["results"]["per_frame"].as_array().unwrap().len(), 6);

    // re-pose the recovered motion and compare against the input vertices
    let again = fx.path("reposed.json");
    ok(&["pose", "--rig", s(&fx.rig()), "--motion", s(&inv), "--out", s(&again)]);
    let m = ok(&["metrics", "--pred", s(&again), "--target", s(&fx.posed()), "--rig", s(&fx.rig())]);
    let e = m["results"]["error"]["mean_mm"].as_f64().unwrap();
    assert!(e < 2.0, "{e}");
    assert!(m["results"]["regions"]["hands"]["mean_mm"].is_number());
    assert!(m["results"]["stability"]["max_delta_mm_per_frame"].is_number());
}

#[test]
fn zero_motion_without_correctives_returns_the_rest_shape() {
    let fx = Fixture::new(&["--correctives"]);
    let rig = load_rig(fx.rig()).unwrap();
    assert!(rig.correctives().is_some());
    let zero = MotionSequence::new(30.0, RotationEncoding::AxisAngle, rig.joint_count(), vec![PoseFrame::zero(rig.joint_count()); 3])
        .unwrap();
    let motion = fx.path("zero.json");
    save_motion(&zero, &motion).unwrap();
    let out = fx.path("rest.json");
    let r = ok(&["pose", "--rig", s(&fx.rig()), "--motion", s(&motion), "--out", s(&out), "--no-correctives"]);
    assert_eq!(r["results"]["correctives"], false);
    for frame in load_vertex_animation(&out).unwrap() {
        for (p, q) in frame.iter().zip(rig.mesh().vertices()) {
            assert!((p - q).norm() < 1e-9);
        }
    }
}

#[test]
fn unknown_source_topology_exits_two() {
    let fx = Fixture::new(&["--remesh", "subdivide"]);
    let out = rigkit(&[
        "transfer",
        "--rig",
        s(&fx.rig()),
        "--source-topology",
        "scan",
        "--input",
        s(&fx.path("fx/source.obj")),
        "--out",
        s(&fx.path("t.obj")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("UnknownTopology") && err.contains("scan"), "{err}");
}

#[test]
fn precompute_then_transfer_reconstructs_the_wrap() {
    let fx = Fixture::new(&["--remesh", "subdivide"]);
    let rig2 = fx.path("reg/rig.json");
    let r = ok(&[
        "precompute",
        "--rig",
        s(&fx.rig()),
        "--source",
        s(&fx.path("fx/source.obj")),
        "--wrap",
        s(&fx.path("fx/wrap.obj")),
        "--source-id",
        "fine",
        "--out",
        s(&rig2),
        "--export",
        s(&fx.path("corr")),
    ]);
    assert_eq!(r["results"]["unmatched"], 0);
    assert!(fx.path("corr/fine.corr.json").exists());
    let out = fx.path("mapped.obj");
    ok(&[
        "transfer",
        "--rig",
        s(&rig2),
        "--source-topology",
        "fine",
        "--input",
        s(&fx.path("fx/source.obj")),
        "--out",
        s(&out),
    ]);
    let mapped = load_obj(&out, 1.0).unwrap();
    let wrap = load_obj(fx.path("fx/wrap.obj"), 1.0).unwrap();
    let worst = mapped.vertices().iter().zip(wrap.vertices()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    // barycentric coordinates are stored as f32
    assert!(worst < 1e-5, "{worst}");
}

#[test]
fn inverting_a_source_topology_sequence() {
    let fx = Fixture::new(&["--remesh", "subdivide"]);
    let rig2 = fx.path("reg/rig.json");
    ok(&[
        "precompute",
        "--rig",
        s(&fx.rig()),
        "--source",
        s(&fx.path("fx/source.obj")),
        "--wrap",
        s(&fx.path("fx/wrap.obj")),
        "--source-id",
        "fine",
        "--out",
        s(&rig2),
    ]);
    // the fine mesh is the wrap's midpoint subdivision, so posing it means
    // posing the canonical mesh and subdividing
    let rig = load_rig(&rig2).unwrap();
    let src = load_obj(fx.path("fx/source.obj"), 1.0).unwrap();
    let frame = PoseFrame::zero(rig.joint_count());
    let posed = Poser::bind(&rig).pose(&frame, PoseOptions::default()).unwrap();
    let fine = rigkit::synth::subdivided_positions(rig.mesh(), &posed);
    assert_eq!(fine.len(), src.vertices().len());
    let input = fx.path("fine.json");
    save_vertex_animation(&[fine], &input).unwrap();
    let r = ok(&[
        "invert",
        "--rig",
        s(&rig2),
        "--input",
        s(&input),
        "--out",
        s(&fx.path("m.json")),
        "--source-topology",
        "fine",
    ]);
    assert!(r["results"]["mean_error_mm"].as_f64().unwrap() < 0.5);
}

#[test]
fn cli_output_is_byte_identical_to_the_library() {
    let fx = Fixture::new(&[]);
    let inv = fx.path("inv.json");
    ok(&[
        "invert",
        "--rig",
        s(&fx.rig()),
        "--input",
        s(&fx.posed()),
        "--out",
        s(&inv),
        "--schedule=body:1,global:1",
        "--tau=0.4",
    ]);
    let rig = load_rig(fx.rig()).unwrap();
    let frames = load_vertex_animation(fx.posed()).unwrap();
    let config = InversionConfig {
        mode: Mode::Analytical,
        schedule: Schedule { body: 1, finger: 0, global: 1 },
        tau: 0.4,
        ..Default::default()
    };
    let inverter = Inverter::bind(&rig).unwrap();
    let poses: Vec<PoseFrame> = frames.iter().map(|f| inverter.invert(f, None, &config).unwrap().pose).collect();
    let enc = poses[0].rotations.encoding();
    let lib = fx.path("lib/inv.json");
    fs::create_dir_all(lib.parent().unwrap()).unwrap();
    save_motion(&MotionSequence::new(30.0, enc, rig.joint_count(), poses).unwrap(), &lib).unwrap();
    assert_eq!(fs::read(&inv).unwrap(), fs::read(&lib).unwrap());
    assert_eq!(fs::read(fx.path("inv.frames.bin")).unwrap(), fs::read(fx.path("lib/inv.frames.bin")).unwrap());

    // posing too
    let motion = load_motion(fx.path("fx/motion.json")).unwrap();
    let posed = Poser::bind(&rig).pose_batch(&motion.frames, PoseOptions::default()).unwrap();
    let lib_posed = fx.path("lib/posed.json");
    save_vertex_animation(&posed, &lib_posed).unwrap();
    assert_eq!(fs::read(fx.path("posed.positions.bin")).unwrap(), fs::read(fx.path("lib/posed.positions.bin")).unwrap());
}

fn hashes(r: &Value) -> Vec<String> {
    r["artifacts"].as_array().unwrap().iter().map(|a| a["sha256"].as_str().unwrap().to_string()).collect()
}

#[test]
fn commands_are_idempotent_and_thread_independent() {
    let dir = tempfile::tempdir().unwrap();
    let a = ok(&["synth", "--out", s(&dir.path().join("a")), "--correctives", "--seed", "9"]);
    let b = ok(&["synth", "--out", s(&dir.path().join("b")), "--correctives", "--seed", "9"]);
    assert_eq!(hashes(&a), hashes(&b));
    assert_eq!(a["results"]["fixture_hash"], b["results"]["fixture_hash"]);
    let c = ok(&["synth", "--out", s(&dir.path().join("c")), "--correctives", "--seed", "10"]);
    assert_ne!(hashes(&a), hashes(&c));

    let rig = dir.path().join("a/rig.json");
    let motion = dir.path().join("a/motion.json");
    let p1 = ok(&["pose", "--rig", s(&rig), "--motion", s(&motion), "--out", s(&dir.path().join("p1.json"))]);
    let p2 = ok(&["pose", "--rig", s(&rig), "--motion", s(&motion), "--out", s(&dir.path().join("p1.json"))]);
    assert_eq!(hashes(&p1), hashes(&p2));
    assert_eq!(p1["config_hash"], p2["config_hash"]);

    let run = |threads: &str, name: &str| {
        ok(&[
            "invert",
            "--threads",
            threads,
            "--rig",
            s(&rig),
            "--input",
            s(&dir.path().join("p1.json")),
            "--out",
            s(&dir.path().join(name)),
        ]);
        fs::read(dir.path().join(name.replace(".json", ".frames.bin"))).unwrap()
    };
    assert_eq!(run("1", "i1.json"), run("3", "i3.json"));
    assert_eq!(run("1", "i1.json"), run("1", "i1b.json"));
}

#[test]
fn reports_echo_the_resolved_config() {
    let fx = Fixture::new(&[]);
    let cfg = fx.path("cfg.json");
    fs::write(&cfg, r#"{ "inversion": { "tau": 0.3, "schedule": { "body": 1 } }, "motion": { "fps": 24.0 } }"#).unwrap();
    let r = ok(&[
        "invert",
        "--config",
        s(&cfg),
        "--rig",
        s(&fx.rig()),
        "--input",
        s(&fx.posed()),
        "--out",
        s(&fx.path("m.json")),
        "--iters",
        "7",
    ]);
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["config"]["inversion"]["tau"], 0.3);
    assert_eq!(r["config"]["inversion"]["schedule"]["body"], 1);
    // omitted config keys keep their defaults
    assert_eq!(r["config"]["inversion"]["schedule"]["global"], 1);
    assert_eq!(r["config"]["inversion"]["autograd"]["iterations"], 7);
    assert_eq!(r["config"]["seed"], 7);
    assert_eq!(r["config_hash"].as_str().unwrap().len(), 64);
    assert!(r["versions"]["rigkit"].is_string() && r["versions"]["rigkit_cli"].is_string());
    assert!(r["timings_ms"].as_array().unwrap().iter().any(|t| t[0] == "total"));
    assert_eq!(load_motion(fx.path("m.json")).unwrap().fps, 24.0);
}

#[test]
fn bad_input_exits_two() {
    let fx = Fixture::new(&[]);
    let code = |args: &[&str]| rigkit(args).status.code();
    assert_eq!(code(&["pose", "--rig", s(&fx.rig()), "--motion", "m.json", "--out", "x.json", "--unknown"]), Some(2));
    assert_eq!(code(&["frobnicate"]), Some(2));
    let cfg = fx.path("bad.json");
    fs::write(&cfg, r#"{ "inversion": { "tua": 0.3 } }"#).unwrap();
    let out = rigkit(&["--config", s(&cfg), "fit-skel", "--rig", s(&fx.rig()), "--out", s(&fx.path("s.json"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("InvalidConfig"));
    let out = rigkit(&["invert", "--rig", s(&fx.rig()), "--input", s(&fx.posed()), "--out", "m.json", "--tau", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    let out = rigkit(&["fit-skel", "--rig", s(&fx.path("missing/rig.json")), "--out", s(&fx.path("s.json"))]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(code(&["--help"]), Some(0));
}

#[test]
fn numeric_failure_exits_three() {
    let fx = Fixture::new(&[]);
    // a hopeless step size makes every refinement step worse than the start
    let cfg = fx.path("cfg.json");
    fs::write(&cfg, r#"{ "inversion": { "autograd": { "step_size": 50.0, "iterations": 5 } } }"#).unwrap();
    let out = rigkit(&[
        "invert",
        "--config",
        s(&cfg),
        "--rig",
        s(&fx.rig()),
        "--input",
        s(&fx.posed()),
        "--out",
        s(&fx.path("m.json")),
        "--mode=autograd",
    ]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Diverged"));
}

#[test]
fn fit_skel_writes_a_skeleton_state() {
    let fx = Fixture::new(&[]);
    let out = fx.path("state.json");
    let r = ok(&["fit-skel", "--rig", s(&fx.rig()), "--out", s(&out)]);
    assert_eq!(r["results"]["joints"], 12);
    let doc: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["names"].as_array().unwrap().len(), 12);
    assert_eq!(doc["rotations"][0].as_array().unwrap().len(), 9);
    let rig = load_rig(fx.rig()).unwrap();
    let bind = rig.skeleton().bind_positions();
    for (k, p) in doc["positions"].as_array().unwrap().iter().enumerate() {
        let p: Vec<f64> = p.as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
        let d = (rigkit::geom::Vec3::new(p[0], p[1], p[2]) - bind[k]).norm();
        assert!(d < 1e-6, "joint {k}: {d}");
    }
}

#[test]
fn bench_reports_rows_and_bitwise_outputs() {
    let fx = Fixture::new(&[]);
    let r = ok(&["bench", "--rig", s(&fx.rig()), "--batches", "1,4", "--reps", "1", "--warmup", "0", "--threads", "1"]);
    let rows = r["results"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|row| row["low_confidence"] == true && row["items_per_sec"].as_f64().unwrap() > 0.0));
    assert_eq!(r["results"]["outputs_match_untimed"], true);
    assert_eq!(r["results"]["machine"]["threads"], 1);
    let out = rigkit(&["bench", "--rig", s(&fx.rig()), "--stage", "init", "--batches", "2", "--reps", "2", "--format", "table"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("items/sec") && text.contains("invert_init"), "{text}");
}

#[test]
fn metrics_table_lists_regions() {
    let fx = Fixture::new(&[]);
    let out = rigkit(&[
        "metrics",
        "--pred",
        s(&fx.posed()),
        "--target",
        s(&fx.posed()),
        "--rig",
        s(&fx.rig()),
        "--closest",
        "--exclude",
        "head",
        "--format",
        "table",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for col in ["Mean (mm)", "P95 (mm)", "hands", "feet"] {
        assert!(text.contains(col), "{text}");
    }
    let r = ok(&["metrics", "--pred", s(&fx.posed()), "--target", s(&fx.posed()), "--rig", s(&fx.rig()), "--exclude", "head"]);
    assert!(r["results"]["regions"]["head"].is_null());
    assert_eq!(r["results"]["error"]["max_mm"], 0.0);
}
