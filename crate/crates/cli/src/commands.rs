use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use rigkit::animation::{pose_mesh_batch, PoseOptions, Poser};
use rigkit::asset::*;
use rigkit::fit::SkeletonFitter;
use rigkit::geom::Vec3;
use rigkit::inversion::{InversionConfig, InversionResult, Inverter, Mode};
use rigkit::metrics::{
    closest_point_distances, temporal_stability, throughput_bench, vertex_distances, BenchConfig, ErrorStats,
    RegionBreakdown,
};
use rigkit::synth::*;
use rigkit::topo::precompute_correspondence;
use rigkit::{Error, Result};
use serde_json::{json, Value};

use crate::args::*;
use crate::config::{sha256_hex, RunConfig};

/// What a command hands back to the report.
pub struct Outcome {
    pub results: Value,
    pub table: String,
    pub written: Vec<PathBuf>,
    pub timings: Vec<(String, f64)>,
}

struct Stopwatch {
    last: Instant,
    laps: Vec<(String, f64)>,
}

impl Stopwatch {
    fn new() -> Self {
        Self { last: Instant::now(), laps: Vec::new() }
    }

    fn lap(&mut self, name: &str) {
        let now = Instant::now();
        self.laps.push((name.into(), (now - self.last).as_secs_f64() * 1e3));
        self.last = now;
    }
}

pub fn dispatch(cmd: &Command, cfg: &mut RunConfig) -> Result<Outcome> {
    match cmd {
        Command::Synth(a) => synth(a, cfg),
        Command::Precompute(a) => precompute(a),
        Command::Transfer(a) => transfer(a),
        Command::FitSkel(a) => fit_skel(a),
        Command::Pose(a) => pose(a),
        Command::Invert(a) => invert(a, cfg),
        Command::Metrics(a) => metrics(a),
        Command::Bench(a) => bench(a, cfg),
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn is_obj(p: &Path) -> bool {
    p.extension().is_some_and(|e| e.eq_ignore_ascii_case("obj"))
}

/// An OBJ is one frame; anything else is read as a vertex-animation manifest.
fn load_frames(p: &Path, unit_scale: f64) -> Result<Vec<Vec<Vec3>>> {
    if is_obj(p) {
        Ok(vec![load_obj(p, unit_scale)?.vertices().to_vec()])
    } else {
        load_vertex_animation(p)
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn ensure_parent(p: &Path) -> Result<()> {
    match p.parent().filter(|d| !d.as_os_str().is_empty()) {
        Some(d) => ensure_dir(d),
        None => Ok(()),
    }
}

fn write_json(p: &Path, v: &Value) -> Result<()> {
    ensure_parent(p)?;
    fs::write(p, serde_json::to_string_pretty(v).expect("json serializes") + "\n").map_err(|e| io_err(p, e))
}

fn kv_table(rows: &[(&str, String)]) -> String {
    let w = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    rows.iter().map(|(k, v)| format!("  {k:<w$}  {v}\n")).collect()
}

fn stats_json(s: &ErrorStats) -> Value {
    json!({ "mean_mm": s.mean, "median_mm": s.median, "p95_mm": s.p95, "max_mm": s.max, "count": s.count })
}

/// Columns follow the usual error-table layout.
fn stats_table(rows: &[(&str, Option<ErrorStats>)]) -> String {
    let mut s = format!(
        "  {:<8} {:>10} {:>12} {:>10} {:>10} {:>9}\n",
        "region", "Mean (mm)", "Median (mm)", "P95 (mm)", "Max (mm)", "count"
    );
    for (name, st) in rows {
        match st {
            Some(st) => {
                s += &format!(
                    "  {:<8} {:>10.3} {:>12.3} {:>10.3} {:>10.3} {:>9}\n",
                    name, st.mean, st.median, st.p95, st.max, st.count
                )
            }
            None => s += &format!("  {:<8} {:>10}\n", name, "-"),
        }
    }
    s
}

fn synth(a: &SynthArgs, cfg: &mut RunConfig) -> Result<Outcome> {
    let mut sw = Stopwatch::new();
    if let Some(p) = a.preset {
        cfg.synth = match p {
            Preset::Default => SynthConfig::default(),
            Preset::Fingers => SynthConfig::with_fingers(),
            Preset::Dense => SynthConfig::dense(),
            Preset::SingleCapsule => SynthConfig::single_capsule(),
        };
        cfg.synth.seed = cfg.seed;
    }
    if let Some(f) = a.frames {
        cfg.motion.frames = f;
    }
    let s = make_rig(&cfg.synth)?;
    let mut rig = s.rig.clone();
    if a.correctives {
        let c = &cfg.correctives;
        let net = random_correctives(&rig, c.channels, c.radius, c.amplitude, cfg.seed)?;
        rig = rig.with_correctives(net)?;
    }
    let limits = PoseLimits::new(cfg.synth.max_pose_angle);
    let mut motion = sample_motion(&rig, cfg.seed.wrapping_add(1), cfg.motion.frames, cfg.motion.smoothness, &limits)?;
    motion.fps = cfg.motion.fps;
    sw.lap("generate");

    ensure_dir(&a.out)?;
    let rig_path = a.out.join("rig.json");
    let motion_path = a.out.join("motion.json");
    save_rig(&rig, &rig_path)?;
    save_motion(&motion, &motion_path)?;
    let mut written = vec![rig_path, motion_path];
    if let Some(mode) = &a.remesh {
        let mode = RemeshMode::parse(mode).ok_or_else(|| Error::InvalidConfig(format!("remesh mode '{mode}'")))?;
        let v = remesh_variant(&s, mode)?;
        for (name, m) in [("source.obj", &v.mesh), ("wrap.obj", &v.wrap)] {
            let p = a.out.join(name);
            save_obj(m.vertices(), m.faces(), &p)?;
            written.push(p);
        }
    }
    // fixtures are versioned by the hash of what generated them
    let generator = json!({ "synth": cfg.synth, "motion": cfg.motion, "correctives": a.correctives.then_some(&cfg.correctives), "remesh": a.remesh });
    let fixture_hash = sha256_hex(serde_json::to_string(&generator).expect("json").as_bytes());
    let fixture = a.out.join("fixture.json");
    write_json(&fixture, &json!({ "generator": generator, "fixture_hash": fixture_hash }))?;
    written.push(fixture);
    sw.lap("write");

    let results = json!({
        "joints": rig.joint_count(),
        "vertices": rig.vertex_count(),
        "faces": rig.mesh().face_count(),
        "frames": motion.len(),
        "correctives": rig.correctives().is_some(),
        "fixture_hash": fixture_hash,
    });
    let table = kv_table(&[
        ("joints", rig.joint_count().to_string()),
        ("vertices", rig.vertex_count().to_string()),
        ("frames", motion.len().to_string()),
        ("fixture", fixture_hash[..16].to_string()),
    ]);
    Ok(Outcome { results, table, written, timings: sw.laps })
}

fn precompute(a: &PrecomputeArgs) -> Result<Outcome> {
    let mut sw = Stopwatch::new();
    let rig = load_rig(&a.rig)?;
    let source = load_obj(&a.source, a.unit_scale)?;
    let wrap = load_obj(&a.wrap, a.unit_scale)?;
    sw.lap("load");
    let corr = precompute_correspondence(&source, &wrap, &a.source_id)?;
    sw.lap("precompute");
    let lifts: Vec<f64> = corr.bary().iter().map(|b| b[3].abs()).collect();
    let unmatched = corr.unmatched().map_or(0, |u| u.iter().filter(|&&x| x).count());
    let rig = rig.with_correspondence(corr.clone())?;
    let out = a.out.clone().unwrap_or_else(|| a.rig.clone());
    ensure_parent(&out)?;
    save_rig(&rig, &out)?;
    let mut written = vec![out];
    if let Some(dir) = &a.export {
        ensure_dir(dir)?;
        let p = dir.join(format!("{}.corr.json", a.source_id));
        save_correspondence(&corr, &p)?;
        written.push(p);
    }
    sw.lap("write");
    let mean_lift = lifts.iter().sum::<f64>() / lifts.len().max(1) as f64;
    let max_lift = lifts.iter().copied().fold(0.0, f64::max);
    let results = json!({
        "source_id": a.source_id,
        "source_vertices": source.vertices().len(),
        "source_faces": source.face_count(),
        "target_vertices": corr.target_vertex_count(),
        "unmatched": unmatched,
        "mean_offset_mm": mean_lift * 1e3,
        "max_offset_mm": max_lift * 1e3,
    });
    let table = kv_table(&[
        ("source_id", a.source_id.clone()),
        ("source faces", source.face_count().to_string()),
        ("targets", corr.target_vertex_count().to_string()),
        ("unmatched", unmatched.to_string()),
        ("mean |b4| (mm)", format!("{:.4}", mean_lift * 1e3)),
    ]);
    Ok(Outcome { results, table, written, timings: sw.laps })
}

fn transfer(a: &TransferArgs) -> Result<Outcome> {
    let mut sw = Stopwatch::new();
    let rig = load_rig(&a.rig)?;
    let corr = rig.correspondence(&a.source_topology)?;
    let frames = load_frames(&a.input, a.unit_scale)?;
    sw.lap("load");
    let mapped: Vec<Vec<Vec3>> = frames.par_iter().map(|f| corr.apply(f)).collect::<Result<_>>()?;
    sw.lap("transfer");
    ensure_parent(&a.out)?;
    if is_obj(&a.input) {
        save_obj(&mapped[0], rig.mesh().faces(), &a.out)?;
    } else {
        save_vertex_animation(&mapped, &a.out)?;
    }
    sw.lap("write");
    let results = json!({ "source_topology": a.source_topology, "frames": mapped.len(), "vertices": rig.vertex_count() });
    let table = kv_table(&[
        ("source", a.source_topology.clone()),
        ("frames", mapped.len().to_string()),
        ("vertices", rig.vertex_count().to_string()),
    ]);
    Ok(Outcome { results, table, written: vec![a.out.clone()], timings: sw.laps })
}

fn rest_shape(rig: &RigAsset, path: Option<&Path>, unit_scale: f64) -> Result<Vec<Vec3>> {
    match path {
        Some(p) => {
            let m = load_obj(p, unit_scale)?;
            if m.vertices().len() != rig.vertex_count() {
                return Err(Error::SizeMismatch {
                    what: "rest vertices",
                    expected: rig.vertex_count(),
                    found: m.vertices().len(),
                });
            }
            Ok(m.vertices().to_vec())
        }
        None => Ok(rig.mesh().vertices().to_vec()),
    }
}

fn fit_skel(a: &FitSkelArgs) -> Result<Outcome> {
    let mut sw = Stopwatch::new();
    let rig = load_rig(&a.rig)?;
    let rest = rest_shape(&rig, a.mesh.as_deref(), a.unit_scale)?;
    sw.lap("load");
    let state = SkeletonFitter::new(&rig)?.fit(&rest)?;
    sw.lap("fit");
    let tf = state.transforms();
    let rotations: Vec<Vec<f64>> = tf
        .iter()
        .map(|t| (0..3).flat_map(|i| (0..3).map(move |j| t.rotation[(i, j)])).collect())
        .collect();
    let positions: Vec<[f64; 3]> = tf.iter().map(|t| [t.translation.x, t.translation.y, t.translation.z]).collect();
    let skel = rig.skeleton();
    let doc = json!({
        "names": skel.names(),
        "parents": skel.parents().iter().map(|p| p.map_or(-1, |p| p as i64)).collect::<Vec<_>>(),
        "rotations": rotations,
        "positions": positions,
    });
    write_json(&a.out, &doc)?;
    sw.lap("write");
    let bones: Vec<f64> = skel
        .parents()
        .iter()
        .enumerate()
        .filter_map(|(k, p)| p.map(|p| (tf[k].translation - tf[p].translation).norm()))
        .collect();
    let results = json!({ "joints": tf.len(), "total_bone_length_m": bones.iter().sum::<f64>() });
    let table = kv_table(&[
        ("joints", tf.len().to_string()),
        ("bone length (m)", format!("{:.4}", bones.iter().sum::<f64>())),
    ]);
    Ok(Outcome { results, table, written: vec![a.out.clone()], timings: sw.laps })
}

fn pose(a: &PoseArgs) -> Result<Outcome> {
    let mut sw = Stopwatch::new();
    let rig = load_rig(&a.rig)?;
    let mut motion = load_motion(&a.motion)?;
    if let Some(flag) = a.joint_orient {
        for f in &mut motion.frames {
            f.joint_orient = flag == OnOff::On;
        }
    }
    let poser = match &a.rest {
        Some(p) => Poser::new(&rig, &rest_shape(&rig, Some(p), a.unit_scale)?)?,
        None => Poser::bind(&rig),
    };
    sw.lap("load");
    let opts = PoseOptions { correctives: !a.no_correctives };
    let frames = poser.pose_batch(&motion.frames, opts)?;
    sw.lap("pose");
    if a.obj {
        ensure_dir(&a.out)?;
        for (i, f) in frames.iter().enumerate() {
            save_obj(f, rig.mesh().faces(), a.out.join(format!("frame_{i:05}.obj")))?;
        }
    } else {
        ensure_parent(&a.out)?;
        save_vertex_animation(&frames, &a.out)?;
    }
    sw.lap("write");
    let applied = !a.no_correctives && rig.correctives().is_some();
    let results = json!({ "frames": frames.len(), "vertices": rig.vertex_count(), "correctives": applied });
    let table = kv_table(&[
        ("frames", frames.len().to_string()),
        ("vertices", rig.vertex_count().to_string()),
        ("correctives", applied.to_string()),
    ]);
    Ok(Outcome { results, table, written: vec![a.out.clone()], timings: sw.laps })
}

/// Flags layered over the config's inversion section.
fn inversion_config(a: &InvertArgs, base: &InversionConfig) -> Result<InversionConfig> {
    let mut c = *base;
    if let Some(m) = &a.mode {
        c.mode = m.parse()?;
    }
    if let Some(s) = &a.schedule {
        c.schedule = s.parse()?;
    }
    if let Some(t) = a.tau {
        c.tau = t;
    }
    if let Some(n) = a.iters {
        c.autograd.iterations = n;
    }
    if let Some(w) = &a.region_weights {
        c.autograd.region_weights = w.parse()?;
    }
    if let Some(f) = a.correctives {
        c.correctives = f == OnOff::On;
    }
    c.validate()?;
    Ok(c)
}

/// Recover one pose per frame. Also used by library-parity tests.
pub fn invert_frames(
    rig: &RigAsset,
    frames: &[Vec<Vec3>],
    source_topology: Option<&str>,
    config: &InversionConfig,
) -> Result<Vec<InversionResult>> {
    let inverter = Inverter::bind(rig)?;
    frames.par_iter().map(|f| inverter.invert(f, source_topology, config)).collect()
}

fn invert(a: &InvertArgs, cfg: &mut RunConfig) -> Result<Outcome> {
    let mut sw = Stopwatch::new();
    cfg.inversion = inversion_config(a, &cfg.inversion)?;
    let config = cfg.inversion;
    let rig = load_rig(&a.rig)?;
    let frames = load_frames(&a.input, a.unit_scale)?;
    sw.lap("load");
    let out = invert_frames(&rig, &frames, a.source_topology.as_deref(), &config)?;
    sw.lap("invert");
    let poses: Vec<PoseFrame> = out.iter().map(|r| r.pose.clone()).collect();
    let encoding = poses.first().map_or(RotationEncoding::Matrix, |p| p.rotations.encoding());
    let motion = MotionSequence::new(cfg.motion.fps, encoding, rig.joint_count(), poses)?;
    ensure_parent(&a.out)?;
    save_motion(&motion, &a.out)?;
    sw.lap("write");

    let per_frame: Vec<Value> = out
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let d = &r.diagnostics;
            json!({
                "frame": i,
                "mean_error_mm": r.mean_error * 1e3,
                "passes": d.passes_run,
                "ns_iterations_total": d.ns_iterations_total,
                "ns_iterations_max": d.ns_iterations_max,
                "flags": d.flags,
                "autograd": d.autograd,
            })
        })
        .collect();
    let errors: Vec<f64> = out.iter().map(|r| r.mean_error * 1e3).collect();
    let summary = ErrorStats::from_distances(&errors).ok();
    let mode = match config.mode {
        Mode::Init => "init",
        Mode::Analytical => "analytical",
        Mode::Autograd => "autograd",
    };
    let results = json!({
        "mode": mode,
        "schedule": config.schedule.to_string(),
        "frames": out.len(),
        "mean_error_mm": summary.map(|s| s.mean),
        "frame_error_mm": summary.as_ref().map(stats_json),
        "ns_iterations_total": out.iter().map(|r| r.diagnostics.ns_iterations_total).sum::<usize>(),
        "per_frame": per_frame,
    });
    let mut table = kv_table(&[
        ("mode", mode.into()),
        ("schedule", config.schedule.to_string()),
        ("frames", out.len().to_string()),
    ]);
    table += "\nper-frame mean residual\n";
    table += &stats_table(&[("all", summary)]);
    Ok(Outcome { results, table, written: vec![a.out.clone()], timings: sw.laps })
}

fn parse_region(s: &str) -> Result<Region> {
    Region::parse(s).ok_or_else(|| Error::InvalidConfig(format!("unknown region '{s}'")))
}

fn metrics(a: &MetricsArgs) -> Result<Outcome> {
    let mut sw = Stopwatch::new();
    let pred = load_frames(&a.pred, a.unit_scale)?;
    let target = load_frames(&a.target, a.unit_scale)?;
    if pred.len() != target.len() {
        return Err(Error::SizeMismatch {
            what: "frames",
            expected: target.len(),
            found: pred.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::EmptySelection);
    }
    let rig = a.rig.as_deref().map(load_rig).transpose()?;
    let n = pred[0].len();
    let regions: Option<Vec<Region>> = rig.as_ref().and_then(|r| r.mesh().regions().map(<[Region]>::to_vec));
    let needs_regions = !a.exclude.is_empty() || a.stability_region.is_some();
    let regions = match regions {
        Some(r) if r.len() != n => {
            return Err(Error::SizeMismatch {
                what: "region labels",
                expected: n,
                found: r.len(),
            })
        }
        None if needs_regions => return Err(Error::InvalidConfig("region options need a rig with region labels".into())),
        r => r,
    };
    let excluded: Vec<Region> = a.exclude.iter().map(|s| parse_region(s)).collect::<Result<_>>()?;
    let keep: Vec<bool> = match &regions {
        Some(r) => r.iter().map(|x| !excluded.contains(x)).collect(),
        None => vec![true; n],
    };
    sw.lap("load");

    let distances: Vec<Vec<f64>> = if a.closest {
        let rig = rig.as_ref().ok_or_else(|| Error::InvalidConfig("--closest needs --rig for faces".into()))?;
        pred.iter()
            .zip(&target)
            .map(|(p, t)| {
                let surface = rig.mesh().with_vertices(t.clone())?;
                closest_point_distances(p, &surface, None)
            })
            .collect::<Result<_>>()?
    } else {
        pred.iter().zip(&target).map(|(p, t)| vertex_distances(p, t)).collect::<Result<_>>()?
    };
    let mm: Vec<Vec<f64>> = distances.iter().map(|f| f.iter().map(|d| d * 1e3).collect()).collect();
    let pick = |sel: &dyn Fn(usize) -> bool| -> Vec<f64> {
        mm.iter().flat_map(|f| f.iter().enumerate().filter(|(i, _)| sel(*i)).map(|(_, d)| *d)).collect()
    };
    let all = ErrorStats::from_distances(&pick(&|i| keep[i]))?;
    let by_region = |r: Region| -> Option<ErrorStats> {
        if excluded.contains(&r) {
            return None;
        }
        let labels = regions.as_ref()?;
        ErrorStats::from_distances(&pick(&|i| labels[i] == r)).ok()
    };
    let breakdown = RegionBreakdown {
        all,
        body: by_region(Region::Body),
        hands: by_region(Region::Hands),
        feet: by_region(Region::Feet),
        head: by_region(Region::Head),
    };
    let stability_mask: Vec<bool> = match (&a.stability_region, &regions) {
        (Some(r), Some(labels)) => {
            let r = parse_region(r)?;
            labels.iter().zip(&keep).map(|(l, k)| *l == r && *k).collect()
        }
        _ => keep.clone(),
    };
    let stability = if mm.len() >= 2 { Some(temporal_stability(&mm, Some(&stability_mask))?) } else { None };
    sw.lap("metrics");

    let rows = breakdown.rows();
    let region_json: serde_json::Map<String, Value> =
        rows.iter().map(|(k, s)| (k.to_string(), s.as_ref().map(stats_json).unwrap_or(Value::Null))).collect();
    let results = json!({
        "kind": if a.closest { "closest_point" } else { "paired" },
        "frames": mm.len(),
        "error": stats_json(&all),
        "regions": region_json,
        "stability": stability.as_ref().map(|s| json!({
            "region": a.stability_region.as_deref().unwrap_or("all"),
            "max_delta_mm_per_frame": s.max_delta,
            "mean_delta_mm_per_frame": s.mean_delta,
        })),
    });
    let mut table = stats_table(&rows);
    if let Some(s) = &stability {
        table += &format!(
            "\n  stability ({}): max {:.4} mm/frame, mean {:.4} mm/frame\n",
            a.stability_region.as_deref().unwrap_or("all"),
            s.max_delta,
            s.mean_delta
        );
    }
    Ok(Outcome { results, table, written: Vec::new(), timings: sw.laps })
}

fn bench(a: &BenchArgs, cfg: &mut RunConfig) -> Result<Outcome> {
    let mut sw = Stopwatch::new();
    if let Some(b) = &a.batches {
        cfg.bench.batches = b.clone();
    }
    if let Some(r) = a.reps {
        cfg.bench.repetitions = r;
    }
    if let Some(w) = a.warmup {
        cfg.bench.warmup = w;
    }
    let batches = cfg.bench.batches.clone();
    let largest = batches.iter().copied().max().ok_or_else(|| Error::InvalidConfig("no batch sizes".into()))?;
    let rig = load_rig(&a.rig)?;
    let limits = PoseLimits::new(cfg.synth.max_pose_angle);
    let motion = sample_motion(&rig, cfg.seed, largest, cfg.motion.smoothness, &limits)?;
    let poser = Poser::bind(&rig);
    let opts = PoseOptions::default();
    sw.lap("prepare");
    let bc = BenchConfig {
        warmup: cfg.bench.warmup,
        repetitions: cfg.bench.repetitions,
        threads: cfg.threads,
    };
    let (report, identical) = match a.stage {
        Stage::Pose => {
            // full pose_mesh per call: one skeleton fit shared by the batch
            let rest = rig.mesh().vertices();
            let run = |b: usize| pose_mesh_batch(&rig, rest, &motion.frames[..b], opts);
            let untimed: Vec<_> = batches.iter().map(|&b| run(b)).collect::<Result<_>>()?;
            let (r, timed) = throughput_bench("pose_mesh", &batches, &bc, run)?;
            (r, timed == untimed)
        }
        stage => {
            let posed = poser.pose_batch(&motion.frames, opts)?;
            let inverter = Inverter::bind(&rig)?;
            let mut ic = cfg.inversion;
            ic.mode = match stage {
                Stage::Init => Mode::Init,
                Stage::Analytical => Mode::Analytical,
                _ => Mode::Autograd,
            };
            let run = |b: usize| -> Result<Vec<PoseFrame>> {
                posed[..b].par_iter().map(|p| inverter.invert(p, None, &ic).map(|r| r.pose)).collect()
            };
            let untimed: Vec<_> = batches.iter().map(|&b| run(b)).collect::<Result<_>>()?;
            let name = format!("invert_{}", format!("{stage:?}").to_lowercase());
            let (r, timed) = throughput_bench(&name, &batches, &bc, run)?;
            (r, timed == untimed)
        }
    };
    sw.lap("bench");
    let results = json!({
        "stage": report.stage,
        "rows": report.rows,
        "machine": report.machine,
        "outputs_match_untimed": identical,
    });
    let mut table = report.table();
    table += &format!("  outputs match untimed: {identical}\n");
    Ok(Outcome { results, table, written: Vec::new(), timings: sw.laps })
}
