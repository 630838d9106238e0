use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "rigkit", version, about = "Batch frontend for the rigkit body toolkit")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Global {
    /// JSON file overriding built-in defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed behind every random draw.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Default,
    Fingers,
    Dense,
    SingleCapsule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OnOff {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Pose,
    Init,
    Analytical,
    Autograd,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Generate a synthetic rig and motion fixture.
    Synth(SynthArgs),
    /// Register a source topology against the rig's canonical mesh.
    Precompute(PrecomputeArgs),
    /// Map source-topology vertices onto the canonical topology.
    Transfer(TransferArgs),
    /// Fit the skeleton into a rest-pose mesh.
    FitSkel(FitSkelArgs),
    /// Pose a rest shape with a motion file.
    Pose(PoseArgs),
    /// Recover a motion from posed vertices.
    Invert(InvertArgs),
    /// Compare two vertex sequences.
    Metrics(MetricsArgs),
    /// Time a pipeline stage over batch sizes.
    Bench(BenchArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    /// Output directory for rig.json, motion.json and fixture.json.
    #[arg(long)]
    pub out: PathBuf,
    /// Replaces the `synth` section of the config (seed kept).
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Frames in the sampled motion (overrides `motion.frames`).
    #[arg(long)]
    pub frames: Option<usize>,
    /// Attach a random correctives net.
    #[arg(long)]
    pub correctives: bool,
    /// Also write a remeshed source (`source.obj`) and its wrap (`wrap.obj`).
    #[arg(long, value_parser = ["subdivide", "decimate-lite"])]
    pub remesh: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct PrecomputeArgs {
    #[arg(long)]
    pub rig: PathBuf,
    /// Source mesh (OBJ).
    #[arg(long)]
    pub source: PathBuf,
    /// Canonical topology registered onto the source surface (OBJ).
    #[arg(long)]
    pub wrap: PathBuf,
    #[arg(long)]
    pub source_id: String,
    /// Rig manifest to write (default: update `--rig` in place).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write `<source_id>.corr.json` into this directory.
    #[arg(long)]
    pub export: Option<PathBuf>,
    /// Meters per OBJ unit.
    #[arg(long, default_value_t = 1.0)]
    pub unit_scale: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct TransferArgs {
    #[arg(long)]
    pub rig: PathBuf,
    #[arg(long)]
    pub source_topology: String,
    /// OBJ mesh or vertex-animation manifest on the source topology.
    #[arg(long)]
    pub input: PathBuf,
    /// Same kind as the input, on the canonical topology.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub unit_scale: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct FitSkelArgs {
    #[arg(long)]
    pub rig: PathBuf,
    /// Rest-pose mesh on the canonical topology (default: the bind shape).
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    /// Skeleton state JSON.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub unit_scale: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct PoseArgs {
    #[arg(long)]
    pub rig: PathBuf,
    #[arg(long)]
    pub motion: PathBuf,
    /// Vertex-animation manifest, or a directory with `--obj`.
    #[arg(long)]
    pub out: PathBuf,
    /// Rest shape of the identity to pose (OBJ; default: the bind shape).
    #[arg(long)]
    pub rest: Option<PathBuf>,
    #[arg(long)]
    pub no_correctives: bool,
    /// Override the motion file's joint-orient flag.
    #[arg(long, value_enum)]
    pub joint_orient: Option<OnOff>,
    /// Write one OBJ per frame.
    #[arg(long)]
    pub obj: bool,
    #[arg(long, default_value_t = 1.0)]
    pub unit_scale: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct InvertArgs {
    #[arg(long)]
    pub rig: PathBuf,
    /// Posed vertices: vertex-animation manifest or a single OBJ.
    #[arg(long)]
    pub input: PathBuf,
    /// Motion file to write.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_parser = ["init", "analytical", "autograd"])]
    pub mode: Option<String>,
    /// Sweep counts, e.g. `body:2,finger:1,global:1`.
    #[arg(long)]
    pub schedule: Option<String>,
    #[arg(long)]
    pub tau: Option<f64>,
    /// Gradient refinement iterations.
    #[arg(long)]
    pub iters: Option<usize>,
    /// Loss multipliers, e.g. `hands:5,feet:2`.
    #[arg(long)]
    pub region_weights: Option<String>,
    /// Registered correspondence the input is expressed in.
    #[arg(long)]
    pub source_topology: Option<String>,
    /// Include the correctives net when re-posing (on by default).
    #[arg(long, value_enum)]
    pub correctives: Option<OnOff>,
    #[arg(long, default_value_t = 1.0)]
    pub unit_scale: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct MetricsArgs {
    /// Prediction: vertex-animation manifest or OBJ.
    #[arg(long)]
    pub pred: PathBuf,
    /// Reference, same topology and frame count as the prediction.
    #[arg(long)]
    pub target: PathBuf,
    /// Rig supplying region labels and faces.
    #[arg(long)]
    pub rig: Option<PathBuf>,
    /// Closest-point distance to the reference surface instead of paired
    /// vertices (needs `--rig` for faces).
    #[arg(long)]
    pub closest: bool,
    /// Region whose per-frame mean drives the stability figures.
    #[arg(long)]
    pub stability_region: Option<String>,
    /// Regions left out of every statistic (closest-point exclusions).
    #[arg(long, value_delimiter = ',')]
    pub exclude: Vec<String>,
    #[arg(long, default_value_t = 1.0)]
    pub unit_scale: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct BenchArgs {
    #[arg(long)]
    pub rig: PathBuf,
    #[arg(long, value_enum, default_value_t = Stage::Pose)]
    pub stage: Stage,
    /// Comma-separated batch sizes.
    #[arg(long, value_delimiter = ',')]
    pub batches: Option<Vec<usize>>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub warmup: Option<usize>,
}
