use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rigkit::{Error, Result};
use serde::Serialize;
use serde_json::Value;

use crate::args::{Command, Format};
use crate::commands::Outcome;
use crate::config::{sha256_hex, RunConfig};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub rigkit: &'static str,
    pub rigkit_cli: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct Artifact {
    pub path: PathBuf,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub args: Value,
    /// Fully resolved configuration (defaults, file, then flags).
    pub config: RunConfig,
    /// SHA-256 of the canonical JSON of `command`, `args` and `config`.
    pub config_hash: String,
    pub versions: Versions,
    pub threads: usize,
    /// Milliseconds per stage, in execution order, plus `total`.
    pub timings_ms: Vec<(String, f64)>,
    pub artifacts: Vec<Artifact>,
    pub results: Value,
    #[serde(skip)]
    table: String,
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Synth(_) => "synth",
        Command::Precompute(_) => "precompute",
        Command::Transfer(_) => "transfer",
        Command::FitSkel(_) => "fit-skel",
        Command::Pose(_) => "pose",
        Command::Invert(_) => "invert",
        Command::Metrics(_) => "metrics",
        Command::Bench(_) => "bench",
    }
}

/// Hash every written file; blobs named `<stem>.*` beside a manifest are
/// included after it.
fn artifacts(paths: &[PathBuf]) -> Result<Vec<Artifact>> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut inner: Vec<PathBuf> = read_dir(p)?.into_iter().filter(|f| f.is_file()).collect();
            inner.sort();
            files.extend(inner);
            continue;
        }
        files.push(p.clone());
        if p.extension().is_some_and(|e| e == "json") {
            let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
            let dir = p.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
            let prefix = format!("{stem}.");
            let mut blobs: Vec<PathBuf> = read_dir(dir)?
                .into_iter()
                .filter(|f| {
                    let name = f.file_name().and_then(|n| n.to_str()).unwrap_or_default();
                    (name.starts_with(&prefix) || name.starts_with(&format!("{stem}_"))) && name.ends_with(".bin")
                })
                .collect();
            blobs.sort();
            files.extend(blobs);
        }
    }
    files
        .into_iter()
        .map(|path| {
            let bytes = fs::read(&path).map_err(|e| io_err(&path, e))?;
            Ok(Artifact {
                bytes: bytes.len() as u64,
                sha256: sha256_hex(&bytes),
                path,
            })
        })
        .collect()
}

fn read_dir(dir: &Path) -> Result<Vec<PathBuf>> {
    let rd = fs::read_dir(dir).map_err(|e| io_err(dir, e))?;
    rd.map(|e| e.map(|e| e.path()).map_err(|e| io_err(dir, e))).collect()
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

impl Report {
    pub(crate) fn build(command: &Command, cfg: &RunConfig, threads: usize, o: Outcome, total: Duration) -> Result<Self> {
        let args = serde_json::to_value(command).expect("arguments serialize");
        // the variant wrapper is redundant with `command`
        let args = match args {
            Value::Object(mut m) if m.len() == 1 => m.values_mut().next().map(Value::take).unwrap_or_default(),
            v => v,
        };
        let name = command_name(command);
        let canonical = serde_json::to_string(&serde_json::json!({ "command": name, "args": args, "config": cfg }))
            .expect("config serializes");
        let mut timings_ms = o.timings;
        timings_ms.push(("total".into(), total.as_secs_f64() * 1e3));
        Ok(Self {
            schema_version: REPORT_SCHEMA_VERSION,
            command: name.into(),
            args,
            config: cfg.clone(),
            config_hash: sha256_hex(canonical.as_bytes()),
            versions: Versions {
                rigkit: rigkit::VERSION,
                rigkit_cli: env!("CARGO_PKG_VERSION"),
            },
            threads,
            timings_ms,
            artifacts: artifacts(&o.written)?,
            results: o.results,
            table: o.table,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// Aligned text rendering: a header block, the command's tables, then
    /// timings.
    pub fn to_table(&self) -> String {
        let mut s = format!(
            "rigkit {} ({}), schema {}, {} threads\nconfig {}\n\n",
            self.command, self.versions.rigkit, self.schema_version, self.threads, self.config_hash
        );
        s += &self.table;
        if !self.artifacts.is_empty() {
            s += "\nartifacts\n";
            for a in &self.artifacts {
                s += &format!("  {}  {:>10}  {}\n", &a.sha256[..16], a.bytes, a.path.display());
            }
        }
        s += "\ntimings (ms)\n";
        for (k, v) in &self.timings_ms {
            s += &format!("  {k:<12} {v:>10.2}\n");
        }
        s
    }

    pub(crate) fn emit(&self, format: Format, to: Option<&Path>, out: &mut dyn Write) -> Result<()> {
        let text = match format {
            Format::Json => self.to_json(),
            Format::Table => self.to_table(),
        };
        match to {
            Some(p) => fs::write(p, text).map_err(|e| io_err(p, e)),
            None => out.write_all(text.as_bytes()).map_err(|e| io_err(Path::new("<stdout>"), e)),
        }
    }
}
