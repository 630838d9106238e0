use std::fs;
use std::path::Path;

use rigkit::inversion::InversionConfig;
use rigkit::synth::SynthConfig;
use rigkit::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Everything a run can be configured with. Loaded from `--config`, then
/// overridden by flags; the result is echoed into every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// `None` uses every core.
    pub threads: Option<usize>,
    pub synth: SynthConfig,
    pub motion: MotionSettings,
    pub correctives: CorrectivesSettings,
    pub inversion: InversionConfig,
    pub bench: BenchSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: SynthConfig::default().seed,
            threads: None,
            synth: SynthConfig::default(),
            motion: MotionSettings::default(),
            correctives: CorrectivesSettings::default(),
            inversion: InversionConfig::default(),
            bench: BenchSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotionSettings {
    pub frames: usize,
    pub fps: f64,
    /// AR(1) coefficient between consecutive sampled poses.
    pub smoothness: f64,
}

impl Default for MotionSettings {
    fn default() -> Self {
        Self {
            frames: 16,
            fps: 30.0,
            smoothness: 0.6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorrectivesSettings {
    pub channels: usize,
    /// Geodesic mask radius, meters.
    pub radius: f64,
    /// Stage-2 weight scale, meters per unit activation.
    pub amplitude: f64,
}

impl Default for CorrectivesSettings {
    fn default() -> Self {
        Self {
            channels: 4,
            radius: 0.1,
            amplitude: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSettings {
    pub batches: Vec<usize>,
    pub warmup: usize,
    pub repetitions: usize,
}

impl Default for BenchSettings {
    fn default() -> Self {
        Self {
            batches: vec![1, 32],
            warmup: 2,
            repetitions: 5,
        }
    }
}

impl RunConfig {
    /// Defaults, overridden by the file at `path`, then by `seed`/`threads`.
    pub fn resolve(path: Option<&Path>, seed: Option<u64>, threads: Option<usize>) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| Error::InvalidConfig(format!("{}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", p.display())))?
            }
            None => RunConfig::default(),
        };
        if let Some(s) = seed {
            cfg.seed = s;
        }
        if threads.is_some() {
            cfg.threads = threads;
        }
        if cfg.threads == Some(0) {
            return Err(Error::InvalidConfig("threads must be at least 1".into()));
        }
        cfg.synth.seed = cfg.seed;
        Ok(cfg)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
