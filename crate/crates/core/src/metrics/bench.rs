use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub warmup: usize,
    pub repetitions: usize,
    /// Worker threads for the timed runs; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self { warmup: 2, repetitions: 7, threads: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub batch: usize,
    pub ms_per_call: f64,
    pub items_per_sec: f64,
    pub repetitions: usize,
    pub low_confidence: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachineInfo {
    pub os: String,
    pub arch: String,
    pub logical_cpus: usize,
    pub threads: usize,
    pub crate_version: String,
}

impl MachineInfo {
    fn current(threads: usize) -> Self {
        Self {
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            logical_cpus: std::thread::available_parallelism().map_or(1, |n| n.get()),
            threads,
            crate_version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub stage: String,
    pub rows: Vec<BenchRow>,
    pub machine: MachineInfo,
}

impl BenchReport {
    pub fn row(&self, batch: usize) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.batch == batch)
    }

    /// Aligned text table.
    pub fn table(&self) -> String {
        let mut out = format!(
            "{} ({} threads, {}/{})\n{:>8} {:>12} {:>14} {:>5}\n",
            self.stage, self.machine.threads, self.machine.os, self.machine.arch, "batch", "ms/call", "items/sec", "reps"
        );
        for r in &self.rows {
            out += &format!(
                "{:>8} {:>12.3} {:>14.1} {:>5}{}\n",
                r.batch,
                r.ms_per_call,
                r.items_per_sec,
                r.repetitions,
                if r.low_confidence { " (low confidence)" } else { "" }
            );
        }
        out
    }
}

/// Times `stage(batch)` for each batch size. Warm-up calls are discarded and
/// the median over `repetitions` is reported. The outputs of the last timed
/// call per batch are returned untouched so callers can compare them
/// against untimed runs.
pub fn throughput_bench<T: Send>(
    stage: &str,
    batches: &[usize],
    config: &BenchConfig,
    mut run: impl FnMut(usize) -> Result<T> + Send,
) -> Result<(BenchReport, Vec<T>)> {
    if config.repetitions == 0 {
        return Err(Error::InvalidConfig("bench repetitions must be at least 1".into()));
    }
    if batches.contains(&0) {
        return Err(Error::InvalidConfig("bench batch sizes must be positive".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let threads = pool.current_num_threads();
    pool.install(|| {
        let mut rows = Vec::with_capacity(batches.len());
        let mut outputs = Vec::with_capacity(batches.len());
        for &batch in batches {
            for _ in 0..config.warmup {
                run(batch)?;
            }
            let mut times = Vec::with_capacity(config.repetitions);
            let mut last = None;
            for _ in 0..config.repetitions {
                let t = Instant::now();
                let out = run(batch)?;
                times.push(t.elapsed().as_secs_f64());
                last = Some(out);
            }
            times.sort_by(f64::total_cmp);
            let n = times.len();
            let median = if n % 2 == 1 { times[n / 2] } else { 0.5 * (times[n / 2 - 1] + times[n / 2]) };
            let secs = median.max(1e-12);
            rows.push(BenchRow {
                batch,
                ms_per_call: median * 1e3,
                items_per_sec: batch as f64 / secs,
                repetitions: n,
                low_confidence: n == 1,
            });
            outputs.extend(last);
        }
        Ok((
            BenchReport { stage: stage.into(), rows, machine: MachineInfo::current(threads) },
            outputs,
        ))
    })
}
