//! Benchmark harness: single verified runs, sweeps across engine, worker,
//! knowledge, and seed axes, and CSV/JSON emission.
//!
//! Sweeps run one experiment at a time; runs are multi-threaded and
//! timing-sensitive, so running them concurrently would distort durations.
//! Raw rows are flushed as they complete, and an aggregate CSV with mean and
//! standard deviation per (engine, workers, knowledge) cell is written at the
//! end — the shape needed to plot re-execution and throughput curves.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;
use thiserror::Error;

use crate::engine::{self, EngineConfig, EngineError, EngineKind, EpochOutcome};
use crate::oracle;
use crate::workload::{generate_block, Block, WorkloadError, WorkloadParams};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("verification failed: {violations} violation(s), first: {first}")]
    Verification { violations: usize, first: String },
    #[error("invalid sweep spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("sweep spec parse error: {0}")]
    Toml(#[from] toml::de::Error),
}

impl HarnessError {
    /// Process exit code: 2 for validation/verification failures, 3 for
    /// watchdog timeouts, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Verification { .. }
            | HarnessError::Workload(_)
            | HarnessError::InvalidSpec(_)
            | HarnessError::Toml(_) => 2,
            HarnessError::Engine(EngineError::ProgressTimeout { .. }) => 3,
            _ => 1,
        }
    }
}

/// Full cross product of a sweep, plus the workload template the per-cell
/// blocks are generated from (its block_size/knowledge/seed fields are
/// overridden per cell).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    pub engines: Vec<EngineKind>,
    pub workers: Vec<usize>,
    pub knowledge: Vec<u8>,
    pub seeds: Vec<u64>,
    pub block_size: usize,
    pub repeats: usize,
    pub verify: bool,
    pub workload: WorkloadParams,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            engines: vec![
                EngineKind::Sequential,
                EngineKind::BlockStm,
                EngineKind::Nemo,
                EngineKind::NemoNoPq,
                EngineKind::Pcc,
            ],
            workers: vec![16],
            knowledge: vec![0, 25, 50, 75, 90, 100],
            seeds: vec![1, 2, 3, 4, 5],
            block_size: 1000,
            repeats: 5,
            verify: false,
            workload: WorkloadParams::default(),
        }
    }
}

impl SweepSpec {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        Ok(toml::from_str(text)?)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let err = |msg: &str| Err(HarnessError::InvalidSpec(msg.to_string()));
        if self.engines.is_empty() || self.workers.is_empty() {
            return err("engines and workers must be non-empty");
        }
        if self.knowledge.is_empty() || self.seeds.is_empty() {
            return err("knowledge and seeds must be non-empty");
        }
        if self.repeats == 0 {
            return err("repeats must be >= 1");
        }
        if self.knowledge.iter().any(|&k| k > 100) {
            return err("knowledge values must be in 0..=100");
        }
        if self.block_size == 0 {
            return err("block_size must be >= 1");
        }
        Ok(())
    }

    /// Axes an engine actually spans. The pessimistic baseline always runs
    /// from exhaustive sets, so its knowledge column is pinned to 100;
    /// sequential ignores both axes and runs once per seed.
    fn axes_for(&self, engine: EngineKind) -> (Vec<usize>, Vec<u8>) {
        match engine {
            EngineKind::Pcc => (self.workers.clone(), vec![100]),
            EngineKind::Sequential => (vec![1], vec![100]),
            _ => (self.workers.clone(), self.knowledge.clone()),
        }
    }
}

/// One row of the raw sweep CSV.
#[derive(Debug, Clone)]
pub struct RunRow {
    pub engine: EngineKind,
    pub workers: usize,
    pub knowledge: u8,
    pub seed: u64,
    pub repeat: usize,
    pub block_size: usize,
    pub duration_ms: f64,
    pub tps: f64,
    pub reexecutions: u64,
    pub failed_validations: u64,
    pub greedy_commits: u64,
    pub verified: bool,
}

pub const CSV_HEADER: &str = "engine,workers,knowledge,seed,repeat,block_size,duration_ms,tps,\
                              reexecutions,failed_validations,greedy_commits,verified";

impl RunRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{:.3},{:.3},{},{},{},{}",
            self.engine,
            self.workers,
            self.knowledge,
            self.seed,
            self.repeat,
            self.block_size,
            self.duration_ms,
            self.tps,
            self.reexecutions,
            self.failed_validations,
            self.greedy_commits,
            self.verified
        )
    }
}

/// Runs one engine over a block, optionally auditing the result with the
/// oracle. Returns the outcome; verification failures are errors.
pub fn run_once(
    block: &Block,
    engine: EngineKind,
    workers: usize,
    verify: bool,
    watchdog: Duration,
) -> Result<EpochOutcome, HarnessError> {
    let mut config = EngineConfig::new(engine, workers);
    config.seed = block.params.seed;
    config.watchdog = watchdog;
    let outcome = engine::run(block, &config)?;
    if verify {
        let violations = oracle::check_run(block, &outcome.report.final_state, &outcome.read_logs);
        if !violations.is_empty() {
            return Err(HarnessError::Verification {
                violations: violations.len(),
                first: violations[0].to_string(),
            });
        }
    }
    Ok(outcome)
}

/// Scalar JSON document for a single run.
pub fn report_json(
    block: &Block,
    engine: EngineKind,
    workers: usize,
    outcome: &EpochOutcome,
    verified: Option<bool>,
) -> serde_json::Value {
    let r = &outcome.report;
    serde_json::json!({
        "engine": engine.name(),
        "workers": workers,
        "block_size": block.len(),
        "knowledge": block.params.knowledge,
        "seed": block.params.seed,
        "duration_ms": r.duration_ms,
        "tps": r.tps,
        "reexecutions": r.reexecutions,
        "failed_validations": r.failed_validations,
        "greedy_commits": r.greedy_commits,
        "verified": verified,
    })
}

/// Aggregate CSV path derived from the raw path: `runs.csv` -> `runs.agg.csv`.
pub fn aggregate_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("sweep");
    out.with_file_name(format!("{stem}.agg.csv"))
}

#[derive(Default)]
struct CellStats {
    tps: Vec<f64>,
    duration_ms: Vec<f64>,
    reexecutions: Vec<f64>,
    failed_validations: Vec<f64>,
    greedy_commits: Vec<f64>,
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Sample standard deviation; 0 for fewer than two samples.
fn stddev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Runs the full sweep, streaming raw rows to `out` (one flush per run, so a
/// crash loses at most one) and writing the aggregate CSV next to it. Returns
/// the raw rows.
pub fn run_sweep(spec: &SweepSpec, out: &Path) -> Result<Vec<RunRow>, HarnessError> {
    spec.validate()?;
    let mut raw = BufWriter::new(File::create(out)?);
    writeln!(raw, "{CSV_HEADER}")?;
    raw.flush()?;

    let mut rows = Vec::new();
    let mut cells: BTreeMap<(String, usize, u8), CellStats> = BTreeMap::new();

    for &engine in &spec.engines {
        let (workers_list, knowledge_list) = spec.axes_for(engine);
        for &workers in &workers_list {
            for &knowledge in &knowledge_list {
                for &seed in &spec.seeds {
                    // One block per seed; repeats share it so variance
                    // reflects scheduling nondeterminism, not the workload.
                    let params = WorkloadParams {
                        block_size: spec.block_size,
                        knowledge,
                        seed,
                        ..spec.workload.clone()
                    };
                    let block = generate_block(&params)?;
                    for repeat in 0..spec.repeats {
                        let result = run_once(
                            &block,
                            engine,
                            workers,
                            spec.verify,
                            Duration::from_secs(30),
                        );
                        let (outcome, verified) = match result {
                            Ok(outcome) => (outcome, spec.verify),
                            Err(e @ HarnessError::Verification { .. }) => {
                                // Flush a row marking the failure, then bail.
                                let row = RunRow {
                                    engine,
                                    workers,
                                    knowledge,
                                    seed,
                                    repeat,
                                    block_size: spec.block_size,
                                    duration_ms: 0.0,
                                    tps: 0.0,
                                    reexecutions: 0,
                                    failed_validations: 0,
                                    greedy_commits: 0,
                                    verified: false,
                                };
                                writeln!(raw, "{}", row.to_csv())?;
                                raw.flush()?;
                                return Err(e);
                            }
                            Err(e) => return Err(e),
                        };
                        let r = &outcome.report;
                        let row = RunRow {
                            engine,
                            workers,
                            knowledge,
                            seed,
                            repeat,
                            block_size: spec.block_size,
                            duration_ms: r.duration_ms,
                            tps: r.tps,
                            reexecutions: r.reexecutions,
                            failed_validations: r.failed_validations,
                            greedy_commits: r.greedy_commits,
                            verified,
                        };
                        writeln!(raw, "{}", row.to_csv())?;
                        raw.flush()?;

                        let cell = cells
                            .entry((engine.name().to_string(), workers, knowledge))
                            .or_default();
                        cell.tps.push(r.tps);
                        cell.duration_ms.push(r.duration_ms);
                        cell.reexecutions.push(r.reexecutions as f64);
                        cell.failed_validations.push(r.failed_validations as f64);
                        cell.greedy_commits.push(r.greedy_commits as f64);
                        rows.push(row);
                    }
                }
            }
        }
    }

    let mut agg = BufWriter::new(File::create(aggregate_path(out))?);
    writeln!(
        agg,
        "engine,workers,knowledge,runs,tps_mean,tps_std,duration_ms_mean,duration_ms_std,\
         reexecutions_mean,reexecutions_std,failed_validations_mean,greedy_commits_mean"
    )?;
    for ((engine, workers, knowledge), cell) in &cells {
        writeln!(
            agg,
            "{},{},{},{},{:.3},{:.3},{:.3},{:.3},{:.3},{:.3},{:.3},{:.3}",
            engine,
            workers,
            knowledge,
            cell.tps.len(),
            mean(&cell.tps),
            stddev(&cell.tps),
            mean(&cell.duration_ms),
            stddev(&cell.duration_ms),
            mean(&cell.reexecutions),
            stddev(&cell.reexecutions),
            mean(&cell.failed_validations),
            mean(&cell.greedy_commits),
        )?;
    }
    agg.flush()?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fast_workload() -> WorkloadParams {
        // Sub-millisecond sleeps keep harness tests quick.
        WorkloadParams {
            duration_mu: -2.5,
            duration_sigma: 0.3,
            ..WorkloadParams::default()
        }
    }

    #[test]
    fn tps_matches_block_size_over_duration() {
        let params = WorkloadParams { block_size: 20, seed: 3, ..fast_workload() };
        let block = generate_block(&params).unwrap();
        let outcome =
            run_once(&block, EngineKind::Sequential, 1, true, Duration::from_secs(30)).unwrap();
        let r = &outcome.report;
        let expected = 20.0 / (r.duration_ms / 1000.0);
        assert!((r.tps - expected).abs() / expected < 1e-6);
    }

    #[test]
    fn sweep_writes_raw_and_aggregate_rows() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("runs.csv");
        let spec = SweepSpec {
            engines: vec![EngineKind::Sequential, EngineKind::Pcc],
            workers: vec![2],
            knowledge: vec![0, 100],
            seeds: vec![1],
            block_size: 10,
            repeats: 1,
            verify: true,
            workload: fast_workload(),
        };
        let rows = run_sweep(&spec, &out).unwrap();
        // Sequential and PCC both collapse the knowledge axis: one row each.
        assert_eq!(rows.len(), 2);
        let raw = std::fs::read_to_string(&out).unwrap();
        assert!(raw.starts_with("engine,workers,knowledge"));
        assert_eq!(raw.lines().count(), 3);
        let agg = std::fs::read_to_string(aggregate_path(&out)).unwrap();
        assert_eq!(agg.lines().count(), 3);
        assert!(rows.iter().all(|r| r.verified));
        assert!(rows.iter().all(|r| r.reexecutions == 0));
    }

    #[test]
    fn sweep_spec_validation_catches_empty_axes() {
        let mut spec = SweepSpec::default();
        spec.engines.clear();
        assert!(matches!(spec.validate(), Err(HarnessError::InvalidSpec(_))));
        let mut spec = SweepSpec::default();
        spec.repeats = 0;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn sweep_spec_parses_from_toml() {
        let text = r#"
            engines = ["blockstm", "nemo"]
            workers = [8, 16]
            knowledge = [0, 100]
            seeds = [1, 2]
            block_size = 100
            repeats = 2

            [workload]
            zipf_s = 1.5
        "#;
        let spec = SweepSpec::from_toml(text).unwrap();
        assert_eq!(spec.engines, vec![EngineKind::BlockStm, EngineKind::Nemo]);
        assert_eq!(spec.workers, vec![8, 16]);
        assert_eq!(spec.workload.zipf_s, 1.5);
        assert_eq!(spec.repeats, 2);
    }
}
