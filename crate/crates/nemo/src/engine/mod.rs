//! Epoch drivers binding workloads, scheduler modes, workers, and
//! multi-version memory into runnable engines.

mod occ;
mod pcc;
mod sequential;

use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Version;
use crate::mvmemory::MvMemoryError;
use crate::scheduler::{PerTxnStats, SchedulerMode};
use crate::vm::ReadLogEntry;
use crate::workload::Block;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    Sequential,
    BlockStm,
    Nemo,
    NemoNoPq,
    Pcc,
}

impl EngineKind {
    pub const ALL: [EngineKind; 5] = [
        EngineKind::Sequential,
        EngineKind::BlockStm,
        EngineKind::Nemo,
        EngineKind::NemoNoPq,
        EngineKind::Pcc,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            EngineKind::Sequential => "sequential",
            EngineKind::BlockStm => "blockstm",
            EngineKind::Nemo => "nemo",
            EngineKind::NemoNoPq => "nemonopq",
            EngineKind::Pcc => "pcc",
        }
    }

    /// Scheduler configuration for the optimistic engines.
    pub fn scheduler_mode(&self) -> Option<SchedulerMode> {
        match self {
            EngineKind::BlockStm => Some(SchedulerMode::block_stm()),
            EngineKind::Nemo => Some(SchedulerMode::nemo()),
            EngineKind::NemoNoPq => Some(SchedulerMode::nemo_no_pq()),
            _ => None,
        }
    }

    /// Whether owned-only transactions take the greedy commit fast path.
    pub fn uses_greedy_commit(&self) -> bool {
        matches!(self, EngineKind::Nemo | EngineKind::NemoNoPq)
    }
}

impl std::fmt::Display for EngineKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EngineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sequential" | "seq" => Ok(EngineKind::Sequential),
            "blockstm" | "block-stm" => Ok(EngineKind::BlockStm),
            "nemo" => Ok(EngineKind::Nemo),
            "nemonopq" | "nemo-nopq" => Ok(EngineKind::NemoNoPq),
            "pcc" => Ok(EngineKind::Pcc),
            other => Err(format!(
                "unknown engine '{other}' (expected sequential, blockstm, nemo, nemonopq, or pcc)"
            )),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EngineConfig {
    pub engine: EngineKind,
    /// Task-executing workers; the driver thread does not execute tasks.
    /// Forced to 1 for the sequential engine.
    pub workers: usize,
    /// Metadata echoed into result rows; engines themselves are
    /// deterministic given the block.
    pub seed: u64,
    /// Abort the run if no transaction commits for this long.
    pub watchdog: Duration,
}

impl EngineConfig {
    pub fn new(engine: EngineKind, workers: usize) -> Self {
        EngineConfig {
            engine,
            workers: workers.max(1),
            seed: 0,
            watchdog: Duration::from_secs(30),
        }
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("no commit progress for {stalled_ms} ms ({committed}/{total} committed)")]
    ProgressTimeout {
        stalled_ms: u64,
        committed: usize,
        total: usize,
    },
    #[error(transparent)]
    Memory(#[from] MvMemoryError),
}

/// Per-run metrics plus the committed final state.
#[derive(Debug, Clone)]
pub struct EpochReport {
    pub duration_ms: f64,
    /// Block size divided by the duration in seconds; 0 for an empty block.
    pub tps: f64,
    /// Completed executions beyond the first one per transaction.
    pub reexecutions: u64,
    pub failed_validations: u64,
    pub greedy_commits: u64,
    pub final_state: Vec<Version>,
    pub per_txn: Vec<PerTxnStats>,
}

impl EpochReport {
    pub(crate) fn finalize(block_size: usize, duration_ms: f64, mut self_: EpochReport) -> EpochReport {
        self_.duration_ms = duration_ms;
        self_.tps = if block_size == 0 || duration_ms <= 0.0 {
            0.0
        } else {
            block_size as f64 / (duration_ms / 1000.0)
        };
        self_
    }
}

/// A finished run: the report plus the committed read logs the oracle audits.
#[derive(Debug, Clone)]
pub struct EpochOutcome {
    pub report: EpochReport,
    /// Final-incarnation read log per transaction.
    pub read_logs: Vec<Vec<ReadLogEntry>>,
}

/// Runs the configured engine over the block from genesis to full commit.
pub fn run(block: &Block, config: &EngineConfig) -> Result<EpochOutcome, EngineError> {
    match config.engine {
        EngineKind::Sequential => Ok(sequential::run(block)),
        EngineKind::Pcc => pcc::run(block, config),
        EngineKind::BlockStm | EngineKind::Nemo | EngineKind::NemoNoPq => occ::run(block, config),
    }
}

/// Brief pause used by workers when the scheduler has nothing for them;
/// sleep-based so waiting workers do not starve executing ones.
pub(crate) struct Backoff {
    idles: u32,
}

impl Backoff {
    pub(crate) fn new() -> Self {
        Backoff { idles: 0 }
    }

    pub(crate) fn reset(&mut self) {
        self.idles = 0;
    }

    pub(crate) fn snooze(&mut self) {
        self.idles = (self.idles + 1).min(8);
        if self.idles <= 2 {
            std::thread::yield_now();
        } else {
            std::thread::sleep(Duration::from_micros(20 << self.idles));
        }
    }
}
