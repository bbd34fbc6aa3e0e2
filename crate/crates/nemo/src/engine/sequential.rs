//! Reference engine: one worker, block order, each transaction committing
//! straight to storage. Its final state is the serializability baseline.

use std::thread;
use std::time::{Duration, Instant};

use crate::model::Version;
use crate::scheduler::PerTxnStats;
use crate::vm::ReadLogEntry;
use crate::workload::Block;

use super::{EpochOutcome, EpochReport};

use crate::mvmemory::ReadOutcome;

pub(super) fn run(block: &Block) -> EpochOutcome {
    let n = block.len();
    let mut storage = vec![Version::GENESIS; block.object_count()];
    let mut read_logs: Vec<Vec<ReadLogEntry>> = Vec::with_capacity(n);

    let start = Instant::now();
    for txn in &block.transactions {
        let mut log = Vec::new();
        for object in txn.used_reads_sorted() {
            let version = storage[object as usize];
            let observed = if version.is_genesis() {
                ReadOutcome::FromStorage
            } else {
                ReadOutcome::FromVersion(version)
            };
            log.push(ReadLogEntry { object, observed });
        }
        thread::sleep(Duration::from_secs_f64(txn.duration_ms / 1000.0));
        for object in txn.used_writes() {
            storage[object as usize] = Version::new(txn.index, 0);
        }
        read_logs.push(log);
    }
    let duration_ms = start.elapsed().as_secs_f64() * 1000.0;

    let report = EpochReport::finalize(
        n,
        duration_ms,
        EpochReport {
            duration_ms: 0.0,
            tps: 0.0,
            reexecutions: 0,
            failed_validations: 0,
            greedy_commits: 0,
            final_state: storage,
            per_txn: vec![PerTxnStats::default(); n],
        },
    );
    EpochOutcome { report, read_logs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Access, AccessKind, ObjectKind, Transaction};
    use crate::workload::WorkloadParams;

    fn uniform_block(durations_ms: &[f64]) -> Block {
        let transactions = durations_ms
            .iter()
            .enumerate()
            .map(|(index, &duration_ms)| Transaction {
                index,
                accesses: vec![Access {
                    object: 0,
                    kind: AccessKind::ReadWrite,
                    used: true,
                    hinted: false,
                }],
                duration_ms,
                owned_only: false,
            })
            .collect();
        Block {
            params: WorkloadParams::default(),
            object_kinds: vec![ObjectKind::Shared],
            transactions,
        }
    }

    #[test]
    fn duration_is_roughly_the_sum_of_sleeps() {
        let outcome = run(&uniform_block(&[5.0, 5.0, 5.0]));
        let report = outcome.report;
        assert!(report.duration_ms >= 15.0, "duration {}", report.duration_ms);
        assert!(report.duration_ms < 60.0, "duration {}", report.duration_ms);
        assert_eq!(report.reexecutions, 0);
        assert!(report.tps > 0.0);
    }

    #[test]
    fn empty_block_reports_zero_tps() {
        let block = Block {
            params: WorkloadParams::default(),
            object_kinds: vec![ObjectKind::Shared],
            transactions: Vec::new(),
        };
        let outcome = run(&block);
        assert_eq!(outcome.report.tps, 0.0);
        assert_eq!(outcome.report.reexecutions, 0);
    }

    #[test]
    fn last_writer_wins_in_index_order() {
        let outcome = run(&uniform_block(&[0.1, 0.1, 0.1]));
        assert_eq!(outcome.report.final_state[0].writer, 2);
        // Reads observe the previous writer.
        assert_eq!(
            outcome.read_logs[2][0].observed,
            ReadOutcome::FromVersion(Version::new(1, 0))
        );
    }
}
