//! Simulated transaction execution. Reads the used set from multi-version
//! memory, sleeps for the sampled duration to model compute, and reports the
//! read/write logs. Reads happen before the sleep so a blocked read aborts
//! before any expensive work; writes materialize after it, applied by the
//! caller.

use std::collections::BTreeSet;
use std::thread;
use std::time::Duration;

use crate::model::{ObjectId, Transaction, TxnIndex};
use crate::mvmemory::{MvMemory, ReadOutcome};

/// One observed read; blocked outcomes never appear in a completed log.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReadLogEntry {
    pub object: ObjectId,
    pub observed: ReadOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExecutionResult {
    Completed {
        read_log: Vec<ReadLogEntry>,
        write_set: Vec<ObjectId>,
        /// Writers of every observed version; dependencies are extracted even
        /// from successful executions.
        observed_deps: BTreeSet<TxnIndex>,
    },
    /// Hit a marker while reading; no sleep was performed.
    AbortedOnBlocked { blocker: TxnIndex },
}

/// Runs one incarnation of `txn` against `mem`. Reads are issued in ascending
/// object id order and the first blocked read aborts immediately. The write
/// set is fixed by the used set, so re-executions only ever differ in the
/// versions they observe.
pub fn execute(txn: &Transaction, mem: &MvMemory) -> ExecutionResult {
    let mut read_log = Vec::new();
    let mut observed_deps = BTreeSet::new();
    for object in txn.used_reads_sorted() {
        match mem.read(object, txn.index) {
            ReadOutcome::Blocked(blocker) => {
                return ExecutionResult::AbortedOnBlocked { blocker };
            }
            observed => {
                if let ReadOutcome::FromVersion(v) = observed {
                    observed_deps.insert(v.writer as TxnIndex);
                }
                read_log.push(ReadLogEntry { object, observed });
            }
        }
    }

    thread::sleep(Duration::from_secs_f64(txn.duration_ms / 1000.0));

    ExecutionResult::Completed {
        read_log,
        write_set: txn.used_writes().collect(),
        observed_deps,
    }
}

/// Re-reads a stored read log and checks every outcome still holds: same
/// storage fallback or same version, and no marker in the way.
pub fn validate(txn: TxnIndex, read_log: &[ReadLogEntry], mem: &MvMemory) -> bool {
    read_log.iter().all(|entry| {
        let now = mem.read(entry.object, txn);
        !matches!(now, ReadOutcome::Blocked(_)) && now == entry.observed
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Access, AccessKind, Version};
    use std::time::Instant;

    fn txn(index: TxnIndex, accesses: Vec<(ObjectId, AccessKind)>, duration_ms: f64) -> Transaction {
        Transaction {
            index,
            accesses: accesses
                .into_iter()
                .map(|(object, kind)| Access { object, kind, used: true, hinted: false })
                .collect(),
            duration_ms,
            owned_only: false,
        }
    }

    #[test]
    fn completed_execution_logs_reads_and_writes() {
        let mem = MvMemory::new(4, 8);
        let t = txn(2, vec![(1, AccessKind::ReadWrite)], 0.1);
        match execute(&t, &mem) {
            ExecutionResult::Completed { read_log, write_set, observed_deps } => {
                assert_eq!(
                    read_log,
                    vec![ReadLogEntry { object: 1, observed: ReadOutcome::FromStorage }]
                );
                assert_eq!(write_set, vec![1]);
                assert!(observed_deps.is_empty());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn observed_versions_become_dependencies() {
        let mem = MvMemory::new(4, 8);
        mem.apply_writes(3, 0, &[1]).unwrap();
        let t = txn(7, vec![(1, AccessKind::Read)], 0.1);
        match execute(&t, &mem) {
            ExecutionResult::Completed { observed_deps, .. } => {
                assert_eq!(observed_deps.into_iter().collect::<Vec<_>>(), vec![3]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn blocked_read_aborts_without_sleeping() {
        let mem = MvMemory::new(4, 8);
        mem.apply_writes(3, 0, &[1]).unwrap();
        mem.mark_estimates(3);
        // A long sleep that must never run.
        let t = txn(7, vec![(1, AccessKind::Read)], 500.0);
        let start = Instant::now();
        let result = execute(&t, &mem);
        assert!(start.elapsed() < Duration::from_millis(50));
        assert_eq!(result, ExecutionResult::AbortedOnBlocked { blocker: 3 });
    }

    #[test]
    fn write_only_accesses_never_block() {
        let mem = MvMemory::new(4, 8);
        mem.apply_writes(3, 0, &[1]).unwrap();
        mem.mark_estimates(3);
        let t = txn(7, vec![(1, AccessKind::Write)], 0.1);
        assert!(matches!(execute(&t, &mem), ExecutionResult::Completed { .. }));
    }

    #[test]
    fn completed_execution_takes_at_least_its_duration() {
        let mem = MvMemory::new(4, 8);
        let t = txn(0, vec![(1, AccessKind::Read)], 20.0);
        let start = Instant::now();
        execute(&t, &mem);
        assert!(start.elapsed() >= Duration::from_millis(20));
    }

    #[test]
    fn validation_detects_version_changes() {
        let mem = MvMemory::new(4, 8);
        mem.apply_writes(3, 0, &[1]).unwrap();
        let log = vec![ReadLogEntry {
            object: 1,
            observed: ReadOutcome::FromVersion(Version::new(3, 0)),
        }];
        assert!(validate(7, &log, &mem));
        // Re-execution of the writer invalidates the observed version.
        mem.apply_writes(3, 1, &[1]).unwrap();
        assert!(!validate(7, &log, &mem));
    }

    #[test]
    fn validation_detects_outcome_class_changes() {
        let mem = MvMemory::new(4, 8);
        let log = vec![ReadLogEntry { object: 1, observed: ReadOutcome::FromStorage }];
        assert!(validate(7, &log, &mem));
        mem.apply_writes(2, 0, &[1]).unwrap();
        assert!(!validate(7, &log, &mem));
        mem.mark_estimates(2);
        assert!(!validate(7, &log, &mem));
    }
}
