//! Independent correctness checkers: the sequential final-state reference and
//! a post-hoc read-coherence audit. Both work purely from the block
//! definition and a run's outputs, never from engine internals, so they stay
//! independent of the code they check.

use crate::model::{ObjectId, TxnIndex, Version};
use crate::mvmemory::ReadOutcome;
use crate::vm::ReadLogEntry;
use crate::workload::Block;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    FinalStateMismatch,
    IncoherentRead,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub txn: TxnIndex,
    pub object: ObjectId,
    pub expected: Version,
    pub actual: Version,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.kind {
            ViolationKind::FinalStateMismatch => write!(
                f,
                "final state mismatch on object {}: expected writer {}, found {}",
                self.object, self.expected.writer, self.actual.writer
            ),
            ViolationKind::IncoherentRead => write!(
                f,
                "incoherent read by transaction {} on object {}: expected writer {}, observed {}",
                self.txn, self.object, self.expected.writer, self.actual.writer
            ),
        }
    }
}

/// Index-sorted used-set writers per object, the basis for both checks.
fn writers_per_object(block: &Block) -> Vec<Vec<TxnIndex>> {
    let mut writers = vec![Vec::new(); block.object_count()];
    for txn in &block.transactions {
        for object in txn.used_writes() {
            writers[object as usize].push(txn.index);
        }
    }
    writers
}

/// The serializability reference: for each object, the version written by the
/// highest-index transaction whose used set writes it, or genesis. A pure
/// function of the block; no engine is consulted.
pub fn sequential_final_state(block: &Block) -> Vec<Version> {
    writers_per_object(block)
        .iter()
        .map(|ws| match ws.last() {
            Some(&writer) => Version::new(writer, 0),
            None => Version::GENESIS,
        })
        .collect()
}

/// Audits a finished run: (a) the reported final state matches the
/// sequential reference writer-for-writer, and (b) every committed read
/// observed exactly the highest lower-indexed writer of its object (or
/// storage when there is none). Incarnation numbers are engine bookkeeping
/// and are ignored. Returns every violation found.
pub fn check_run(
    block: &Block,
    final_state: &[Version],
    committed_read_logs: &[Vec<ReadLogEntry>],
) -> Vec<Violation> {
    let mut violations = Vec::new();
    let writers = writers_per_object(block);

    let reference = sequential_final_state(block);
    for (object, (expected, actual)) in reference.iter().zip(final_state).enumerate() {
        if expected.writer != actual.writer {
            violations.push(Violation {
                kind: ViolationKind::FinalStateMismatch,
                txn: actual.writer.max(0) as TxnIndex,
                object: object as ObjectId,
                expected: *expected,
                actual: *actual,
            });
        }
    }

    for (txn, log) in committed_read_logs.iter().enumerate() {
        for entry in log {
            let ws = &writers[entry.object as usize];
            let cut = ws.partition_point(|&w| w < txn);
            let expected = if cut == 0 {
                Version::GENESIS
            } else {
                Version::new(ws[cut - 1], 0)
            };
            let observed = match entry.observed {
                ReadOutcome::FromStorage => Version::GENESIS,
                ReadOutcome::FromVersion(v) => v,
                ReadOutcome::Blocked(_) => Version::new(usize::MAX - 1, 0),
            };
            if observed.writer != expected.writer {
                violations.push(Violation {
                    kind: ViolationKind::IncoherentRead,
                    txn,
                    object: entry.object,
                    expected,
                    actual: observed,
                });
            }
        }
    }

    violations
}
