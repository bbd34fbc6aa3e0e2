//! Object data model shared by every engine: objects, access sets,
//! transactions, and the conflict predicate used by the pessimistic baseline.

use serde::{Deserialize, Serialize};

/// Position of a transaction in the block, i.e. the total order fixed by
/// consensus.
pub type TxnIndex = usize;

/// Execution attempt counter of a transaction within an epoch. Starts at 0;
/// the final incarnation equals the number of re-executions.
pub type Incarnation = u32;

/// Dense identifier of an object within an epoch. Objects are laid out as
/// `0..n_shared` for shared objects followed by the owned objects created by
/// the workload, which makes array-backed version storage trivial.
pub type ObjectId = u32;

/// Writer used for the pre-epoch genesis value of every object.
pub const GENESIS_WRITER: i64 = -1;

/// A versioned write: which transaction wrote the value and on which attempt.
/// Ordered by writer first, incarnation second.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Version {
    /// Transaction index of the writer, or [`GENESIS_WRITER`] for the
    /// pre-epoch value.
    pub writer: i64,
    pub incarnation: Incarnation,
}

impl Version {
    pub const GENESIS: Version = Version {
        writer: GENESIS_WRITER,
        incarnation: 0,
    };

    pub fn new(writer: TxnIndex, incarnation: Incarnation) -> Self {
        Version {
            writer: writer as i64,
            incarnation,
        }
    }

    pub fn is_genesis(&self) -> bool {
        self.writer == GENESIS_WRITER
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectKind {
    /// Has a single owner; usable by at most one transaction per epoch.
    Owned,
    /// Globally addressable mutable state; the source of all contention.
    Shared,
    /// Readable by anyone, never written.
    Immutable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AccessKind {
    Read,
    ReadWrite,
    Write,
}

impl AccessKind {
    pub fn reads(self) -> bool {
        matches!(self, AccessKind::Read | AccessKind::ReadWrite)
    }

    pub fn writes(self) -> bool {
        matches!(self, AccessKind::Write | AccessKind::ReadWrite)
    }
}

/// One object access declared by a transaction. The exhaustive set is every
/// access; `used` restricts to what execution actually performs and `hinted`
/// to the statically known subset of the used accesses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Access {
    pub object: ObjectId,
    pub kind: AccessKind,
    /// Whether execution actually touches the object. Fixed at generation.
    pub used: bool,
    /// Whether the access is part of the prior-knowledge hints. Implies
    /// `used`: hints only ever cover guaranteed accesses.
    pub hinted: bool,
}

/// An index-ordered unit of work. Access sets are immutable after workload
/// generation, so transactions can be shared freely across worker threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transaction {
    pub index: TxnIndex,
    pub accesses: Vec<Access>,
    /// Simulated execution time in milliseconds. Always positive.
    pub duration_ms: f64,
    /// True iff every object in the exhaustive set is owned or immutable and
    /// at least one is owned. Such transactions are independent of all others
    /// in the epoch.
    pub owned_only: bool,
}

impl Transaction {
    /// The full declared access set (superset of what may be touched).
    pub fn exhaustive_set(&self) -> impl Iterator<Item = &Access> {
        self.accesses.iter()
    }

    pub fn used_set(&self) -> impl Iterator<Item = &Access> {
        self.accesses.iter().filter(|a| a.used)
    }

    pub fn hint_set(&self) -> impl Iterator<Item = &Access> {
        self.accesses.iter().filter(|a| a.hinted)
    }

    /// Objects execution writes, i.e. the write side of the used set.
    pub fn used_writes(&self) -> impl Iterator<Item = ObjectId> + '_ {
        self.used_set()
            .filter(|a| a.kind.writes())
            .map(|a| a.object)
    }

    /// Objects execution reads, in ascending id order (the order reads are
    /// issued in).
    pub fn used_reads_sorted(&self) -> Vec<ObjectId> {
        let mut reads: Vec<ObjectId> = self
            .used_set()
            .filter(|a| a.kind.reads())
            .map(|a| a.object)
            .collect();
        reads.sort_unstable();
        reads
    }

    /// Objects the hints promise will be written.
    pub fn hint_writes(&self) -> impl Iterator<Item = ObjectId> + '_ {
        self.hint_set()
            .filter(|a| a.kind.writes())
            .map(|a| a.object)
    }

    /// Objects the hints promise will be read.
    pub fn hint_reads(&self) -> impl Iterator<Item = ObjectId> + '_ {
        self.hint_set()
            .filter(|a| a.kind.reads())
            .map(|a| a.object)
    }
}

/// True iff the two transactions may not run concurrently under the
/// pessimistic baseline: some object appears in both exhaustive sets with at
/// least one side writing. Read-read overlap is not a conflict. Symmetric and
/// irreflexive over distinct indices.
pub fn conflicts(a: &Transaction, b: &Transaction) -> bool {
    debug_assert_ne!(a.index, b.index);
    for aa in &a.accesses {
        for ba in &b.accesses {
            if aa.object == ba.object && (aa.kind.writes() || ba.kind.writes()) {
                return true;
            }
        }
    }
    false
}

/// Recomputes the owned-only predicate from the object table: every object in
/// the exhaustive set is owned or immutable, and at least one is owned.
pub fn is_owned_only(txn: &Transaction, kinds: &[ObjectKind]) -> bool {
    let mut any_owned = false;
    for access in &txn.accesses {
        match kinds[access.object as usize] {
            ObjectKind::Shared => return false,
            ObjectKind::Owned => any_owned = true,
            ObjectKind::Immutable => {}
        }
    }
    any_owned
}

#[cfg(test)]
mod tests {
    use super::*;

    fn access(object: ObjectId, kind: AccessKind) -> Access {
        Access {
            object,
            kind,
            used: true,
            hinted: false,
        }
    }

    fn txn(index: TxnIndex, accesses: Vec<Access>) -> Transaction {
        Transaction {
            index,
            accesses,
            duration_ms: 1.0,
            owned_only: false,
        }
    }

    #[test]
    fn read_read_overlap_is_not_a_conflict() {
        let a = txn(0, vec![access(1, AccessKind::Read)]);
        let b = txn(1, vec![access(1, AccessKind::Read)]);
        assert!(!conflicts(&a, &b));
        assert!(!conflicts(&b, &a));
    }

    #[test]
    fn write_read_overlap_conflicts() {
        let a = txn(0, vec![access(1, AccessKind::ReadWrite)]);
        let b = txn(1, vec![access(1, AccessKind::Read)]);
        assert!(conflicts(&a, &b));
        assert!(conflicts(&b, &a));
    }

    #[test]
    fn disjoint_objects_do_not_conflict() {
        let a = txn(0, vec![access(1, AccessKind::Write)]);
        let b = txn(1, vec![access(2, AccessKind::Write)]);
        assert!(!conflicts(&a, &b));
    }

    #[test]
    fn owned_only_predicate() {
        // ids: 0 shared, 1 owned, 2 immutable
        let kinds = [ObjectKind::Shared, ObjectKind::Owned, ObjectKind::Immutable];

        let t = txn(0, vec![access(1, AccessKind::ReadWrite)]);
        assert!(is_owned_only(&t, &kinds));

        let t = txn(
            0,
            vec![access(1, AccessKind::ReadWrite), access(0, AccessKind::Read)],
        );
        assert!(!is_owned_only(&t, &kinds));

        // Immutable reads do not disqualify; a lone immutable read does not
        // qualify either (no owned object present).
        let t = txn(
            0,
            vec![access(2, AccessKind::Read), access(1, AccessKind::Write)],
        );
        assert!(is_owned_only(&t, &kinds));
        let t = txn(0, vec![access(2, AccessKind::Read)]);
        assert!(!is_owned_only(&t, &kinds));
    }

    #[test]
    fn version_ordering_is_writer_then_incarnation() {
        assert!(Version::GENESIS < Version::new(0, 0));
        assert!(Version::new(3, 1) < Version::new(4, 0));
        assert!(Version::new(3, 0) < Version::new(3, 1));
    }
}
