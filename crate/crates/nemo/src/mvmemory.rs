//! Shared multi-version memory: per-(object, transaction) versioned writes
//! plus the marker states used for dependency discovery.
//!
//! Each object keeps at most one live entry per writer index; incarnations
//! overwrite in place. A reader at index `r` sees the entry with the greatest
//! writer index below `r`, falling back to committed storage when there is
//! none. Entries marked `Estimate` (after a failed validation) or
//! `PlannedWrite` (installed from hints before execution) block the reader
//! instead of yielding a value, surfacing the dependency before any work is
//! wasted.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Mutex, RwLock};

use thiserror::Error;

use crate::model::{Incarnation, ObjectId, ObjectKind, Transaction, TxnIndex, Version};

/// Per-slot marker state. The writer index is the slot key, so `Value` only
/// needs the incarnation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SlotState {
    Value(Incarnation),
    /// The writer failed validation; its value is likely to change.
    Estimate,
    /// A hinted write that has not materialized yet.
    PlannedWrite,
}

/// Outcome of a versioned read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReadOutcome {
    /// No writer below the reader; the last committed value applies.
    FromStorage,
    /// Observed the value written by `Version`.
    FromVersion(Version),
    /// Hit an `Estimate` or `PlannedWrite` marker left by the given lower
    /// transaction; the reader must wait for it.
    Blocked(TxnIndex),
}

use serde::{Deserialize, Serialize};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MvMemoryError {
    #[error("planned writes must be installed before execution begins")]
    InstallAfterExecution,
    #[error("duplicate apply_writes for transaction {txn} incarnation {incarnation}")]
    DuplicateApply { txn: TxnIndex, incarnation: Incarnation },
    #[error("greedy commit of transaction {txn} touching shared object {object}")]
    GreedyCommitOnShared { txn: TxnIndex, object: ObjectId },
    #[error("marker left by transaction {writer} on object {object} at epoch end")]
    MarkerRemains { object: ObjectId, writer: TxnIndex },
}

#[derive(Debug, Default)]
struct TxnWrites {
    last_incarnation: Option<Incarnation>,
    last_writes: Vec<ObjectId>,
}

/// Epoch-scoped multi-version store shared by all workers.
pub struct MvMemory {
    /// Version chains, indexed by object id.
    objects: Vec<RwLock<BTreeMap<TxnIndex, SlotState>>>,
    /// Last applied incarnation and write set per transaction, used to diff
    /// re-executions and to find entries when marking estimates.
    txn_writes: Vec<Mutex<TxnWrites>>,
    /// Committed state; genesis until a commit lands.
    storage: Mutex<Vec<Version>>,
    execution_begun: AtomicBool,
}

impl MvMemory {
    pub fn new(n_objects: usize, n_txns: usize) -> Self {
        MvMemory {
            objects: (0..n_objects).map(|_| RwLock::new(BTreeMap::new())).collect(),
            txn_writes: (0..n_txns).map(|_| Mutex::new(TxnWrites::default())).collect(),
            storage: Mutex::new(vec![Version::GENESIS; n_objects]),
            execution_begun: AtomicBool::new(false),
        }
    }

    /// Marks the start of the parallel phase; planned writes can no longer be
    /// installed after this.
    pub fn begin_execution(&self) {
        self.execution_begun.store(true, Ordering::Release);
    }

    /// Installs `PlannedWrite` markers for every hinted write, one slot per
    /// (object, writer). Runs once, before any execution task is dispatched.
    pub fn install_planned_writes<I>(&self, hints: I) -> Result<(), MvMemoryError>
    where
        I: IntoIterator<Item = (TxnIndex, Vec<ObjectId>)>,
    {
        if self.execution_begun.load(Ordering::Acquire) {
            return Err(MvMemoryError::InstallAfterExecution);
        }
        for (txn, writes) in hints {
            for object in writes {
                self.objects[object as usize]
                    .write()
                    .unwrap()
                    .insert(txn, SlotState::PlannedWrite);
            }
        }
        Ok(())
    }

    /// Returns the entry at the greatest writer index below `reader`, the
    /// blocking marker found there, or storage fallback when no lower writer
    /// exists. Linearizable with respect to concurrent writes and marks on
    /// the same object.
    pub fn read(&self, object: ObjectId, reader: TxnIndex) -> ReadOutcome {
        let chain = self.objects[object as usize].read().unwrap();
        match chain.range(..reader).next_back() {
            None => ReadOutcome::FromStorage,
            Some((&writer, &SlotState::Value(incarnation))) => {
                ReadOutcome::FromVersion(Version::new(writer, incarnation))
            }
            Some((&writer, _)) => ReadOutcome::Blocked(writer),
        }
    }

    /// Records the write set of one completed incarnation, replacing any
    /// marker at the written slots and dropping slots the previous
    /// incarnation wrote but this one did not. Returns true iff some written
    /// object had no entry from the previous incarnation, in which case
    /// higher transactions need re-validation.
    pub fn apply_writes(
        &self,
        txn: TxnIndex,
        incarnation: Incarnation,
        writes: &[ObjectId],
    ) -> Result<bool, MvMemoryError> {
        let mut info = self.txn_writes[txn].lock().unwrap();
        if info.last_incarnation == Some(incarnation) {
            return Err(MvMemoryError::DuplicateApply { txn, incarnation });
        }

        let mut wrote_new_location = false;
        for &object in writes {
            if !info.last_writes.contains(&object) {
                wrote_new_location = true;
            }
            self.objects[object as usize]
                .write()
                .unwrap()
                .insert(txn, SlotState::Value(incarnation));
        }
        for &stale in info.last_writes.iter().filter(|o| !writes.contains(o)) {
            self.objects[stale as usize].write().unwrap().remove(&txn);
        }

        info.last_incarnation = Some(incarnation);
        info.last_writes = writes.to_vec();
        Ok(wrote_new_location)
    }

    /// Turns every value written by `txn` into an `Estimate` marker. Called
    /// after `txn` fails validation; idempotent, no-op for transactions that
    /// wrote nothing.
    pub fn mark_estimates(&self, txn: TxnIndex) {
        let info = self.txn_writes[txn].lock().unwrap();
        for &object in &info.last_writes {
            let mut chain = self.objects[object as usize].write().unwrap();
            if let Some(slot) = chain.get_mut(&txn) {
                *slot = SlotState::Estimate;
            }
        }
    }

    /// Fast path for owned-only transactions: writes go straight to storage,
    /// bypassing the version chains, and the transaction is terminally
    /// committed without validation.
    pub fn greedy_commit(
        &self,
        txn: &Transaction,
        writes: &[ObjectId],
        kinds: &[ObjectKind],
    ) -> Result<(), MvMemoryError> {
        if let Some(access) = txn
            .exhaustive_set()
            .find(|a| kinds[a.object as usize] == ObjectKind::Shared)
        {
            return Err(MvMemoryError::GreedyCommitOnShared {
                txn: txn.index,
                object: access.object,
            });
        }
        let mut storage = self.storage.lock().unwrap();
        for &object in writes {
            storage[object as usize] = Version::new(txn.index, 0);
        }
        Ok(())
    }

    /// Lazily commits the block: for each object the value with the highest
    /// writer index goes to storage. Fails if any marker is still present,
    /// which would mean the epoch is not actually finished.
    pub fn commit_final_state(&self) -> Result<Vec<Version>, MvMemoryError> {
        let mut storage = self.storage.lock().unwrap();
        for (object, chain) in self.objects.iter().enumerate() {
            let chain = chain.read().unwrap();
            for (&writer, &slot) in chain.iter() {
                match slot {
                    SlotState::Value(_) => {}
                    SlotState::Estimate | SlotState::PlannedWrite => {
                        return Err(MvMemoryError::MarkerRemains {
                            object: object as ObjectId,
                            writer,
                        });
                    }
                }
            }
            if let Some((&writer, &SlotState::Value(incarnation))) = chain.iter().next_back() {
                storage[object] = Version::new(writer, incarnation);
            }
        }
        Ok(storage.clone())
    }

    /// Committed-state snapshot, genesis for never-written objects.
    pub fn storage_snapshot(&self) -> Vec<Version> {
        self.storage.lock().unwrap().clone()
    }
}
