//! Task dispensation and transaction lifecycle management.
//!
//! One scheduler serves every optimistic engine mode. Transactions move
//! through a compare-and-transition state machine (`ReadyToExecute ->
//! Executing -> Executed -> Validated -> Committed`, with `Waiting` parked on
//! unresolved blockers and a transient `Aborting` while a failed validation
//! is processed). The mode decides how tasks are ordered (block index versus
//! a dependency-scored priority queue), when a blocked transaction resumes
//! (blocker execution versus blocker validation), and whether hint-derived
//! dependencies are honored at all.
//!
//! Commit is a watermark: a validated transaction becomes terminally
//! committed once every lower-indexed transaction has committed, so the lazy
//! commit advances continuously instead of in one end-of-epoch step.
//! Greedily committed transactions are exempt and simply hop the watermark
//! over themselves.

use std::collections::{BTreeSet, BinaryHeap, HashMap};
use std::sync::atomic::{AtomicBool, AtomicU32, AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::model::{Incarnation, ObjectId, Transaction, TxnIndex};
use crate::mvmemory::MvMemory;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskOrdering {
    /// Block-order counters for execution and validation, validation
    /// preferred on ties.
    IndexOrdered,
    /// Max-priority queue scored by direct dependents, index ascending on
    /// ties.
    PriorityQueue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResolveOn {
    /// Waiters resume once the blocker has (re-)executed.
    Execution,
    /// Waiters resume only once the blocker passes validation.
    Validation,
}

/// Which scheduling behaviors are active. The three optimistic engines are
/// fixed points of this configuration space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchedulerMode {
    pub ordering: TaskOrdering,
    pub resolve_on: ResolveOn,
    /// Park transactions that fail validation on their known unvalidated
    /// blockers instead of re-executing immediately.
    pub use_waiting: bool,
    /// Honor hint-derived dependencies during preprocessing.
    pub use_hints: bool,
}

impl SchedulerMode {
    pub fn block_stm() -> Self {
        SchedulerMode {
            ordering: TaskOrdering::IndexOrdered,
            resolve_on: ResolveOn::Execution,
            use_waiting: false,
            use_hints: false,
        }
    }

    pub fn nemo() -> Self {
        SchedulerMode {
            ordering: TaskOrdering::PriorityQueue,
            resolve_on: ResolveOn::Validation,
            use_waiting: true,
            use_hints: true,
        }
    }

    pub fn nemo_no_pq() -> Self {
        SchedulerMode {
            ordering: TaskOrdering::IndexOrdered,
            ..Self::nemo()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaskKind {
    Execute,
    Validate,
}

/// What `next_task` hands a worker. The validation wave is captured at
/// dispatch so a verdict computed before a later demotion cannot be applied
/// over it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Execute(TxnIndex, Incarnation),
    Validate(TxnIndex, Incarnation, u32),
    /// Nothing available right now; retry after a short backoff.
    Idle,
    /// Every transaction is committed (or the scheduler was halted).
    Done,
}

/// Result of one execution attempt, as seen by the scheduler. The engine has
/// already applied writes to multi-version memory for completed executions.
#[derive(Debug, Clone)]
pub enum ExecOutcome {
    Completed {
        wrote_new_location: bool,
        observed_deps: BTreeSet<TxnIndex>,
    },
    Blocked { blocker: TxnIndex },
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum TxnState {
    Ready(Incarnation),
    Executing(Incarnation),
    Waiting {
        next: Incarnation,
        blockers: BTreeSet<TxnIndex>,
    },
    Executed(Incarnation),
    /// Transient while a failed validation is processed; guarantees the
    /// abort sequence runs exactly once per incarnation.
    Aborting(Incarnation),
    Validated(Incarnation),
    Committed,
}

/// Directed dependency edges (blocker -> dependent, always lower to higher
/// index) with per-transaction dependent counts, the priority scores.
pub struct DependencyGraph {
    dependents: Vec<Mutex<BTreeSet<TxnIndex>>>,
    blockers: Vec<Mutex<BTreeSet<TxnIndex>>>,
    scores: Vec<AtomicUsize>,
}

impl DependencyGraph {
    pub fn new(n: usize) -> Self {
        DependencyGraph {
            dependents: (0..n).map(|_| Mutex::new(BTreeSet::new())).collect(),
            blockers: (0..n).map(|_| Mutex::new(BTreeSet::new())).collect(),
            scores: (0..n).map(|_| AtomicUsize::new(0)).collect(),
        }
    }

    /// Inserts the edge and bumps the blocker's score when new. Edges always
    /// point upward in the block order, which keeps the graph acyclic.
    pub fn add_edge(&self, blocker: TxnIndex, dependent: TxnIndex) -> bool {
        assert!(blocker < dependent, "dependency edges must point forward");
        let inserted = self.dependents[blocker].lock().unwrap().insert(dependent);
        if inserted {
            self.blockers[dependent].lock().unwrap().insert(blocker);
            self.scores[blocker].fetch_add(1, Ordering::Relaxed);
        }
        inserted
    }

    /// Number of transactions that directly depend on `txn`. Never decreases.
    pub fn score(&self, txn: TxnIndex) -> usize {
        self.scores[txn].load(Ordering::Relaxed)
    }

    pub fn blockers_of(&self, txn: TxnIndex) -> Vec<TxnIndex> {
        self.blockers[txn].lock().unwrap().iter().copied().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct PqEntry {
    score: usize,
    txn: TxnIndex,
    kind: TaskKind,
    incarnation: Incarnation,
}

impl Ord for PqEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Max-heap: higher score first, then smaller index, validation
        // before execution on a full tie.
        let kind_rank = |k: TaskKind| match k {
            TaskKind::Validate => 1u8,
            TaskKind::Execute => 0u8,
        };
        self.score
            .cmp(&other.score)
            .then_with(|| other.txn.cmp(&self.txn))
            .then_with(|| kind_rank(self.kind).cmp(&kind_rank(other.kind)))
    }
}

impl PartialOrd for PqEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Default)]
struct PqInner {
    heap: BinaryHeap<PqEntry>,
    /// Live tasks by (kind, txn); a task is never enqueued twice. The stored
    /// incarnation lets score bumps re-push a fresh entry.
    members: HashMap<(TaskKind, TxnIndex), Incarnation>,
}

/// Priority queue over tasks, scored by the dependency graph. Score changes
/// re-push an updated entry; superseded entries are skipped at pop time, so
/// pops always reflect the scores at the moment of the pop.
pub struct PriorityTaskQueue {
    inner: Mutex<PqInner>,
}

impl PriorityTaskQueue {
    pub fn new() -> Self {
        PriorityTaskQueue {
            inner: Mutex::new(PqInner::default()),
        }
    }

    /// Enqueues unless an equivalent task is already queued.
    pub fn push(&self, graph: &DependencyGraph, kind: TaskKind, txn: TxnIndex, inc: Incarnation) {
        let mut inner = self.inner.lock().unwrap();
        if inner.members.insert((kind, txn), inc).is_none() {
            let score = graph.score(txn);
            inner.heap.push(PqEntry { score, txn, kind, incarnation: inc });
        } else {
            // Already queued; keep the original membership untouched.
            inner.members.insert((kind, txn), inc);
        }
    }

    /// Adds a dependency edge and refreshes any queued tasks of the blocker
    /// so their priority reflects the new score. Done under the queue lock so
    /// concurrent pops observe a consistent ordering.
    pub fn add_edge(&self, graph: &DependencyGraph, blocker: TxnIndex, dependent: TxnIndex) {
        let mut inner = self.inner.lock().unwrap();
        if graph.add_edge(blocker, dependent) {
            let score = graph.score(blocker);
            for kind in [TaskKind::Execute, TaskKind::Validate] {
                if let Some(&incarnation) = inner.members.get(&(kind, blocker)) {
                    inner.heap.push(PqEntry { score, txn: blocker, kind, incarnation });
                }
            }
        }
    }

    /// Pops the highest-priority live task: score descending, index ascending
    /// on ties. Entries superseded by a score bump or an earlier pop are
    /// discarded on the way.
    pub fn pop(&self, graph: &DependencyGraph) -> Option<(TaskKind, TxnIndex, Incarnation)> {
        let mut inner = self.inner.lock().unwrap();
        while let Some(entry) = inner.heap.pop() {
            let live = inner.members.get(&(entry.kind, entry.txn))
                == Some(&entry.incarnation)
                && entry.score == graph.score(entry.txn);
            if live {
                inner.members.remove(&(entry.kind, entry.txn));
                return Some((entry.kind, entry.txn, entry.incarnation));
            }
        }
        None
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap().members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Default for PriorityTaskQueue {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PerTxnStats {
    /// Final incarnation number, i.e. this transaction's re-execution count.
    pub incarnations: u32,
    /// Times the transaction entered the waiting state.
    pub waits: u32,
    /// Validation verdicts applied to the transaction.
    pub validations: u32,
}

pub struct Scheduler {
    mode: SchedulerMode,
    n: usize,
    states: Vec<Mutex<TxnState>>,

    // Index-ordered dispatch: monotone counters pulled back by events, plus
    // a pending flag so each needed validation is dispatched once.
    execution_idx: AtomicUsize,
    validation_idx: AtomicUsize,
    validation_pending: Vec<AtomicBool>,
    /// Bumped whenever a transaction is demoted for re-validation; verdicts
    /// from an older wave are discarded.
    validation_wave: Vec<AtomicU32>,

    queue: PriorityTaskQueue,
    graph: DependencyGraph,

    /// Parked dependents per blocker, drained on the resolving event.
    waiters: Vec<Mutex<Vec<TxnIndex>>>,

    /// Next index the commit watermark will consider.
    watermark: Mutex<usize>,
    committed: AtomicUsize,
    halted: AtomicBool,

    executions: AtomicU64,
    failed_validations: AtomicU64,
    max_incarnation: Vec<AtomicU32>,
    wait_count: Vec<AtomicU32>,
    validation_count: Vec<AtomicU32>,
}

impl Scheduler {
    pub fn new(n: usize, mode: SchedulerMode) -> Self {
        Scheduler {
            mode,
            n,
            states: (0..n).map(|_| Mutex::new(TxnState::Ready(0))).collect(),
            execution_idx: AtomicUsize::new(0),
            validation_idx: AtomicUsize::new(0),
            validation_pending: (0..n).map(|_| AtomicBool::new(false)).collect(),
            validation_wave: (0..n).map(|_| AtomicU32::new(0)).collect(),
            queue: PriorityTaskQueue::new(),
            graph: DependencyGraph::new(n),
            waiters: (0..n).map(|_| Mutex::new(Vec::new())).collect(),
            watermark: Mutex::new(0),
            committed: AtomicUsize::new(0),
            halted: AtomicBool::new(false),
            executions: AtomicU64::new(0),
            failed_validations: AtomicU64::new(0),
            max_incarnation: (0..n).map(|_| AtomicU32::new(0)).collect(),
            wait_count: (0..n).map(|_| AtomicU32::new(0)).collect(),
            validation_count: (0..n).map(|_| AtomicU32::new(0)).collect(),
        }
    }

    pub fn mode(&self) -> SchedulerMode {
        self.mode
    }

    /// Derives dependency edges from the hints and parks hinted readers on
    /// their nearest hinted writer. For each object, a reader depends on the
    /// greatest hinted writer below it; a hinted writer in between shadows
    /// earlier ones. Runs single-threaded before the parallel phase; the
    /// caller installs the matching planned-write markers into memory.
    pub fn preprocess_hints(&self, txns: &[Transaction]) {
        assert!(self.mode.use_hints);
        let mut writers: HashMap<ObjectId, Vec<TxnIndex>> = HashMap::new();
        let mut initial_blockers: HashMap<TxnIndex, BTreeSet<TxnIndex>> = HashMap::new();
        for txn in txns {
            for object in txn.hint_reads() {
                if let Some(ws) = writers.get(&object) {
                    // Writers are pushed in index order; the last is nearest.
                    if let Some(&blocker) = ws.last() {
                        self.graph.add_edge(blocker, txn.index);
                        if self.mode.use_waiting {
                            initial_blockers.entry(txn.index).or_default().insert(blocker);
                        }
                    }
                }
            }
            for object in txn.hint_writes() {
                writers.entry(object).or_default().push(txn.index);
            }
        }
        for (txn, blockers) in initial_blockers {
            for &b in &blockers {
                self.waiters[b].lock().unwrap().push(txn);
            }
            self.wait_count[txn].fetch_add(1, Ordering::Relaxed);
            *self.states[txn].lock().unwrap() = TxnState::Waiting { next: 0, blockers };
        }
    }

    /// Seeds the initial execution tasks. Must run after preprocessing and
    /// before workers start pulling tasks.
    pub fn start(&self) {
        if self.mode.ordering == TaskOrdering::PriorityQueue {
            for txn in 0..self.n {
                if matches!(*self.states[txn].lock().unwrap(), TxnState::Ready(_)) {
                    self.queue.push(&self.graph, TaskKind::Execute, txn, 0);
                }
            }
        }
    }

    pub fn next_task(&self) -> Task {
        if self.halted.load(Ordering::Acquire) || self.epoch_done() {
            return Task::Done;
        }
        match self.mode.ordering {
            TaskOrdering::IndexOrdered => {
                let vi = self.validation_idx.load(Ordering::Relaxed);
                let ei = self.execution_idx.load(Ordering::Relaxed);
                if vi <= ei {
                    if let Some(task) = self.try_dispatch_validation() {
                        return task;
                    }
                    if let Some(task) = self.try_dispatch_execution() {
                        return task;
                    }
                } else {
                    if let Some(task) = self.try_dispatch_execution() {
                        return task;
                    }
                    if let Some(task) = self.try_dispatch_validation() {
                        return task;
                    }
                }
                Task::Idle
            }
            TaskOrdering::PriorityQueue => loop {
                let Some((kind, txn, inc)) = self.queue.pop(&self.graph) else {
                    return Task::Idle;
                };
                let mut st = self.states[txn].lock().unwrap();
                match (kind, &*st) {
                    (TaskKind::Execute, TxnState::Ready(i)) if *i == inc => {
                        *st = TxnState::Executing(inc);
                        return Task::Execute(txn, inc);
                    }
                    (TaskKind::Validate, TxnState::Executed(i)) if *i == inc => {
                        let wave = self.validation_wave[txn].load(Ordering::Relaxed);
                        return Task::Validate(txn, inc, wave);
                    }
                    // Superseded by a later transition; a fresh task was (or
                    // will be) enqueued by whoever moved the state.
                    _ => {}
                }
            },
        }
    }

    fn try_dispatch_execution(&self) -> Option<Task> {
        loop {
            let idx = self.execution_idx.fetch_add(1, Ordering::Relaxed);
            if idx >= self.n {
                return None;
            }
            let mut st = self.states[idx].lock().unwrap();
            if let TxnState::Ready(inc) = *st {
                *st = TxnState::Executing(inc);
                return Some(Task::Execute(idx, inc));
            }
        }
    }

    fn try_dispatch_validation(&self) -> Option<Task> {
        loop {
            let idx = self.validation_idx.fetch_add(1, Ordering::Relaxed);
            if idx >= self.n {
                return None;
            }
            if self.validation_pending[idx].swap(false, Ordering::AcqRel) {
                let st = self.states[idx].lock().unwrap();
                if let TxnState::Executed(inc) = *st {
                    let wave = self.validation_wave[idx].load(Ordering::Relaxed);
                    return Some(Task::Validate(idx, inc, wave));
                }
                // Stale flag; whoever moves the state back to Executed will
                // re-enqueue the validation.
            }
        }
    }

    fn enqueue_execution(&self, txn: TxnIndex, inc: Incarnation) {
        match self.mode.ordering {
            TaskOrdering::IndexOrdered => {
                self.execution_idx.fetch_min(txn, Ordering::Relaxed);
            }
            TaskOrdering::PriorityQueue => {
                self.queue.push(&self.graph, TaskKind::Execute, txn, inc);
            }
        }
    }

    fn enqueue_validation(&self, txn: TxnIndex, inc: Incarnation) {
        match self.mode.ordering {
            TaskOrdering::IndexOrdered => {
                self.validation_pending[txn].store(true, Ordering::Release);
                self.validation_idx.fetch_min(txn, Ordering::Relaxed);
            }
            TaskOrdering::PriorityQueue => {
                self.queue.push(&self.graph, TaskKind::Validate, txn, inc);
            }
        }
    }

    fn record_edge(&self, blocker: TxnIndex, dependent: TxnIndex) {
        match self.mode.ordering {
            TaskOrdering::PriorityQueue => self.queue.add_edge(&self.graph, blocker, dependent),
            TaskOrdering::IndexOrdered => {
                self.graph.add_edge(blocker, dependent);
            }
        }
    }

    /// Re-validates every higher transaction that already executed. Runs
    /// before the caller's own state moves on, so the commit watermark can
    /// never slip past a transaction whose demotion is still in flight.
    fn demote_higher(&self, txn: TxnIndex) {
        for j in txn + 1..self.n {
            let mut st = self.states[j].lock().unwrap();
            match *st {
                TxnState::Executed(inc) => {
                    self.validation_wave[j].fetch_add(1, Ordering::Relaxed);
                    drop(st);
                    self.enqueue_validation(j, inc);
                }
                TxnState::Validated(inc) => {
                    *st = TxnState::Executed(inc);
                    self.validation_wave[j].fetch_add(1, Ordering::Relaxed);
                    drop(st);
                    self.enqueue_validation(j, inc);
                }
                _ => {}
            }
        }
    }

    fn blocker_resolved(&self, blocker: TxnIndex) -> bool {
        let st = self.states[blocker].lock().unwrap();
        match self.mode.resolve_on {
            ResolveOn::Execution => matches!(
                *st,
                TxnState::Executed(_) | TxnState::Validated(_) | TxnState::Committed
            ),
            ResolveOn::Validation => {
                matches!(*st, TxnState::Validated(_) | TxnState::Committed)
            }
        }
    }

    fn resolve_blocker(&self, waiter: TxnIndex, blocker: TxnIndex) {
        let mut st = self.states[waiter].lock().unwrap();
        if let TxnState::Waiting { next, blockers } = &mut *st {
            if blockers.remove(&blocker) && blockers.is_empty() {
                let inc = *next;
                *st = TxnState::Ready(inc);
                self.enqueue_execution(waiter, inc);
            }
        }
    }

    fn wake_waiters(&self, blocker: TxnIndex) {
        let drained = std::mem::take(&mut *self.waiters[blocker].lock().unwrap());
        for waiter in drained {
            self.resolve_blocker(waiter, blocker);
        }
    }

    /// Parks `txn` on the given blockers, then re-checks each one so a
    /// resolution that raced the registration is not lost.
    fn park(&self, txn: TxnIndex, next: Incarnation, blockers: BTreeSet<TxnIndex>) {
        debug_assert!(!blockers.is_empty());
        self.wait_count[txn].fetch_add(1, Ordering::Relaxed);
        let snapshot: Vec<TxnIndex> = blockers.iter().copied().collect();
        *self.states[txn].lock().unwrap() = TxnState::Waiting { next, blockers };
        for &b in &snapshot {
            self.waiters[b].lock().unwrap().push(txn);
        }
        for &b in &snapshot {
            if self.blocker_resolved(b) {
                self.resolve_blocker(txn, b);
            }
        }
    }

    pub fn finish_execution(&self, txn: TxnIndex, inc: Incarnation, outcome: ExecOutcome) {
        match outcome {
            ExecOutcome::Blocked { blocker } => {
                {
                    let st = self.states[txn].lock().unwrap();
                    assert_eq!(*st, TxnState::Executing(inc), "finish_execution state mismatch");
                }
                // The aborted attempt did no work; the same incarnation will
                // re-run once the blocker resolves.
                self.park(txn, inc, BTreeSet::from([blocker]));
            }
            ExecOutcome::Completed { wrote_new_location, observed_deps } => {
                self.executions.fetch_add(1, Ordering::Relaxed);
                self.max_incarnation[txn].fetch_max(inc, Ordering::Relaxed);
                for &dep in &observed_deps {
                    self.record_edge(dep, txn);
                }
                if wrote_new_location {
                    self.demote_higher(txn);
                }
                {
                    let mut st = self.states[txn].lock().unwrap();
                    assert_eq!(*st, TxnState::Executing(inc), "finish_execution state mismatch");
                    *st = TxnState::Executed(inc);
                }
                self.enqueue_validation(txn, inc);
                if self.mode.resolve_on == ResolveOn::Execution {
                    self.wake_waiters(txn);
                }
            }
        }
    }

    /// Applies a validation verdict. Verdicts for a superseded incarnation or
    /// an older validation wave are discarded; the task that superseded them
    /// is already queued.
    pub fn finish_validation(
        &self,
        txn: TxnIndex,
        inc: Incarnation,
        wave: u32,
        passed: bool,
        mem: &MvMemory,
    ) {
        {
            let mut st = self.states[txn].lock().unwrap();
            match *st {
                TxnState::Executed(i)
                    if i == inc && self.validation_wave[txn].load(Ordering::Relaxed) == wave =>
                {
                    self.validation_count[txn].fetch_add(1, Ordering::Relaxed);
                    if passed {
                        *st = TxnState::Validated(inc);
                    } else {
                        *st = TxnState::Aborting(inc);
                    }
                }
                _ => return,
            }
        }

        if passed {
            if self.mode.resolve_on == ResolveOn::Validation {
                self.wake_waiters(txn);
            }
            self.advance_watermark();
            return;
        }

        self.failed_validations.fetch_add(1, Ordering::Relaxed);
        mem.mark_estimates(txn);
        self.demote_higher(txn);

        let unvalidated: BTreeSet<TxnIndex> = if self.mode.use_waiting {
            self.graph
                .blockers_of(txn)
                .into_iter()
                .filter(|&b| !self.blocker_validated(b))
                .collect()
        } else {
            BTreeSet::new()
        };

        if unvalidated.is_empty() {
            {
                let mut st = self.states[txn].lock().unwrap();
                assert_eq!(*st, TxnState::Aborting(inc));
                *st = TxnState::Ready(inc + 1);
            }
            self.enqueue_execution(txn, inc + 1);
        } else {
            {
                let st = self.states[txn].lock().unwrap();
                assert_eq!(*st, TxnState::Aborting(inc));
            }
            self.park(txn, inc + 1, unvalidated);
        }
    }

    fn blocker_validated(&self, blocker: TxnIndex) -> bool {
        matches!(
            *self.states[blocker].lock().unwrap(),
            TxnState::Validated(_) | TxnState::Committed
        )
    }

    /// Terminal commit for an owned-only transaction straight out of its
    /// single execution; no validation task is ever created for it.
    pub fn greedy_committed(&self, txn: TxnIndex) {
        self.executions.fetch_add(1, Ordering::Relaxed);
        {
            let mut st = self.states[txn].lock().unwrap();
            assert!(matches!(*st, TxnState::Executing(_)), "greedy commit outside execution");
            *st = TxnState::Committed;
        }
        self.committed.fetch_add(1, Ordering::Relaxed);
        self.advance_watermark();
    }

    /// Advances the commit watermark over validated and greedily committed
    /// transactions, committing validated ones along the way.
    fn advance_watermark(&self) {
        let mut wm = self.watermark.lock().unwrap();
        while *wm < self.n {
            let mut st = self.states[*wm].lock().unwrap();
            match *st {
                TxnState::Committed => {}
                TxnState::Validated(_) => {
                    *st = TxnState::Committed;
                    self.committed.fetch_add(1, Ordering::Relaxed);
                }
                _ => break,
            }
            drop(st);
            *wm += 1;
        }
    }

    pub fn epoch_done(&self) -> bool {
        self.committed.load(Ordering::Acquire) == self.n
    }

    pub fn committed_count(&self) -> usize {
        self.committed.load(Ordering::Acquire)
    }

    pub fn halt(&self) {
        self.halted.store(true, Ordering::Release);
    }

    pub fn executions_completed(&self) -> u64 {
        self.executions.load(Ordering::Relaxed)
    }

    pub fn failed_validation_count(&self) -> u64 {
        self.failed_validations.load(Ordering::Relaxed)
    }

    pub fn score(&self, txn: TxnIndex) -> usize {
        self.graph.score(txn)
    }

    pub fn per_txn_stats(&self) -> Vec<PerTxnStats> {
        (0..self.n)
            .map(|i| PerTxnStats {
                incarnations: self.max_incarnation[i].load(Ordering::Relaxed),
                waits: self.wait_count[i].load(Ordering::Relaxed),
                validations: self.validation_count[i].load(Ordering::Relaxed),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Access, AccessKind};

    fn hinted_txn(index: TxnIndex, accesses: Vec<(ObjectId, AccessKind)>) -> Transaction {
        Transaction {
            index,
            accesses: accesses
                .into_iter()
                .map(|(object, kind)| Access { object, kind, used: true, hinted: true })
                .collect(),
            duration_ms: 1.0,
            owned_only: false,
        }
    }

    #[test]
    fn no_hints_leaves_everything_ready() {
        let txns: Vec<Transaction> = (0..4)
            .map(|i| {
                let mut t = hinted_txn(i, vec![(1, AccessKind::ReadWrite)]);
                for a in &mut t.accesses {
                    a.hinted = false;
                }
                t
            })
            .collect();
        let s = Scheduler::new(4, SchedulerMode::nemo());
        s.preprocess_hints(&txns);
        s.start();
        for i in 0..4 {
            assert_eq!(s.score(i), 0);
        }
        // All four execute tasks are available immediately.
        for _ in 0..4 {
            assert!(matches!(s.next_task(), Task::Execute(_, 0)));
        }
    }

    #[test]
    fn nearest_writer_rule_without_shadowing() {
        // txn 2 hints a write on o1; txns 5 and 9 hint reads. Both depend on
        // 2 since 5's access is a pure read.
        let mut txns: Vec<Transaction> = (0..10)
            .map(|i| hinted_txn(i, vec![(0, AccessKind::Read)]))
            .collect();
        txns[2] = hinted_txn(2, vec![(1, AccessKind::Write)]);
        txns[5] = hinted_txn(5, vec![(1, AccessKind::Read)]);
        txns[9] = hinted_txn(9, vec![(1, AccessKind::Read)]);
        let s = Scheduler::new(10, SchedulerMode::nemo());
        s.preprocess_hints(&txns);
        assert_eq!(s.score(2), 2);
        assert_eq!(s.graph.blockers_of(5), vec![2]);
        assert_eq!(s.graph.blockers_of(9), vec![2]);
    }

    #[test]
    fn hinted_writer_shadows_earlier_ones() {
        let mut txns: Vec<Transaction> = (0..10)
            .map(|i| hinted_txn(i, vec![(0, AccessKind::Read)]))
            .collect();
        txns[2] = hinted_txn(2, vec![(1, AccessKind::Write)]);
        txns[5] = hinted_txn(5, vec![(1, AccessKind::ReadWrite)]);
        txns[9] = hinted_txn(9, vec![(1, AccessKind::Read)]);
        let s = Scheduler::new(10, SchedulerMode::nemo());
        s.preprocess_hints(&txns);
        assert_eq!(s.score(2), 1);
        assert_eq!(s.score(5), 1);
        assert_eq!(s.graph.blockers_of(5), vec![2]);
        assert_eq!(s.graph.blockers_of(9), vec![5]);
    }

    #[test]
    fn priority_pops_by_score_then_index() {
        let graph = DependencyGraph::new(10);
        let queue = PriorityTaskQueue::new();
        // txn 5 blocks three others, txn 1 none.
        graph.add_edge(5, 6);
        graph.add_edge(5, 7);
        graph.add_edge(5, 8);
        queue.push(&graph, TaskKind::Execute, 1, 0);
        queue.push(&graph, TaskKind::Execute, 5, 0);
        assert_eq!(queue.pop(&graph), Some((TaskKind::Execute, 5, 0)));
        assert_eq!(queue.pop(&graph), Some((TaskKind::Execute, 1, 0)));
        assert_eq!(queue.pop(&graph), None);
    }

    #[test]
    fn priority_tie_breaks_on_smaller_index() {
        let graph = DependencyGraph::new(10);
        let queue = PriorityTaskQueue::new();
        graph.add_edge(4, 6);
        graph.add_edge(4, 7);
        graph.add_edge(8, 9);
        queue.push(&graph, TaskKind::Execute, 8, 0);
        queue.push(&graph, TaskKind::Execute, 4, 0);
        // 4 and 8 tie once 8 gains a second dependent.
        graph.add_edge(8, 9); // duplicate, no score change
        assert_eq!(queue.pop(&graph).unwrap().1, 4);
    }

    #[test]
    fn duplicate_offers_enqueue_once() {
        let graph = DependencyGraph::new(10);
        let queue = PriorityTaskQueue::new();
        queue.push(&graph, TaskKind::Execute, 5, 0);
        queue.push(&graph, TaskKind::Execute, 5, 0);
        assert_eq!(queue.len(), 1);
        assert_eq!(queue.pop(&graph), Some((TaskKind::Execute, 5, 0)));
        assert_eq!(queue.pop(&graph), None);
    }

    #[test]
    fn score_bumps_reorder_queued_tasks() {
        let graph = DependencyGraph::new(10);
        let queue = PriorityTaskQueue::new();
        queue.push(&graph, TaskKind::Execute, 2, 0);
        queue.push(&graph, TaskKind::Execute, 7, 0);
        // 7 becomes a blocker of two transactions after being queued.
        queue.add_edge(&graph, 7, 8);
        queue.add_edge(&graph, 7, 9);
        assert_eq!(queue.pop(&graph).unwrap().1, 7);
        assert_eq!(queue.pop(&graph).unwrap().1, 2);
        assert_eq!(queue.pop(&graph), None);
    }

    #[test]
    fn validate_preferred_over_execute_on_full_tie() {
        let graph = DependencyGraph::new(10);
        let queue = PriorityTaskQueue::new();
        queue.push(&graph, TaskKind::Execute, 3, 1);
        queue.push(&graph, TaskKind::Validate, 3, 0);
        assert_eq!(queue.pop(&graph).unwrap().0, TaskKind::Validate);
    }

    #[test]
    fn dependency_graph_rejects_backward_edges() {
        let graph = DependencyGraph::new(4);
        let result = std::panic::catch_unwind(|| graph.add_edge(3, 1));
        assert!(result.is_err());
    }
}
