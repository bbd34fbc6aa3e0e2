//! Driver for the optimistic engines. Workers loop pulling tasks from the
//! shared scheduler; the driver thread only watches commit progress.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use crate::model::{ObjectId, TxnIndex};
use crate::mvmemory::MvMemory;
use crate::scheduler::{ExecOutcome, Scheduler, Task};
use crate::vm::{self, ExecutionResult, ReadLogEntry};
use crate::workload::Block;

use super::{Backoff, EngineConfig, EngineError, EpochOutcome, EpochReport};

pub(super) fn run(block: &Block, config: &EngineConfig) -> Result<EpochOutcome, EngineError> {
    let n = block.len();
    let mode = config
        .engine
        .scheduler_mode()
        .expect("occ driver requires an optimistic engine");
    let greedy_enabled = config.engine.uses_greedy_commit();

    let mem = MvMemory::new(block.object_count(), n);
    let scheduler = Scheduler::new(n, mode);
    let logs: Vec<Mutex<Vec<ReadLogEntry>>> = (0..n).map(|_| Mutex::new(Vec::new())).collect();
    let greedy_commits = AtomicU64::new(0);

    let start = Instant::now();

    if mode.use_hints {
        let hints: Vec<(TxnIndex, Vec<ObjectId>)> = block
            .transactions
            .iter()
            .map(|t| (t.index, t.hint_writes().collect()))
            .collect();
        mem.install_planned_writes(hints)?;
        scheduler.preprocess_hints(&block.transactions);
    }
    mem.begin_execution();
    scheduler.start();

    if n > 0 {
        thread::scope(|scope| {
            for _ in 0..config.workers.max(1) {
                scope.spawn(|| {
                    worker_loop(block, &mem, &scheduler, &logs, &greedy_commits, greedy_enabled)
                });
            }
            watch_progress(&scheduler, config.watchdog);
        });
    }

    if !scheduler.epoch_done() {
        return Err(EngineError::ProgressTimeout {
            stalled_ms: config.watchdog.as_millis() as u64,
            committed: scheduler.committed_count(),
            total: n,
        });
    }

    let final_state = mem.commit_final_state()?;
    let duration_ms = start.elapsed().as_secs_f64() * 1000.0;

    let report = EpochReport::finalize(
        n,
        duration_ms,
        EpochReport {
            duration_ms: 0.0,
            tps: 0.0,
            reexecutions: scheduler.executions_completed().saturating_sub(n as u64),
            failed_validations: scheduler.failed_validation_count(),
            greedy_commits: greedy_commits.load(Ordering::Relaxed),
            final_state,
            per_txn: scheduler.per_txn_stats(),
        },
    );
    let read_logs = logs.into_iter().map(|m| m.into_inner().unwrap()).collect();
    Ok(EpochOutcome { report, read_logs })
}

fn worker_loop(
    block: &Block,
    mem: &MvMemory,
    scheduler: &Scheduler,
    logs: &[Mutex<Vec<ReadLogEntry>>],
    greedy_commits: &AtomicU64,
    greedy_enabled: bool,
) {
    let mut backoff = Backoff::new();
    loop {
        match scheduler.next_task() {
            Task::Done => return,
            Task::Idle => backoff.snooze(),
            Task::Execute(txn_index, inc) => {
                backoff.reset();
                let txn = &block.transactions[txn_index];
                match vm::execute(txn, mem) {
                    ExecutionResult::Completed { read_log, write_set, observed_deps } => {
                        if greedy_enabled && txn.owned_only {
                            mem.greedy_commit(txn, &write_set, &block.object_kinds)
                                .expect("owned-only transactions cannot touch shared objects");
                            *logs[txn_index].lock().unwrap() = read_log;
                            greedy_commits.fetch_add(1, Ordering::Relaxed);
                            scheduler.greedy_committed(txn_index);
                        } else {
                            let wrote_new_location = mem
                                .apply_writes(txn_index, inc, &write_set)
                                .expect("one apply per incarnation");
                            *logs[txn_index].lock().unwrap() = read_log;
                            scheduler.finish_execution(
                                txn_index,
                                inc,
                                ExecOutcome::Completed { wrote_new_location, observed_deps },
                            );
                        }
                    }
                    ExecutionResult::AbortedOnBlocked { blocker } => {
                        scheduler.finish_execution(txn_index, inc, ExecOutcome::Blocked { blocker });
                    }
                }
            }
            Task::Validate(txn_index, inc, wave) => {
                backoff.reset();
                let log = logs[txn_index].lock().unwrap().clone();
                let passed = vm::validate(txn_index, &log, mem);
                scheduler.finish_validation(txn_index, inc, wave, passed, mem);
            }
        }
    }
}

/// Halts the scheduler if the committed count stops moving for the watchdog
/// interval. A firing watchdog means a scheduler bug, never expected load.
fn watch_progress(scheduler: &Scheduler, watchdog: Duration) {
    let mut last = scheduler.committed_count();
    let mut last_change = Instant::now();
    loop {
        if scheduler.epoch_done() {
            return;
        }
        let committed = scheduler.committed_count();
        if committed != last {
            last = committed;
            last_change = Instant::now();
        } else if last_change.elapsed() >= watchdog {
            scheduler.halt();
            return;
        }
        thread::sleep(Duration::from_millis(1));
    }
}
