//! Pessimistic baseline: exhaustive read/write sets gate readiness, so a
//! transaction starts only after every conflicting lower-indexed transaction
//! has finished. Ready transactions enter a FIFO ordered by (ready time,
//! index) and go to the first available worker. Each executes exactly once,
//! reading committed state directly and applying buffered writes at
//! completion; no multi-version memory is involved.

use std::collections::VecDeque;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use crate::model::{conflicts, Version};
use crate::mvmemory::ReadOutcome;
use crate::scheduler::PerTxnStats;
use crate::vm::ReadLogEntry;
use crate::workload::Block;

use super::{Backoff, EngineConfig, EngineError, EpochOutcome, EpochReport};

/// Conflict edges i -> j for i < j, deduplicated, plus the per-transaction
/// count of lower conflicting transactions.
fn build_conflict_graph(block: &Block) -> (Vec<Vec<usize>>, Vec<usize>) {
    let n = block.len();
    // Accessor lists per object: (txn, writes) in index order.
    let mut accessors: Vec<Vec<(usize, bool)>> = vec![Vec::new(); block.object_count()];
    for txn in &block.transactions {
        for access in txn.exhaustive_set() {
            accessors[access.object as usize].push((txn.index, access.kind.writes()));
        }
    }

    let mut dependents: Vec<Vec<usize>> = vec![Vec::new(); n];
    for list in &accessors {
        for (pos, &(i, wi)) in list.iter().enumerate() {
            for &(j, wj) in &list[pos + 1..] {
                if wi || wj {
                    dependents[i].push(j);
                }
            }
        }
    }
    let mut blocker_count = vec![0usize; n];
    for deps in &mut dependents {
        deps.sort_unstable();
        deps.dedup();
    }
    for deps in &dependents {
        for &j in deps {
            blocker_count[j] += 1;
        }
    }
    debug_assert!({
        // The per-object construction must agree with the pairwise predicate.
        let sample = n.min(24);
        (0..sample).all(|i| {
            (i + 1..sample).all(|j| {
                let expected = conflicts(&block.transactions[i], &block.transactions[j]);
                dependents[i].binary_search(&j).is_ok() == expected
            })
        })
    });
    (dependents, blocker_count)
}

pub(super) fn run(block: &Block, config: &EngineConfig) -> Result<EpochOutcome, EngineError> {
    let n = block.len();
    let start = Instant::now();

    let (dependents, blocker_count) = build_conflict_graph(block);
    let remaining: Vec<AtomicUsize> = blocker_count.into_iter().map(AtomicUsize::new).collect();

    let ready: Mutex<VecDeque<usize>> = Mutex::new(
        (0..n)
            .filter(|&i| remaining[i].load(Ordering::Relaxed) == 0)
            .collect(),
    );
    let storage: Mutex<Vec<Version>> = Mutex::new(vec![Version::GENESIS; block.object_count()]);
    let logs: Vec<Mutex<Vec<ReadLogEntry>>> = (0..n).map(|_| Mutex::new(Vec::new())).collect();
    let finished = AtomicUsize::new(0);
    let halted = AtomicBool::new(false);

    if n > 0 {
        thread::scope(|scope| {
            for _ in 0..config.workers.max(1) {
                scope.spawn(|| {
                    let mut backoff = Backoff::new();
                    loop {
                        if halted.load(Ordering::Acquire) || finished.load(Ordering::Acquire) == n {
                            return;
                        }
                        let next = ready.lock().unwrap().pop_front();
                        let Some(index) = next else {
                            backoff.snooze();
                            continue;
                        };
                        backoff.reset();
                        let txn = &block.transactions[index];

                        let mut log = Vec::new();
                        {
                            let storage = storage.lock().unwrap();
                            for object in txn.used_reads_sorted() {
                                let version = storage[object as usize];
                                let observed = if version.is_genesis() {
                                    ReadOutcome::FromStorage
                                } else {
                                    ReadOutcome::FromVersion(version)
                                };
                                log.push(ReadLogEntry { object, observed });
                            }
                        }

                        thread::sleep(Duration::from_secs_f64(txn.duration_ms / 1000.0));

                        {
                            let mut storage = storage.lock().unwrap();
                            for object in txn.used_writes() {
                                storage[object as usize] = Version::new(index, 0);
                            }
                        }
                        *logs[index].lock().unwrap() = log;
                        finished.fetch_add(1, Ordering::Release);

                        let mut newly_ready = Vec::new();
                        for &dep in &dependents[index] {
                            if remaining[dep].fetch_sub(1, Ordering::AcqRel) == 1 {
                                newly_ready.push(dep);
                            }
                        }
                        if !newly_ready.is_empty() {
                            newly_ready.sort_unstable();
                            ready.lock().unwrap().extend(newly_ready);
                        }
                    }
                });
            }

            // Progress watchdog, mirroring the optimistic driver.
            let mut last = 0usize;
            let mut last_change = Instant::now();
            loop {
                let done = finished.load(Ordering::Acquire);
                if done == n {
                    return;
                }
                if done != last {
                    last = done;
                    last_change = Instant::now();
                } else if last_change.elapsed() >= config.watchdog {
                    halted.store(true, Ordering::Release);
                    return;
                }
                thread::sleep(Duration::from_millis(1));
            }
        });
    }

    if finished.load(Ordering::Acquire) != n {
        return Err(EngineError::ProgressTimeout {
            stalled_ms: config.watchdog.as_millis() as u64,
            committed: finished.load(Ordering::Acquire),
            total: n,
        });
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
            final_state: storage.into_inner().unwrap(),
            per_txn: vec![PerTxnStats::default(); n],
        },
    );
    let read_logs = logs.into_iter().map(|m| m.into_inner().unwrap()).collect();
    Ok(EpochOutcome { report, read_logs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::EngineKind;
    use crate::model::{Access, AccessKind, ObjectKind, Transaction};
    use crate::workload::WorkloadParams;

    fn block_of(txns: Vec<Vec<(u32, AccessKind)>>, n_objects: usize, duration_ms: f64) -> Block {
        let transactions = txns
            .into_iter()
            .enumerate()
            .map(|(index, accs)| Transaction {
                index,
                accesses: accs
                    .into_iter()
                    .map(|(object, kind)| Access { object, kind, used: true, hinted: false })
                    .collect(),
                duration_ms,
                owned_only: false,
            })
            .collect();
        Block {
            params: WorkloadParams::default(),
            object_kinds: vec![ObjectKind::Shared; n_objects],
            transactions,
        }
    }

    fn config(workers: usize) -> EngineConfig {
        EngineConfig::new(EngineKind::Pcc, workers)
    }

    #[test]
    fn hot_object_writers_serialize_fully() {
        // Every transaction writes the same object: a conflict clique, so the
        // duration approaches the sum of durations regardless of workers.
        let block = block_of(vec![vec![(0, AccessKind::Write)]; 6], 1, 10.0);
        let outcome = run(&block, &config(8)).unwrap();
        assert!(outcome.report.duration_ms >= 60.0, "{}", outcome.report.duration_ms);
        assert_eq!(outcome.report.reexecutions, 0);
        assert_eq!(outcome.report.final_state[0].writer, 5);
    }

    #[test]
    fn disjoint_transactions_run_in_parallel() {
        let block = block_of(
            (0..6).map(|i| vec![(i as u32, AccessKind::Write)]).collect(),
            6,
            20.0,
        );
        let outcome = run(&block, &config(6)).unwrap();
        // Perfect parallelism: far less than the 120 ms serial time.
        assert!(outcome.report.duration_ms < 80.0, "{}", outcome.report.duration_ms);
    }

    #[test]
    fn readiness_follows_conflicts() {
        // txn1 conflicts only with txn0; once txn0 finishes it runs.
        let block = block_of(
            vec![vec![(0, AccessKind::Write)], vec![(0, AccessKind::Read)]],
            1,
            5.0,
        );
        let outcome = run(&block, &config(2)).unwrap();
        assert_eq!(
            outcome.read_logs[1][0].observed,
            ReadOutcome::FromVersion(Version::new(0, 0))
        );
    }
}
