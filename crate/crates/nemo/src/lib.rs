//! Parallel execution engines for blockchain-style transaction blocks over an
//! object data model, plus the workload generator and benchmark harness used
//! to compare them under highly contended workloads.
//!
//! Five engines share one simulated execution model (reads, a sleep standing
//! in for compute, then writes):
//!
//! - `sequential`: one worker in block order; the correctness reference.
//! - `blockstm`: optimistic execution over multi-version memory with
//!   index-ordered scheduling, validation, and estimate markers.
//! - `nemo`: optimistic execution extended with a greedy commit fast path for
//!   owned-only transactions, dependency extraction from successful
//!   executions, validation-gated dependency resolution, planned-write
//!   markers derived from prior-knowledge hints, and a priority scheduler
//!   that favors transactions others depend on.
//! - `nemonopq`: `nemo` without the priority queue.
//! - `pcc`: a pessimistic baseline that serializes transactions whose
//!   exhaustive access sets may conflict.
//!
//! Every engine must produce the same final state as the sequential run; the
//! [`oracle`] module checks that plus per-read coherence after the fact.
//!
//! See the crate examples for runnable tours of each capability, and the
//! `nemo-bench` binary for workload generation, single runs, and sweeps.

pub mod engine;
pub mod harness;
pub mod model;
pub mod mvmemory;
pub mod oracle;
pub mod scheduler;
pub mod vm;
pub mod workload;

pub use engine::{run, EngineConfig, EngineKind, EpochOutcome, EpochReport};
pub use model::{Access, AccessKind, ObjectId, ObjectKind, Transaction, TxnIndex, Version};
pub use workload::{generate_block, load_block, save_block, Block, WorkloadParams};
