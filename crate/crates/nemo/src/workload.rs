//! Seeded generation of synthetic high-contention blocks, plus block file
//! serialization.
//!
//! Every random quantity is drawn from one seeded generator in a fixed order,
//! so identical parameters produce bit-identical blocks. Per transaction the
//! order is: owned-or-shared coin (only when `owned_fraction > 0`), access
//! count, object draws (rejections included), access kinds, usage coins
//! (re-flipped as a whole while the used set is empty), hint coins (one per
//! used access, always consumed regardless of the knowledge level), and
//! finally the duration. Hint coins are consumed even at knowledge 0 or 100
//! so blocks with the same seed differ only in their hint flags across
//! knowledge levels. Normal deviates come from the Box-Muller transform with
//! both deviates of a pair consumed in order.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Access, AccessKind, ObjectId, ObjectKind, Transaction, TxnIndex};

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("invalid workload parameters: {0}")]
    InvalidParams(String),
    #[error("transaction {txn}: {msg}")]
    Schema { txn: TxnIndex, msg: String },
    #[error("block file: {0}")]
    Format(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Workload knobs, defaulting to the contended benchmark setup: 50 shared
/// objects, Zipf(50, 2.0) object selection, LogNormal(0.5, 0.5) access
/// counts, LogNormal(2.0, 0.5) millisecond durations, a 35/42.25/22.75
/// read/read-write/write mix, and 90% usage probability per access.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WorkloadParams {
    pub block_size: usize,
    pub n_shared_objects: usize,
    pub count_mu: f64,
    pub count_sigma: f64,
    pub zipf_s: f64,
    pub p_read: f64,
    pub p_readwrite: f64,
    pub p_write: f64,
    pub p_use: f64,
    /// Percentage (0..=100) of used accesses that become hints.
    pub knowledge: u8,
    pub duration_mu: f64,
    pub duration_sigma: f64,
    /// Fraction of transactions that touch a single fresh owned object
    /// instead of shared ones.
    pub owned_fraction: f64,
    pub seed: u64,
}

impl Default for WorkloadParams {
    fn default() -> Self {
        WorkloadParams {
            block_size: 1000,
            n_shared_objects: 50,
            count_mu: 0.5,
            count_sigma: 0.5,
            zipf_s: 2.0,
            p_read: 0.35,
            p_readwrite: 0.4225,
            p_write: 0.2275,
            p_use: 0.9,
            knowledge: 0,
            duration_mu: 2.0,
            duration_sigma: 0.5,
            owned_fraction: 0.0,
            seed: 0,
        }
    }
}

impl WorkloadParams {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        let err = |msg: &str| Err(WorkloadError::InvalidParams(msg.to_string()));
        if self.block_size == 0 {
            return err("block_size must be >= 1");
        }
        if self.n_shared_objects == 0 {
            return err("n_shared_objects must be >= 1");
        }
        if self.count_sigma <= 0.0 || self.duration_sigma <= 0.0 {
            return err("sigma parameters must be > 0");
        }
        if self.zipf_s <= 0.0 {
            return err("zipf_s must be > 0");
        }
        for (name, p) in [
            ("p_read", self.p_read),
            ("p_readwrite", self.p_readwrite),
            ("p_write", self.p_write),
            ("p_use", self.p_use),
            ("owned_fraction", self.owned_fraction),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(WorkloadError::InvalidParams(format!("{name} must be in [0, 1]")));
            }
        }
        if (self.p_read + self.p_readwrite + self.p_write - 1.0).abs() > 1e-9 {
            return err("p_read + p_readwrite + p_write must sum to 1");
        }
        if self.knowledge > 100 {
            return err("knowledge must be in 0..=100");
        }
        Ok(())
    }
}

/// Deterministic generator shared by all sampling routines: a 64-bit-seeded
/// stream of uniforms plus a Box-Muller spare so both normal deviates of a
/// pair are consumed in order.
pub struct WorkloadRng {
    rng: ChaCha12Rng,
    spare_normal: Option<f64>,
}

impl WorkloadRng {
    pub fn new(seed: u64) -> Self {
        WorkloadRng {
            rng: ChaCha12Rng::seed_from_u64(seed),
            spare_normal: None,
        }
    }

    /// Uniform draw in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    pub fn coin(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Standard normal deviate via Box-Muller; the second deviate of each
    /// pair is cached and consumed next.
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        // 1 - u keeps the argument of ln strictly positive.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(radius * theta.sin());
        radius * theta.cos()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
}

/// exp(mu + sigma * Z) with Z standard normal.
pub fn sample_lognormal(mu: f64, sigma: f64, rng: &mut WorkloadRng) -> f64 {
    (mu + sigma * rng.standard_normal()).exp()
}

/// Zipf probability of rank `k` among `n` items with exponent `s`:
/// k^(-s) / sum_{j=1..n} j^(-s).
pub fn zipf_pmf(n: usize, s: f64, k: usize) -> f64 {
    assert!(k >= 1 && k <= n);
    let norm: f64 = (1..=n).map(|j| (j as f64).powf(-s)).sum();
    (k as f64).powf(-s) / norm
}

/// Inverse-CDF sampler over the precomputed cumulative Zipf distribution.
pub struct ZipfSampler {
    cdf: Vec<f64>,
}

impl ZipfSampler {
    pub fn new(n: usize, s: f64) -> Self {
        let mut cdf = Vec::with_capacity(n);
        let mut acc = 0.0;
        for k in 1..=n {
            acc += (k as f64).powf(-s);
            cdf.push(acc);
        }
        let norm = *cdf.last().expect("n >= 1");
        for c in &mut cdf {
            *c /= norm;
        }
        ZipfSampler { cdf }
    }

    /// Rank in 1..=n.
    pub fn sample(&self, rng: &mut WorkloadRng) -> usize {
        let u = rng.uniform();
        self.cdf.partition_point(|&c| c <= u) + 1
    }
}

/// One Zipf(n, s) rank draw.
pub fn sample_zipf(n: usize, s: f64, rng: &mut WorkloadRng) -> usize {
    ZipfSampler::new(n, s).sample(rng)
}

/// A generated block: the parameters it came from, the object table, and the
/// transactions. Immutable after generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub params: WorkloadParams,
    pub object_kinds: Vec<ObjectKind>,
    pub transactions: Vec<Transaction>,
}

impl Block {
    pub fn len(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }

    pub fn object_count(&self) -> usize {
        self.object_kinds.len()
    }
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor().max(0.0) as usize
}

/// Deterministically generates a block from the parameters. See the module
/// docs for the normative draw order.
pub fn generate_block(params: &WorkloadParams) -> Result<Block, WorkloadError> {
    params.validate()?;
    let mut rng = WorkloadRng::new(params.seed);
    let zipf = ZipfSampler::new(params.n_shared_objects, params.zipf_s);
    let hint_p = params.knowledge as f64 / 100.0;

    let mut object_kinds = vec![ObjectKind::Shared; params.n_shared_objects];
    let mut transactions = Vec::with_capacity(params.block_size);

    for index in 0..params.block_size {
        let owned = params.owned_fraction > 0.0 && rng.coin(params.owned_fraction);
        if owned {
            let object = object_kinds.len() as ObjectId;
            object_kinds.push(ObjectKind::Owned);
            let hinted = rng.coin(hint_p);
            let duration_ms = sample_lognormal(params.duration_mu, params.duration_sigma, &mut rng);
            transactions.push(Transaction {
                index,
                accesses: vec![Access {
                    object,
                    kind: AccessKind::ReadWrite,
                    used: true,
                    hinted,
                }],
                duration_ms,
                owned_only: true,
            });
            continue;
        }

        let raw_count = sample_lognormal(params.count_mu, params.count_sigma, &mut rng);
        let count = round_half_up(raw_count).clamp(1, params.n_shared_objects);

        let mut objects: Vec<ObjectId> = Vec::with_capacity(count);
        let mut seen = HashSet::with_capacity(count);
        while objects.len() < count {
            let object = (zipf.sample(&mut rng) - 1) as ObjectId;
            if seen.insert(object) {
                objects.push(object);
            }
        }

        let kinds: Vec<AccessKind> = objects
            .iter()
            .map(|_| {
                let u = rng.uniform();
                if u < params.p_read {
                    AccessKind::Read
                } else if u < params.p_read + params.p_readwrite {
                    AccessKind::ReadWrite
                } else {
                    AccessKind::Write
                }
            })
            .collect();

        // A transaction that uses nothing is meaningless; re-flip the whole
        // set until at least one access is used.
        let used: Vec<bool> = loop {
            let flips: Vec<bool> = objects.iter().map(|_| rng.coin(params.p_use)).collect();
            if flips.iter().any(|&u| u) {
                break flips;
            }
        };

        let hinted: Vec<bool> = used.iter().map(|&u| u && rng.coin(hint_p)).collect();

        let duration_ms = sample_lognormal(params.duration_mu, params.duration_sigma, &mut rng);

        let accesses = objects
            .into_iter()
            .zip(kinds)
            .zip(used.into_iter().zip(hinted))
            .map(|((object, kind), (used, hinted))| Access { object, kind, used, hinted })
            .collect();

        transactions.push(Transaction {
            index,
            accesses,
            duration_ms,
            owned_only: false,
        });
    }

    let block = Block { params: params.clone(), object_kinds, transactions };
    debug_assert!(validate_block(&block).is_ok());
    Ok(block)
}

/// Structural checks every block must satisfy, whether generated or loaded:
/// hint implies used, distinct objects per transaction, ids in range,
/// immutable objects never written, owned objects used by at most one
/// transaction, a consistent owned-only flag, and positive durations.
pub fn validate_block(block: &Block) -> Result<(), WorkloadError> {
    let n_objects = block.object_kinds.len();
    let mut owned_user: Vec<Option<TxnIndex>> = vec![None; n_objects];
    for (i, txn) in block.transactions.iter().enumerate() {
        let fail = |msg: String| Err(WorkloadError::Schema { txn: i, msg });
        if txn.index != i {
            return fail(format!("index field {} does not match position", txn.index));
        }
        if !(txn.duration_ms > 0.0) {
            return fail("duration_ms must be > 0".to_string());
        }
        if txn.accesses.is_empty() {
            return fail("empty access set".to_string());
        }
        let mut seen = HashSet::new();
        let mut any_used = false;
        for access in &txn.accesses {
            if access.object as usize >= n_objects {
                return fail(format!("object {} out of range", access.object));
            }
            if !seen.insert(access.object) {
                return fail(format!("duplicate object {}", access.object));
            }
            if access.hinted && !access.used {
                return fail(format!(
                    "hinted access on object {} is not in the used set",
                    access.object
                ));
            }
            any_used |= access.used;
            let kind = block.object_kinds[access.object as usize];
            if kind == ObjectKind::Immutable && access.kind.writes() {
                return fail(format!("immutable object {} in a write set", access.object));
            }
            if kind == ObjectKind::Owned {
                match owned_user[access.object as usize] {
                    None => owned_user[access.object as usize] = Some(i),
                    Some(first) => {
                        return fail(format!(
                            "owned object {} already used by transaction {first}",
                            access.object
                        ));
                    }
                }
            }
        }
        if !any_used {
            return fail("used set is empty".to_string());
        }
        if txn.owned_only != crate::model::is_owned_only(txn, &block.object_kinds) {
            return fail("owned_only flag does not match the access set".to_string());
        }
    }
    Ok(())
}

/// Writes the block as a self-describing JSON document.
pub fn save_block(block: &Block, path: &Path) -> Result<(), WorkloadError> {
    let json = serde_json::to_string_pretty(block)?;
    fs::write(path, json)?;
    Ok(())
}

/// Loads and schema-validates a block file.
pub fn load_block(path: &Path) -> Result<Block, WorkloadError> {
    let data = fs::read_to_string(path)?;
    let block: Block = serde_json::from_str(&data)?;
    validate_block(&block)?;
    Ok(block)
}

/// Headline statistics used by the generate subcommand.
#[derive(Debug, Clone, Serialize)]
pub struct BlockSummary {
    pub transactions: usize,
    pub objects: usize,
    pub mean_exhaustive_accesses: f64,
    pub mean_duration_ms: f64,
    /// Share of exhaustive accesses that hit the most popular object.
    pub hottest_object_frequency: f64,
    /// Share of used accesses covered by hints.
    pub hint_coverage: f64,
}

pub fn summarize_block(block: &Block) -> BlockSummary {
    let mut access_total = 0usize;
    let mut duration_total = 0.0;
    let mut used = 0usize;
    let mut hinted = 0usize;
    let mut per_object = vec![0usize; block.object_count()];
    for txn in &block.transactions {
        access_total += txn.accesses.len();
        duration_total += txn.duration_ms;
        for a in &txn.accesses {
            per_object[a.object as usize] += 1;
            used += a.used as usize;
            hinted += a.hinted as usize;
        }
    }
    let n = block.len().max(1) as f64;
    let hottest = per_object.iter().copied().max().unwrap_or(0);
    BlockSummary {
        transactions: block.len(),
        objects: block.object_count(),
        mean_exhaustive_accesses: access_total as f64 / n,
        mean_duration_ms: duration_total / n,
        hottest_object_frequency: hottest as f64 / (access_total.max(1)) as f64,
        hint_coverage: if used == 0 { 0.0 } else { hinted as f64 / used as f64 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_params(seed: u64, knowledge: u8) -> WorkloadParams {
        WorkloadParams {
            block_size: 64,
            knowledge,
            seed,
            ..WorkloadParams::default()
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let params = small_params(7, 50);
        let a = generate_block(&params).unwrap();
        let b = generate_block(&params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn knowledge_only_changes_hint_flags() {
        let a = generate_block(&small_params(7, 0)).unwrap();
        let b = generate_block(&small_params(7, 100)).unwrap();
        assert_eq!(a.len(), b.len());
        for (ta, tb) in a.transactions.iter().zip(&b.transactions) {
            assert_eq!(ta.duration_ms, tb.duration_ms);
            for (aa, ab) in ta.accesses.iter().zip(&tb.accesses) {
                assert_eq!((aa.object, aa.kind, aa.used), (ab.object, ab.kind, ab.used));
            }
        }
    }

    #[test]
    fn knowledge_extremes_pin_hint_sets() {
        let zero = generate_block(&small_params(3, 0)).unwrap();
        assert!(zero.transactions.iter().all(|t| t.hint_set().count() == 0));
        let full = generate_block(&small_params(3, 100)).unwrap();
        for txn in &full.transactions {
            assert_eq!(txn.hint_set().count(), txn.used_set().count());
        }
    }

    #[test]
    fn generated_blocks_satisfy_set_inclusions() {
        let block = generate_block(&small_params(11, 60)).unwrap();
        validate_block(&block).unwrap();
        for txn in &block.transactions {
            assert!(txn.used_set().count() >= 1);
            for a in &txn.accesses {
                assert!(!a.hinted || a.used);
            }
        }
    }

    #[test]
    fn owned_fraction_one_makes_every_transaction_owned_only() {
        let params = WorkloadParams {
            block_size: 32,
            owned_fraction: 1.0,
            knowledge: 100,
            seed: 5,
            ..WorkloadParams::default()
        };
        let block = generate_block(&params).unwrap();
        assert!(block.transactions.iter().all(|t| t.owned_only));
        assert_eq!(block.object_count(), params.n_shared_objects + 32);
    }

    #[test]
    fn zipf_pmf_matches_analytic_values() {
        // 1 / sum_{j=1..50} j^-2 and the next two ranks.
        assert!((zipf_pmf(50, 2.0, 1) - 0.61534).abs() < 5e-5);
        assert!((zipf_pmf(50, 2.0, 2) - 0.15383).abs() < 5e-5);
        assert!((zipf_pmf(50, 2.0, 3) - 0.06837).abs() < 5e-5);
    }

    #[test]
    fn zipf_samples_stay_in_support_and_degenerate_at_large_s() {
        let mut rng = WorkloadRng::new(1);
        let sampler = ZipfSampler::new(50, 2.0);
        for _ in 0..10_000 {
            let k = sampler.sample(&mut rng);
            assert!((1..=50).contains(&k));
        }
        let sharp = ZipfSampler::new(50, 20.0);
        for _ in 0..10_000 {
            assert_eq!(sharp.sample(&mut rng), 1);
        }
    }

    #[test]
    fn lognormal_sample_statistics_are_sane() {
        // Quick version of the distribution audit: 10^5 draws, 5% slack.
        let mut rng = WorkloadRng::new(42);
        let n = 100_000;
        let mean: f64 = (0..n).map(|_| sample_lognormal(2.0, 0.5, &mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 8.3729).abs() / 8.3729 < 0.05, "mean {mean}");
    }

    #[test]
    fn block_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("block.json");
        let block = generate_block(&small_params(9, 75)).unwrap();
        save_block(&block, &path).unwrap();
        let loaded = load_block(&path).unwrap();
        assert_eq!(block, loaded);
    }

    #[test]
    fn schema_violations_name_the_transaction() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("block.json");
        let mut block = generate_block(&small_params(9, 0)).unwrap();
        // Force a hint outside the used set in txn 3.
        let access = &mut block.transactions[3].accesses[0];
        access.used = false;
        access.hinted = true;
        // May have invalidated the non-empty-used invariant instead; ensure
        // some access stays used.
        if block.transactions[3].accesses.len() == 1 {
            block.transactions[3].accesses.push(Access {
                object: 49,
                kind: AccessKind::Read,
                used: true,
                hinted: false,
            });
        }
        save_block(&block, &path).unwrap();
        match load_block(&path) {
            Err(WorkloadError::Schema { txn: 3, .. }) => {}
            other => panic!("expected schema error for txn 3, got {other:?}"),
        }
    }

    #[test]
    fn empty_block_document_is_valid() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.json");
        let block = Block {
            params: WorkloadParams::default(),
            object_kinds: vec![ObjectKind::Shared; 50],
            transactions: Vec::new(),
        };
        save_block(&block, &path).unwrap();
        let loaded = load_block(&path).unwrap();
        assert!(loaded.is_empty());
    }

    #[test]
    fn invalid_params_are_rejected() {
        let mut p = WorkloadParams::default();
        p.block_size = 0;
        assert!(matches!(generate_block(&p), Err(WorkloadError::InvalidParams(_))));
        let mut p = WorkloadParams::default();
        p.p_read = 0.5; // sums > 1
        assert!(generate_block(&p).is_err());
        let mut p = WorkloadParams::default();
        p.knowledge = 101;
        assert!(generate_block(&p).is_err());
    }
}
