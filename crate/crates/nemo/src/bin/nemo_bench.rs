//! Benchmark CLI: generate workloads, run single experiments, sweep the
//! engine/workers/knowledge/seed cross product, and verify runs against the
//! serializability oracle.
//!
//! Exit codes: 0 on success, 2 on validation or verification failure, 3 on a
//! watchdog timeout.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use nemo::engine::EngineKind;
use nemo::harness::{self, HarnessError, SweepSpec};
use nemo::oracle;
use nemo::workload::{self, Block, WorkloadParams};

#[derive(Parser)]
#[command(name = "nemo-bench", version, about = "Parallel execution engine benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a workload block file and print summary statistics.
    Generate(GenerateArgs),
    /// Run one engine over a block and print the report as JSON.
    Run(RunArgs),
    /// Run the engine × workers × knowledge × seeds cross product to CSV.
    Sweep(SweepArgs),
    /// Run engines over a block and audit them with the oracle.
    Verify(VerifyArgs),
}

/// Workload fields shared by subcommands that can generate a block inline.
#[derive(Args)]
struct WorkloadArgs {
    /// Workload parameters file (TOML); flags override file values.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    block_size: Option<usize>,
    /// Prior-knowledge percentage in 0..=100.
    #[arg(long)]
    knowledge: Option<u8>,
    /// Fraction of transactions touching a single fresh owned object.
    #[arg(long)]
    owned_fraction: Option<f64>,
}

impl WorkloadArgs {
    fn resolve(&self) -> Result<WorkloadParams, HarnessError> {
        let mut params = match &self.params {
            Some(path) => toml::from_str(&std::fs::read_to_string(path)?)
                .map_err(HarnessError::Toml)?,
            None => WorkloadParams::default(),
        };
        if let Some(seed) = self.seed {
            params.seed = seed;
        }
        if let Some(block_size) = self.block_size {
            params.block_size = block_size;
        }
        if let Some(knowledge) = self.knowledge {
            params.knowledge = knowledge;
        }
        if let Some(owned_fraction) = self.owned_fraction {
            params.owned_fraction = owned_fraction;
        }
        Ok(params)
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    workload: WorkloadArgs,
    /// Output block file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Block file to run; generated inline from the workload flags if absent.
    block: Option<PathBuf>,
    #[arg(long)]
    engine: EngineArg,
    #[arg(long, default_value_t = 8)]
    workers: usize,
    /// Audit the run with the oracle; violations exit nonzero.
    #[arg(long)]
    verify: bool,
    #[command(flatten)]
    workload: WorkloadArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep specification file (TOML); flags override file values.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Raw results CSV; the aggregate lands next to it as <name>.agg.csv.
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated engine list.
    #[arg(long, value_delimiter = ',')]
    engine: Option<Vec<EngineArg>>,
    /// Comma-separated worker counts.
    #[arg(long, value_delimiter = ',')]
    workers: Option<Vec<usize>>,
    /// Comma-separated knowledge percentages.
    #[arg(long, value_delimiter = ',')]
    knowledge: Option<Vec<u8>>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',')]
    seed: Option<Vec<u64>>,
    #[arg(long)]
    block_size: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    verify: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Block file to verify; generated inline if absent.
    block: Option<PathBuf>,
    /// Engine to verify; all five when omitted.
    #[arg(long)]
    engine: Option<EngineArg>,
    #[arg(long, default_value_t = 8)]
    workers: usize,
    #[command(flatten)]
    workload: WorkloadArgs,
}

#[derive(Clone, Copy)]
struct EngineArg(EngineKind);

impl std::str::FromStr for EngineArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse().map(EngineArg)
    }
}

fn load_or_generate(block: &Option<PathBuf>, workload: &WorkloadArgs) -> Result<Block, HarnessError> {
    match block {
        Some(path) => Ok(workload::load_block(path)?),
        None => Ok(workload::generate_block(&workload.resolve()?)?),
    }
}

fn cmd_generate(args: &GenerateArgs) -> Result<(), HarnessError> {
    let params = args.workload.resolve()?;
    let block = workload::generate_block(&params)?;
    workload::save_block(&block, &args.out)?;
    let summary = workload::summarize_block(&block);
    println!("wrote {} transactions to {}", summary.transactions, args.out.display());
    println!("objects:                  {}", summary.objects);
    println!("mean exhaustive accesses: {:.3}", summary.mean_exhaustive_accesses);
    println!("mean duration:            {:.3} ms", summary.mean_duration_ms);
    println!("hottest object frequency: {:.1}%", summary.hottest_object_frequency * 100.0);
    println!("hint coverage:            {:.1}%", summary.hint_coverage * 100.0);
    Ok(())
}

fn cmd_run(args: &RunArgs) -> Result<(), HarnessError> {
    let block = load_or_generate(&args.block, &args.workload)?;
    let outcome = harness::run_once(
        &block,
        args.engine.0,
        args.workers,
        args.verify,
        Duration::from_secs(30),
    )?;
    let verified = args.verify.then_some(true);
    let json = harness::report_json(&block, args.engine.0, args.workers, &outcome, verified);
    println!("{json}");
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), HarnessError> {
    let mut spec = match &args.params {
        Some(path) => SweepSpec::from_toml(&std::fs::read_to_string(path)?)?,
        None => SweepSpec::default(),
    };
    if let Some(engines) = &args.engine {
        spec.engines = engines.iter().map(|e| e.0).collect();
    }
    if let Some(workers) = &args.workers {
        spec.workers = workers.clone();
    }
    if let Some(knowledge) = &args.knowledge {
        spec.knowledge = knowledge.clone();
    }
    if let Some(seeds) = &args.seed {
        spec.seeds = seeds.clone();
    }
    if let Some(block_size) = args.block_size {
        spec.block_size = block_size;
    }
    if let Some(repeats) = args.repeats {
        spec.repeats = repeats;
    }
    spec.verify |= args.verify;

    let rows = harness::run_sweep(&spec, &args.out)?;
    println!(
        "wrote {} runs to {} (aggregate: {})",
        rows.len(),
        args.out.display(),
        harness::aggregate_path(&args.out).display()
    );
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> Result<(), HarnessError> {
    let block = load_or_generate(&args.block, &args.workload)?;
    let engines: Vec<EngineKind> = match args.engine {
        Some(e) => vec![e.0],
        None => EngineKind::ALL.to_vec(),
    };
    let mut first_failure: Option<HarnessError> = None;
    for engine in engines {
        let outcome = harness::run_once(&block, engine, args.workers, false, Duration::from_secs(30))?;
        let violations = oracle::check_run(&block, &outcome.report.final_state, &outcome.read_logs);
        if violations.is_empty() {
            println!("{engine}: ok ({} transactions)", block.len());
        } else {
            println!("{engine}: {} violation(s)", violations.len());
            for v in violations.iter().take(10) {
                println!("  {v}");
            }
            if first_failure.is_none() {
                first_failure = Some(HarnessError::Verification {
                    violations: violations.len(),
                    first: violations[0].to_string(),
                });
            }
        }
    }
    match first_failure {
        Some(err) => Err(err),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Verify(args) => cmd_verify(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
