use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use riccati_bench::{exit_code, run_bench, run_gen, run_solve, run_verify, Overrides, RunManifest, RunStatus, Suite};
use riccati_core::problem::{InnerMethod, SolveStrategy};
use riccati_core::{Error, Result};

/// Solve and benchmark Riccati equations with indefinite quadratic terms.
///
/// Exit codes: 0 success, 1 solver failure, 2 not stabilizable, 3 outer
/// iteration limit, 4 invalid input or I/O error. Set RICCATI_LOG to error,
/// info or debug for diagnostics on standard error.
#[derive(Parser)]
#[command(name = "riccati", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads for parallel kernels.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one run manifest and write the factor, traces and summary.
    Solve(RunArgs),
    /// Run a suite of manifests and write a results table.
    Bench(RunArgs),
    /// Recompute residual metrics of a factor stored on disk.
    Verify(VerifyArgs),
    /// Write the problem of a manifest as MatrixMarket files.
    Gen(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Run manifest, problem manifest, or (for bench) suite file.
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    overrides: OverrideArgs,
}

#[derive(Args)]
struct OverrideArgs {
    /// Outer stopping threshold.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, value_enum)]
    inner: Option<InnerArg>,
    #[arg(long, value_enum)]
    strategy: Option<StrategyArg>,
    /// Seed of random generators.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Run manifest or problem manifest describing the equation.
    #[arg(long)]
    manifest: PathBuf,
    /// Solution factor Z in MatrixMarket format.
    #[arg(long)]
    factor: PathBuf,
    /// Last increment factor, needed for final_res.
    #[arg(long)]
    increment: Option<PathBuf>,
    /// Write the metrics here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed of random generators.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum InnerArg {
    Sign,
    Radi,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Augmented,
    Smw,
}

impl OverrideArgs {
    fn to_overrides(&self) -> Overrides {
        Overrides {
            tau: self.tau,
            inner: self.inner.map(|i| match i {
                InnerArg::Sign => InnerMethod::Sign,
                InnerArg::Radi => InnerMethod::Radi,
            }),
            strategy: self.strategy.map(|s| match s {
                StrategyArg::Augmented => SolveStrategy::Augmented,
                StrategyArg::Smw => SolveStrategy::Smw,
            }),
            seed: self.seed,
        }
    }
}

fn load(args: &RunArgs) -> Result<RunManifest> {
    let mut m = RunManifest::read(&args.manifest)?;
    m.apply(&args.overrides.to_overrides());
    m.validate()?;
    Ok(m)
}

fn configure_threads(threads: Option<usize>) {
    let Some(n) = threads else { return };
    #[cfg(feature = "parallel")]
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
        log::warn!("could not configure {n} threads: {e}");
    }
    #[cfg(not(feature = "parallel"))]
    log::warn!("--threads {n} ignored: built without the parallel feature");
}

fn run(cli: Cli) -> Result<i32> {
    configure_threads(cli.threads);
    match cli.command {
        Command::Solve(args) => {
            let m = load(&args)?;
            let out = args.out.clone().unwrap_or_else(|| m.out_dir());
            let summary = run_solve(&m, &out)?;
            match &summary.row.error {
                Some(e) => eprintln!("error: {}: {e}", m.name),
                None => println!("{}", serde_json::to_string(&summary.row)?),
            }
            Ok(summary.exit_code)
        }
        Command::Bench(args) => {
            let suite = Suite::read(&args.manifest)?;
            let out = args.out.clone().unwrap_or_else(|| PathBuf::from("runs").join(&suite.name));
            let table = run_bench(&suite, &out, &args.overrides.to_overrides())?;
            let failed = table.rows.iter().filter(|r| r.status == RunStatus::Failed).count();
            eprintln!("{} runs, {failed} failed; results in {}", table.rows.len(), out.display());
            Ok(0)
        }
        Command::Verify(args) => {
            let mut m = RunManifest::read(&args.manifest)?;
            m.apply(&Overrides { seed: args.seed, ..Default::default() });
            let metrics = run_verify(&m, &args.factor, args.increment.as_deref())?;
            let text = serde_json::to_string_pretty(&metrics)? + "\n";
            match &args.out {
                Some(p) => std::fs::write(p, text)?,
                None => print!("{text}"),
            }
            Ok(0)
        }
        Command::Gen(args) => {
            let m = load(&args)?;
            let out = args.out.clone().unwrap_or_else(|| m.out_dir());
            let path = run_gen(&m, &out)?;
            println!("{}", path.display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RICCATI_LOG", "warn")).format_timestamp(None).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(4);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let code = run(cli).unwrap_or_else(|e: Error| {
        eprintln!("error: {e}");
        exit_code(&e)
    });
    ExitCode::from(code as u8)
}
