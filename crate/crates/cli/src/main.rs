//! `seqsel` command-line entry point.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "seqsel",
    version,
    about = "Selection, direct and confounded relations in sequential data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a random structure and a selected dataset from it.
    Simulate(SimulateArgs),
    /// Run discovery on a dataset CSV.
    Discover(DiscoverArgs),
    /// Score an estimated graph against a ground-truth graph.
    Evaluate(EvaluateArgs),
    /// Query-count scaling, or a benchmark sweep with `--mode`.
    Bench(BenchArgs),
    /// Selection-pair precision and recall against sample size.
    Study(StudyArgs),
    /// Exact-recovery sweep with the d-separation oracle.
    OracleCheck(OracleCheckArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Significance level of the Fisher-z test.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Allow latent confounders (`--with-confounders` alone means true).
    #[arg(long, default_value_t = false, num_args = 0..=1, default_missing_value = "true", action = ArgAction::Set)]
    with_confounders: bool,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    n_vars: usize,
    #[arg(long, default_value_t = 10_000)]
    n_samples: usize,
    /// Upper bound on the number of selection groups.
    #[arg(long)]
    max_selection: Option<usize>,
}

#[derive(Debug, Args)]
struct DiscoverArgs {
    #[command(flatten)]
    common: Common,
    /// Dataset CSV with a header row; columns in temporal order.
    #[arg(long)]
    data: PathBuf,
    /// Also write every issued query as JSON lines.
    #[arg(long)]
    trace: bool,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    estimate: PathBuf,
    /// Where to write `evaluation.json`; printed only if absent.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Satisfied,
    Violated,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    /// Ascending list of variable counts.
    #[arg(long, value_delimiter = ',', required = true)]
    n_list: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    max_selection: usize,
    /// Defaults to 2000 for scaling runs and 10000 for sweeps.
    #[arg(long)]
    n_samples: Option<usize>,
    /// Run a precision/recall sweep instead of the scaling run.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long, default_value_t = 10)]
    replicates: usize,
}

#[derive(Debug, Args)]
struct StudyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_delimiter = ',', default_value = "1000,2000,5000,10000")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    n_vars: usize,
    #[arg(long, default_value_t = 10)]
    replicates: usize,
}

#[derive(Debug, Args)]
struct OracleCheckArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 10)]
    n_vars: usize,
    #[arg(long, default_value_t = 100)]
    replicates: usize,
    /// Check the built-in eight-variable example instead of random graphs.
    #[arg(long)]
    fixture: bool,
    /// Invert every oracle answer; negative control for the harness.
    #[arg(long, hide = true)]
    inject_fault: bool,
}

/// Failure classes, mapped onto the process exit code.
#[derive(Debug)]
enum Failure {
    Analysis(String),
    Usage(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Analysis(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Analysis(m) | Failure::Usage(m) | Failure::Io(m) => m,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Discover(a) => commands::discover_data(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Bench(a) => commands::bench(a),
        Command::Study(a) => commands::study(a),
        Command::OracleCheck(a) => commands::oracle_check(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
