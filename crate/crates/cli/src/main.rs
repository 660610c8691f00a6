use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use krylov_certify::estimators::Criterion;
use krylov_certify::StopReason;
use krylov_certify_cli::{
    compare, compare_config, format_compare, load_matrix, make_rhs, parse_variant, run, spectrum,
    summary, write_csv, EigMode, RhsMode, RunConfig,
};

/// Conjugate gradients with certified error bounds.
#[derive(Parser)]
#[command(name = "krylov-certify", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one solve and write the per-iteration trace as CSV.
    Solve(SolveArgs),
    /// Print the extremal eigenvalues and condition number (dense, n ≤ 5000).
    Spectrum {
        #[arg(long)]
        matrix: PathBuf,
    },
    /// Replay several stopping criteria against one solve.
    Compare {
        #[command(flatten)]
        args: SolveArgs,
        /// Comma-separated list of criteria to replay.
        #[arg(long, value_delimiter = ',', default_value = "rel-residue,rel-anorm,rel-l2")]
        criteria: Vec<Criterion>,
    },
}

#[derive(Args)]
struct SolveArgs {
    /// MatrixMarket file (coordinate, real, symmetric).
    #[arg(long)]
    matrix: PathBuf,
    /// ones, file:PATH or eigmin[:SCALE].
    #[arg(long, default_value = "ones")]
    rhs: RhsMode,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Defaults to 10 n.
    #[arg(long)]
    max_iter: Option<usize>,
    /// rel-anorm, rel-l2 or rel-residue.
    #[arg(long, default_value = "rel-anorm")]
    criterion: Criterion,
    #[arg(long, default_value_t = krylov_certify::solver::DEFAULT_DELAY)]
    delay: usize,
    #[arg(long, default_value_t = krylov_certify::extrapolate::DEFAULT_WINDOW)]
    window: usize,
    /// over-n or over-k.
    #[arg(long, default_value = "over-n", value_parser = parse_variant)]
    variant: krylov_certify::Variant,
    /// estimated, oracle or fixed:A,B.
    #[arg(long, default_value = "estimated")]
    eig: EigMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Add true errors from a dense reference solve.
    #[arg(long)]
    validate: bool,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl SolveArgs {
    fn config(self) -> RunConfig {
        RunConfig {
            matrix_path: self.matrix,
            rhs: self.rhs,
            tol: self.tol,
            max_iter: self.max_iter,
            criterion: self.criterion,
            delay: self.delay,
            window: self.window,
            variant: self.variant,
            eig: self.eig,
            seed: self.seed,
            validate: self.validate,
            output: self.out,
        }
    }
}

fn cmd_solve(cfg: RunConfig) -> Result<ExitCode> {
    let a = load_matrix(&cfg.matrix_path)?;
    let b = make_rhs(&cfg.rhs, &a, cfg.seed)?;
    let outcome = run(&cfg, &a, &b)?;
    let report = summary(&outcome);
    match &cfg.output {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            write_csv(&outcome, BufWriter::new(file))?;
            print!("{report}");
        }
        None => {
            write_csv(&outcome, io::stdout().lock())?;
            eprint!("{report}");
        }
    }
    if outcome.report.stop_reason == StopReason::MaxIterations {
        eprintln!("error: no convergence within {} iterations", outcome.report.iterations);
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_compare(cfg: RunConfig, criteria: &[Criterion]) -> Result<ExitCode> {
    let a = load_matrix(&cfg.matrix_path)?;
    let b = make_rhs(&cfg.rhs, &a, cfg.seed)?;
    let shared = compare_config(&cfg, a.n());
    let outcome = run(&shared, &a, &b)?;
    if let Some(path) = &cfg.output {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        write_csv(&outcome, BufWriter::new(file))?;
    }
    let rows = compare(&outcome, criteria, cfg.tol, cfg.delay);
    let mut out = io::stdout().lock();
    write!(out, "{}", format_compare(&rows))?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("KRYLOV_CERTIFY_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => cmd_solve(args.config()),
        Command::Spectrum { matrix } => load_matrix(&matrix).and_then(|a| {
            print!("{}", spectrum(&a)?);
            Ok(ExitCode::SUCCESS)
        }),
        Command::Compare { args, criteria } => cmd_compare(args.config(), &criteria),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
