//! Command-line experiment runner.
//!
//! Exit codes: 0 on success, 1 if any grid cell or verified property failed,
//! 2 on configuration errors.

use clap::{Args, Parser, Subcommand};
use rcr::experiment::{
    emit_increasing_n, emit_results, emit_verification, run_experiment, run_increasing_n,
    run_theory_verification, ExperimentConfig, Mode,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "rcr", version, about = "Train and evaluate regression models with a cost-based reject option")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config file.
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to the experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's mode.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker pool size (the RCR_JOBS environment variable overrides this).
    #[arg(long)]
    jobs: Option<usize>,
}

fn load_config(args: &RunArgs) -> Result<ExperimentConfig, String> {
    let mut cfg = ExperimentConfig::load(&args.config)
        .map_err(|e| format!("cannot load config {}: {e}", args.config.display()))?;
    if let Some(mode) = args.mode {
        cfg.mode = mode;
    }
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    if args.jobs.is_some() {
        cfg.jobs = args.jobs;
    }
    cfg.validate().map_err(|e| format!("invalid config: {e}"))?;
    Ok(cfg)
}

fn run(args: &RunArgs) -> ExitCode {
    let cfg = match load_config(args) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("rcr: {msg}");
            return ExitCode::from(2);
        }
    };

    let outcome = match cfg.mode {
        Mode::Experiment => run_experiment(&cfg).and_then(|table| {
            let paths = emit_results(&table, &cfg, &cfg.output_dir, &cfg.formats)?;
            for row in &table.rows {
                let status = if row.failures.is_empty() { "ok" } else { "FAILED" };
                let rcr = row
                    .aggregate
                    .as_ref()
                    .map(|a| format!("rcr_loss {:.4} (±{:.4})", a.rcr_loss.mean, a.rcr_loss.std))
                    .unwrap_or_else(|| "no successful repetitions".into());
                println!(
                    "[{status}] {} loss={} cost={}: {} over {}/{} reps",
                    row.dataset,
                    row.loss_kind,
                    row.cost.label(),
                    rcr,
                    row.reports.len(),
                    row.repetitions_attempted
                );
                for failure in &row.failures {
                    eprintln!("  cell failure: {failure}");
                }
            }
            for path in &paths {
                println!("wrote {}", path.display());
            }
            Ok(table.has_failures())
        }),
        Mode::VerifyTheory => run_theory_verification(&cfg).and_then(|report| {
            let paths = emit_verification(&report, &cfg, &cfg.output_dir, &cfg.formats)?;
            for p in &report.properties {
                let status = if p.passed { "PASS" } else { "FAIL" };
                let detail = if p.detail.is_empty() { String::new() } else { format!(" — {}", p.detail) };
                println!("[{status}] {} ({} failures / {} checks){detail}", p.name, p.failures, p.total);
            }
            for path in &paths {
                println!("wrote {}", path.display());
            }
            Ok(!report.all_passed())
        }),
        Mode::IncreasingN => run_increasing_n(&cfg).and_then(|table| {
            let paths = emit_increasing_n(&table, &cfg, &cfg.output_dir, &cfg.formats)?;
            for row in &table.rows {
                let status = if row.failures.is_empty() { "ok" } else { "FAILED" };
                println!(
                    "[{status}] fraction {:.3}: median rcr_loss {} median al {}",
                    row.fraction,
                    row.median_rcr_loss.map(|v| format!("{v:.4}")).unwrap_or_default(),
                    row.median_al.map(|v| format!("{v:.4}")).unwrap_or_default(),
                );
                for failure in &row.failures {
                    eprintln!("  cell failure: {failure}");
                }
            }
            for path in &paths {
                println!("wrote {}", path.display());
            }
            Ok(table.has_failures())
        }),
    };

    match outcome {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(1),
        Err(e) => {
            eprintln!("rcr: {e}");
            ExitCode::from(1)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Run(args) => run(args),
    }
}
