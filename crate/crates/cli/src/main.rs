use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use shapbench_cli::config::ExperimentConfig;
use shapbench_cli::{check, explain, runner};

/// Benchmark how missing-data handling strategies distort Shapley-value
/// explanations of downstream models.
#[derive(Parser)]
#[command(name = "shapbench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full experiment sweep described by a config file.
    Run {
        config: PathBuf,
        /// Override the configured output directory.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Abort cells whose data has rows with every feature missing.
        #[arg(long)]
        strict: bool,
        /// Worker threads (0 = all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Run the closed-form identity checks on synthetic data.
    Check {
        config: PathBuf,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Attribute rows from a CSV against a saved model file.
    Explain {
        model_file: PathBuf,
        row_csv: PathBuf,
    },
}

// Exit codes: 0 ok, 1 check failure, 2 config or execution error.
fn main() -> ExitCode {
    match dispatch() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch() -> anyhow::Result<ExitCode> {
    match Cli::parse().command {
        Command::Run {
            config,
            output_dir,
            strict,
            jobs,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(dir) = output_dir {
                cfg.output_dir = dir;
            }
            if strict {
                cfg.strict_all_missing_rows = true;
            }
            if let Some(j) = jobs {
                cfg.jobs = j;
            }
            let report = runner::run(&cfg)?;
            println!(
                "wrote {} files to {} ({} cells, {} unavailable)",
                report.outputs.len(),
                cfg.output_dir.display(),
                report.cells.len(),
                report.unavailable.len()
            );
            for u in &report.unavailable {
                println!(
                    "unavailable: {} r={} {} [{}]: {}",
                    u.dataset, u.rate, u.method, u.criteria, u.reason
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Check { config, output_dir } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(dir) = output_dir {
                cfg.output_dir = dir;
            }
            let outcome = check::run_checks(cfg.base_seed, cfg.check_seeds)?;
            check::write_outputs(&outcome, &cfg.output_dir)?;
            let (passed, total) = (
                outcome.rows.iter().filter(|r| r.pass).count(),
                outcome.rows.len(),
            );
            println!("{passed}/{total} checks passed");
            for row in outcome.rows.iter().filter(|r| !r.pass) {
                println!("FAIL {} ({}) residual={}", row.check, row.params, row.residual);
            }
            Ok(ExitCode::from(check::exit_code(&outcome) as u8))
        }
        Command::Explain {
            model_file,
            row_csv,
        } => {
            print!("{}", explain::explain_model(&model_file, &row_csv)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}
