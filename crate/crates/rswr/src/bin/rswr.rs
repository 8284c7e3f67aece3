//! Command-line front end: `rswr run` executes a configured experiment,
//! `rswr compare` diffs two solution CSVs cell by cell.
//!
//! Exit codes: 0 on success (for `compare`: files identical), 1 on ordinary
//! failure or differing files, 2 on protocol failures such as a zero span.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rswr::config::{apply_preset, load_config, Preset, RunMode};
use rswr::csvio::compare_solution_files;
use rswr::error::{Result, RswrError};
use rswr::experiment::run_experiment;

#[derive(Parser)]
#[command(name = "rswr", about = "Relative Schwarz waveform relaxation for the 1-D wave equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write solution.csv, errors.csv and report.txt.
    Run {
        /// JSON run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Replace geometry, decomposition, sources and duration with a
        /// built-in preset (n2 or n10); tolerances and mode stay configured.
        #[arg(long)]
        preset: Option<String>,
        /// Override the execution mode (single or parallel).
        #[arg(long)]
        mode: Option<String>,
        /// Output directory (defaults to the config's, then ./rswr-out).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare two solution CSVs; exits 0 only if they are identical.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
}

fn parse_mode(text: &str) -> Result<RunMode> {
    match text {
        "single" => Ok(RunMode::Single),
        "parallel" => Ok(RunMode::Parallel),
        other => Err(RswrError::Config(format!(
            "unknown mode `{other}`; expected single or parallel"
        ))),
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Run { config, preset, mode, out } => {
            let mut cfg = load_config(&config)?;
            if let Some(name) = preset {
                cfg = apply_preset(cfg, Preset::parse(&name)?);
                cfg.validate()?;
            }
            if let Some(text) = mode {
                cfg.mode = parse_mode(&text)?;
            }
            let out_dir = out
                .or_else(|| cfg.outputs.dir.as_ref().map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("rswr-out"));
            let artifacts = run_experiment(&cfg, &out_dir)?;
            println!(
                "completed {} windows over {} steps ({:?} mode, {} worker thread(s))",
                artifacts.report.n_windows,
                artifacts.report.n_total_steps,
                artifacts.report.mode,
                artifacts.report.worker_threads
            );
            println!(
                "max |error| vs monolithic reference: {:.3e} (space-time L2 {:.3e})",
                artifacts.errors.max_abs, artifacts.errors.l2_spacetime
            );
            println!("wrote {}", artifacts.solution_csv.display());
            println!("wrote {}", artifacts.errors_csv.display());
            println!("wrote {}", artifacts.report_txt.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare { a, b } => {
            let cmp = compare_solution_files(&a, &b)?;
            if cmp.identical() {
                println!(
                    "identical: {} rows x {} columns match bit for bit",
                    cmp.rows, cmp.columns
                );
                Ok(ExitCode::SUCCESS)
            } else {
                println!(
                    "different: {} cells differ, max |diff| = {:.3e}",
                    cmp.differing_cells, cmp.max_abs_diff
                );
                Ok(ExitCode::FAILURE)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(error.exit_code())
        }
    }
}
