use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use rotbath_core::runner::{self, RunOptions, RunOutcome};
use rotbath_core::scenario::{self, Scenario};

/// Exit code when a run stopped early at a population or truncation ceiling.
const EXIT_RUNAWAY: u8 = 3;

#[derive(Parser)]
#[command(name = "rotbath", version, about = "Field modes coupled to a rotating heat bath")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write CSV outputs.
    Run {
        scenario: PathBuf,
        /// Output directory (overrides `output.dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// RNG seed (overrides `run.seed`).
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Validate a scenario and print its normalised form.
    Check { scenario: PathBuf },
    /// Report KMS residuals of the scenario's bath.
    Kms { scenario: PathBuf },
}

fn load(path: &Path) -> anyhow::Result<(Scenario, PathBuf)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let s = scenario::parse_scenario(&text).with_context(|| format!("in {}", path.display()))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((s, base))
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> anyhow::Result<ExitCode> {
    match Cli::parse().command {
        Command::Run {
            scenario,
            out,
            seed,
            threads,
        } => {
            let (s, base_dir) = load(&scenario)?;
            if threads == Some(0) {
                anyhow::bail!("--threads must be >= 1");
            }
            let report = runner::run_scenario(
                &s,
                &RunOptions {
                    out_dir: out,
                    seed,
                    threads,
                    base_dir,
                },
            )?;
            for f in &report.files {
                println!("{}", f.display());
            }
            Ok(match report.outcome {
                RunOutcome::Complete => ExitCode::SUCCESS,
                RunOutcome::Runaway => {
                    eprintln!("warning: runaway reached; outputs are partial (see status column)");
                    ExitCode::from(EXIT_RUNAWAY)
                }
            })
        }
        Command::Check { scenario } => {
            let (s, _) = load(&scenario)?;
            print!("{}", scenario::print_scenario(&s));
            Ok(ExitCode::SUCCESS)
        }
        Command::Kms { scenario } => {
            let (s, base_dir) = load(&scenario)?;
            print!("{}", runner::kms_report(&s, &base_dir)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}
