//! Command-line interface for the elicitation harness.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use econprobe_cli::config::RunConfig;
use econprobe_cli::run::{replay_fit, run, RunOptions};
use econprobe_cli::validate::validate_synthetic;

#[derive(Parser)]
#[command(name = "econprobe", version, about = "Elicit economic behavior from text subjects and fit utility functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Path to the run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated subject ids to include.
    #[arg(long, value_delimiter = ',')]
    subjects: Option<Vec<String>>,
    /// Comma-separated game kinds to include
    /// (ultimatum_proposer, ultimatum_responder, gambling, waiting).
    #[arg(long, value_delimiter = ',')]
    games: Option<Vec<String>>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline: sample, parse, competence-test, fit, report.
    Run {
        #[command(flatten)]
        common: CommonArgs,
        /// Render prompts only; no sampling.
        #[arg(long)]
        dry_run: bool,
    },
    /// Run sampling and competence tests only (no estimation).
    Competence {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Re-fit utility models from persisted transcripts (no network).
    Fit {
        #[command(flatten)]
        common: CommonArgs,
        /// Directory holding per-subject transcript files.
        #[arg(long)]
        transcripts: PathBuf,
    },
    /// Re-render the report from an existing fits document.
    Report {
        #[command(flatten)]
        common: CommonArgs,
        /// Path to fits.json from a previous run.
        #[arg(long)]
        fits: PathBuf,
    },
    /// Round-trip the pipeline on synthetic agents with known utilities.
    ValidateSynthetic {
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

fn options_from(common: &CommonArgs, dry_run: bool, estimate: bool) -> RunOptions {
    RunOptions {
        subjects_filter: common.subjects.clone(),
        games_filter: common.games.clone(),
        dry_run,
        estimate,
        seed_override: common.seed,
        out_override: common.out.clone(),
        base_dir: common
            .config
            .parent()
            .map(|p| p.to_path_buf())
            .unwrap_or_else(|| PathBuf::from(".")),
    }
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { common, dry_run } => {
            let config = RunConfig::load(&common.config)?;
            let options = options_from(&common, dry_run, true);
            let artifacts = run(&config, &options)?;
            println!("wrote {} files to {}", artifacts.files.len(), artifacts.out_dir.display());
            for report in &artifacts.competence {
                println!(
                    "competence {} {}: {}",
                    report.subject_id,
                    report.game.as_str(),
                    if report.pass { "pass" } else { "fail" }
                );
            }
            for failure in &artifacts.failures {
                eprintln!("subject failed: {failure}");
            }
            Ok(if artifacts.failures.is_empty() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Competence { common } => {
            let config = RunConfig::load(&common.config)?;
            let options = options_from(&common, false, false);
            let artifacts = run(&config, &options)?;
            for report in &artifacts.competence {
                println!(
                    "competence {} {}: {} (validity {:.2})",
                    report.subject_id,
                    report.game.as_str(),
                    if report.pass { "pass" } else { "fail" },
                    report.validity_fraction
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Fit { common, transcripts } => {
            let config = RunConfig::load(&common.config)?;
            let options = options_from(&common, false, true);
            let fits = replay_fit(&config, &transcripts, &options)?;
            let out_dir = common.out.unwrap_or_else(|| PathBuf::from("."));
            std::fs::create_dir_all(&out_dir)?;
            let path = out_dir.join("fits.json");
            std::fs::write(&path, serde_json::to_string_pretty(&fits)?)?;
            println!("wrote {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { common, fits } => {
            let config = RunConfig::load(&common.config)?;
            let text = std::fs::read_to_string(&fits)
                .with_context(|| format!("reading {}", fits.display()))?;
            let fits: econprobe_cli::run::FitsDocument = serde_json::from_str(&text)?;
            let out_dir = common.out.unwrap_or_else(|| PathBuf::from("."));
            std::fs::create_dir_all(&out_dir)?;
            let files = econprobe_cli::report::emit_report(
                &out_dir,
                &fits,
                &[],
                &[],
                &config.human_reference,
            )?;
            println!("wrote {} report files to {}", files.len(), out_dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::ValidateSynthetic { seed } => {
            let mut all_pass = true;
            for check in validate_synthetic(seed) {
                println!(
                    "{} {}: {}",
                    if check.pass { "PASS" } else { "FAIL" },
                    check.name,
                    check.detail
                );
                all_pass &= check.pass;
            }
            Ok(if all_pass { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}
