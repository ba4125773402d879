use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use mimobc::harness::{self, fixtures, ExperimentConfig, SampleSpec};
use mimobc::verify;

#[derive(Parser)]
#[command(name = "mimobc", version, about = "Transmit design for fading MIMO broadcast channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an SNR sweep described by a JSON config and write the result CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Draws per user, or "auto".
        #[arg(long)]
        samples: Option<String>,
        /// Result CSV; printed to stdout when neither this nor the config sets one.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Named scenario fixtures.
    Fixtures {
        #[command(subcommand)]
        action: FixturesAction,
    },
    /// Run the reference checks and print PASS/FAIL per criterion.
    VerifyPaper {
        /// Run only these criteria (1-9).
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
}

#[derive(Subcommand)]
enum FixturesAction {
    List,
}

fn run(config: PathBuf, seed: Option<u64>, samples: Option<String>, out: Option<PathBuf>) -> Result<()> {
    let mut cfg = ExperimentConfig::from_file(&config).with_context(|| format!("reading {}", config.display()))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(s) = samples {
        cfg.samples = SampleSpec::parse(&s)?;
    }
    if out.is_some() {
        cfg.output = out;
    }
    let result = harness::run_and_write(&cfg)?;
    if cfg.output.is_none() {
        result.write_csv(std::io::stdout().lock())?;
    }
    Ok(())
}

fn verify_paper(only: Vec<u8>) -> Result<bool> {
    let ids: Vec<u8> = if only.is_empty() { (1..=9).collect() } else { only };
    if let Some(bad) = ids.iter().find(|&&i| !(1..=9).contains(&i)) {
        anyhow::bail!("criterion {bad} does not exist; valid ids are 1-9");
    }
    let mut all = true;
    for id in ids {
        let outcome = verify::run(id);
        println!("{outcome}");
        all &= outcome.passed;
    }
    Ok(all)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = harness::init_workers().map_err(anyhow::Error::from).and_then(|_| match cli.command {
        Command::Run { config, seed, samples, out } => run(config, seed, samples, out).map(|_| true),
        Command::Fixtures { action: FixturesAction::List } => {
            for name in fixtures::NAMES {
                println!("{name}\t{}", fixtures::describe(name).unwrap_or(""));
            }
            Ok(true)
        }
        Command::VerifyPaper { only } => verify_paper(only),
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
