//! `tagsim`: run remanence experiments, budget tables, harvests and HB+
//! sessions against simulated RFID tags.

mod commands;
mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use sram_entropy::protocol::{ProtocolProfile, SupplyModel, WaitConvention};

use commands::{AuthArgs, Generation};
use config::{FileConfig, RunConfig};

#[derive(Parser)]
#[command(name = "tagsim", version, about = "SRAM power-up entropy and remanence simulator for passive RFID tags")]
struct Cli {
    /// Global seed; required by every stochastic command.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// TOML config file. Flags take precedence over its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Write output here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// PH word width (16 or 64).
    #[arg(long, global = true)]
    word_bits: Option<u32>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Remanence experiment: per-tag samples, interval averages and logistic fits as CSV.
    Decay {
        #[arg(long, default_value_t = 4)]
        tags: usize,
        /// start:step:end in seconds, inclusive.
        #[arg(long, default_value = "0:5:60")]
        intervals: String,
    },
    /// Harvest/wait budget for a protocol on a tag generation.
    Budget {
        #[arg(long, value_parser = parse_protocol)]
        protocol: ProtocolProfile,
        #[arg(long, value_enum, default_value = "wisp41")]
        generation: Generation,
        #[arg(long, default_value_t = 30)]
        cooldown: u64,
    },
    /// Power-cycled harvests, one uppercase hex line each.
    Harvest {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        cycles: u64,
        /// Seconds without power between cycles.
        #[arg(long, default_value_t = 60.0)]
        off_interval: f64,
        #[arg(long, value_enum, default_value = "wisp41")]
        generation: Generation,
    },
    /// Harvest until a protocol's demand is met, then run the session.
    Auth {
        #[arg(long, value_parser = parse_protocol, default_value = "hb-plus")]
        protocol: ProtocolProfile,
        #[arg(long, value_enum, default_value = "wisp41")]
        generation: Generation,
        #[arg(long, value_parser = parse_supply, default_value = "entropy_capacity")]
        supply_model: SupplyModel,
        #[arg(long, value_parser = parse_convention, default_value = "between")]
        convention: WaitConvention,
        #[arg(long, default_value_t = 30)]
        cooldown: u64,
        /// Also print power events and round records.
        #[arg(long)]
        transcript: bool,
    },
}

fn parse_protocol(s: &str) -> Result<ProtocolProfile, String> {
    s.parse().map_err(|e: sram_entropy::Error| e.to_string())
}

fn parse_supply(s: &str) -> Result<SupplyModel, String> {
    s.parse().map_err(|e: sram_entropy::Error| e.to_string())
}

fn parse_convention(s: &str) -> Result<WaitConvention, String> {
    s.parse().map_err(|e: sram_entropy::Error| e.to_string())
}

/// Writes to a temp file next to `path` and renames it into place, so a
/// failed run never leaves a partial file behind.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("cannot write to {}", dir.display()))?;
    tmp.write_all(contents.as_bytes())?;
    tmp.persist(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let cfg = RunConfig::resolve(file, cli.seed, cli.word_bits, cli.out)?;
    let output = match cli.command {
        Command::Decay { tags, intervals } => commands::decay(&cfg, tags, &intervals)?,
        Command::Budget { protocol, generation, cooldown } => commands::budget(&cfg, protocol, generation, cooldown)?,
        Command::Harvest { cycles, off_interval, generation } => {
            commands::harvest(&cfg, generation, cycles as usize, off_interval)?
        }
        Command::Auth { protocol, generation, supply_model, convention, cooldown, transcript } => {
            let args = AuthArgs { protocol, generation, supply: supply_model, convention, cooldown_s: cooldown, transcript };
            commands::auth(&cfg, &args)?
        }
    };
    match &cfg.output_path {
        Some(path) => write_atomic(path, &output),
        None => {
            std::io::stdout().write_all(output.as_bytes())?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let rendered = e.to_string();
            let first = rendered.lines().next().unwrap_or("invalid arguments");
            eprintln!("tagsim: {first}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("tagsim: error: {msg}");
            ExitCode::FAILURE
        }
    }
}
