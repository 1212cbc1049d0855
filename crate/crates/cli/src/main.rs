//! `metascreen` command-line tool.
//!
//! Exit codes: 0 when every tolerance is met, 2 when a run completed but a
//! tolerance failed, 1 on any error.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand};

use commands::Outcome;
use config::RunConfig;

#[derive(Parser)]
#[command(name = "metascreen", version, about = "Two-sided acoustic metascreen design and verification")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Comma-separated frequencies in Hz.
    #[arg(long, global = true, value_delimiter = ',')]
    freq: Vec<f64>,

    /// Output root; runs go to <out>/<command>/<config-hash>/.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for the random IASA start (zero phase when absent).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory for cached cell tables [default: <out>/cache].
    #[arg(long, global = true)]
    cache: Option<PathBuf>,

    /// Reject inputs that would otherwise be adapted with a warning.
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Tabulate cell responses and report phase coverage.
    Sweep,
    /// Design a line array (focusing, diffusion, steering) and predict its fields.
    Design,
    /// Design a two-sided hologram panel and verify it.
    Hologram,
    /// Propagate a stored field to another plane.
    Propagate,
}

fn apply_overrides(cli: &Cli, cfg: &mut RunConfig) -> Result<()> {
    if let Some(seed) = cli.seed {
        cfg.seed = Some(seed);
    }
    if cli.strict {
        cfg.strict = true;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = Some(out.clone());
    }
    if let Some(cache) = &cli.cache {
        cfg.cache_dir = Some(cache.clone());
    }
    if cli.freq.is_empty() {
        return Ok(());
    }
    if cli.freq.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
        bail!("--freq: frequencies must be positive");
    }
    let mut sorted = cli.freq.clone();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    match cli.command {
        Cmd::Sweep => cfg.grid.frequencies = sorted,
        Cmd::Design => {
            cfg.design.design_frequency = cli.freq[0];
            cfg.design.eval_frequencies = sorted;
        }
        Cmd::Hologram => {
            cfg.hologram.frequency = cli.freq[0];
            cfg.hologram.eval_frequencies = cli.freq[1..].to_vec();
        }
        Cmd::Propagate => {
            if cli.freq.len() != 1 {
                bail!("--freq: propagate takes a single frequency");
            }
            cfg.propagate.frequency = cli.freq[0];
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<Outcome> {
    let mut cfg = match &cli.config {
        Some(path) => config::load(path)?,
        None => RunConfig::default(),
    };
    apply_overrides(cli, &mut cfg)?;
    let out = cfg
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("metascreen-out"));
    let cache = cfg.cache_dir.clone().unwrap_or_else(|| out.join("cache"));
    match cli.command {
        Cmd::Sweep => commands::sweep::run(&cfg, &out, &cache),
        Cmd::Design => commands::design::run(&cfg, &out, &cache),
        Cmd::Hologram => commands::hologram::run(&cfg, &out, &cache),
        Cmd::Propagate => commands::propagate::run(&cfg, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // clap's own code for usage errors is 2, which is reserved here
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(Outcome::Met) => ExitCode::SUCCESS,
        Ok(Outcome::ToleranceFailed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
