use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lowrank::cli::{parse_config, run_bode, run_experiment, run_identify, run_simulate, run_spectrum, RunOptions};
use lowrank::spectra::default_grid;
use lowrank::{Error, Result};

#[derive(Parser)]
#[command(name = "lowrank", version, about = "Simulate and identify low-rank stationary processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Seed override; defaults to the first seed of the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to the config's `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 512)]
    freq_points: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one realization and write data.csv and noise.csv.
    Simulate(Common),
    /// Identify from an existing data.csv.
    Identify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
    },
    /// Spectrum of the configured factor with rank and channel checks.
    Spectrum(Common),
    /// Full pipeline over all seeds, or over derived seeds with --replications.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        replications: Option<usize>,
    },
    /// Bode tables of the configured transfer matrices.
    Bode(Common),
}

fn out_dir(c: &Common, fallback: Option<&PathBuf>) -> Result<PathBuf> {
    c.out
        .clone()
        .or_else(|| fallback.cloned())
        .ok_or_else(|| Error::Config("no output directory: pass --out or set output_dir".into()))
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(c) => {
            let cfg = parse_config(&c.config)?;
            let out = out_dir(&c, cfg.output_dir.as_ref())?;
            let data = run_simulate(&cfg, c.seed.unwrap_or(cfg.seeds[0]), &out)?;
            println!("wrote {} samples to {}", data.y.len(), out.join("data.csv").display());
        }
        Command::Identify { common: c, data } => {
            let cfg = parse_config(&c.config)?;
            let freqs = default_grid(c.freq_points);
            let rep = run_identify(&cfg, &data, c.seed.unwrap_or(cfg.seeds[0]), &freqs, c.out.as_deref())?;
            println!("{}", serde_json::to_string_pretty(&rep.metrics)?);
        }
        Command::Spectrum(c) => {
            let cfg = parse_config(&c.config)?;
            let out = out_dir(&c, cfg.output_dir.as_ref())?;
            let rep = run_spectrum(&cfg, c.seed.unwrap_or(cfg.seeds[0]), &default_grid(c.freq_points), Some(&out))?;
            println!("{}", serde_json::to_string_pretty(&rep.metrics)?);
        }
        Command::Run { common: c, replications } => {
            let cfg = parse_config(&c.config)?;
            let opts = RunOptions { out: c.out, replications, seed: c.seed, freq_points: Some(c.freq_points) };
            let report = run_experiment(&cfg, &opts)?;
            for (k, s) in &report.summary {
                println!("{k:32} median {:>12.6} iqr {:>12.6} (n={})", s.median, s.iqr, s.count);
            }
        }
        Command::Bode(c) => {
            let cfg = parse_config(&c.config)?;
            let out = out_dir(&c, cfg.output_dir.as_ref())?;
            for path in run_bode(&cfg, &default_grid(c.freq_points), &out)? {
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
