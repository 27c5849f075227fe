//! Batch command line for the IRS channel-estimation simulator.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use irs_ce::config::{watts_to_dbm, Preset, SystemConfig};
use irs_ce::harness::{run_sweep, SweepAxis};

#[derive(Parser)]
#[command(
    name = "irs-ce",
    version,
    about = "Compressive-sensing channel estimation for IRS-aided mmWave OFDM"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo sweep and write the CSV reports.
    Run {
        /// TOML config file; keys override the preset.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Base preset (`paper` or `small`); overrides the file's `preset` key.
        #[arg(long)]
        preset: Option<Preset>,
        /// Sweep axis: `ptx`, `rp` or `rdic`.
        #[arg(long, default_value = "ptx")]
        sweep: SweepAxis,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Master seed; overrides the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (defaults to all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Check a config and print its derived quantities.
    Validate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<Preset>,
    },
}

fn load(config: Option<&PathBuf>, preset: Option<Preset>) -> Result<SystemConfig> {
    let cfg = match config {
        Some(path) => SystemConfig::from_file(path, preset)
            .with_context(|| format!("loading {}", path.display()))?,
        None => SystemConfig::preset(preset.unwrap_or(Preset::Paper)),
    };
    Ok(cfg)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            preset,
            sweep,
            out,
            seed,
            threads,
        } => {
            let mut cfg = load(config.as_ref(), preset)?;
            if let Some(seed) = seed {
                cfg.master_seed = seed;
            }
            cfg.validate()?;
            if let Some(n) = threads {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .context("configuring the thread pool")?;
            }
            let report = run_sweep(&cfg, sweep)?;
            let path = report.write(&out)?;
            print!("{}", report.summary_csv());
            eprintln!("wrote {}", path.display());
        }
        Command::Validate { config, preset } => {
            let cfg = load(config.as_ref(), preset)?;
            cfg.validate()?;
            let sigma2 = cfg.noise_power();
            let (gmx, gmy) = SystemConfig::dict_grid(cfg.bs(), cfg.dict_ratio);
            let (gnx, gny) = SystemConfig::dict_grid(cfg.irs(), cfg.dict_ratio);
            println!("config ok (hash {})", cfg.config_hash());
            println!(
                "sigma_n2      = {sigma2:.6e} W ({:.3} dBm)",
                watts_to_dbm(sigma2)
            );
            println!("epsilon       = {:.6e} W", cfg.epsilon());
            println!("M, N          = {}, {}", cfg.bs().len(), cfg.irs().len());
            println!("N_P           = {}", cfg.pilots());
            println!("G_M           = {} ({gmx}x{gmy})", gmx * gmy);
            println!("G_N           = {} ({gnx}x{gny})", gnx * gny);
            println!("K, N_CP       = {}, {}", cfg.subcarriers, cfg.cp_len);
            println!("trials        = {}", cfg.trials);
        }
    }
    Ok(())
}
