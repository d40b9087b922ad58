use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::SeedableRng;

use replearn_core::harness::{
    calibrate_od_threshold, preset, presets, run_experiment, write_outputs, ExperimentConfig,
};
use replearn_core::rng::StreamRng;
use replearn_core::Error;

#[derive(Parser)]
#[command(name = "replearn", version, about = "Sequential representation-learning bandit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its trace CSV and summary JSON.
    Run {
        /// TOML config; its keys override the preset, if one is given.
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        realizations: Option<usize>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        preset: Option<String>,
    },
    /// Print the OD threshold for a quantile of the noise-only statistic.
    CalibrateOd {
        #[arg(long)]
        n_od: usize,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[arg(long, default_value_t = 0.975)]
        quantile: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// List preset names, or print one as TOML.
    ListPresets {
        #[arg(long)]
        show: Option<String>,
    },
}

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

fn load(
    config: Option<PathBuf>,
    preset_name: Option<String>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    realizations: Option<usize>,
    workers: Option<usize>,
) -> Result<ExperimentConfig, Error> {
    let base = match &preset_name {
        Some(name) => preset(name).ok_or_else(|| Error::Config(format!("unknown preset `{name}`")))?,
        None => ExperimentConfig::default(),
    };
    let mut cfg = match &config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            base.merged_with_toml(&text)?
        }
        None if preset_name.is_some() => base,
        None => return Err(Error::Config("give a config file or --preset".into())),
    };
    if out.is_some() {
        cfg.out = out;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(n) = realizations {
        cfg.realizations = n;
    }
    if let Some(w) = workers {
        cfg.workers = w;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            config,
            out,
            seed,
            realizations,
            workers,
            preset,
        } => {
            let cfg = match load(config, preset, out, seed, realizations, workers) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            let csv = cfg
                .out
                .clone()
                .unwrap_or_else(|| PathBuf::from(format!("{}.csv", cfg.experiment_id)));
            let output = match run_experiment(&cfg) {
                Ok(o) => o,
                Err(e @ Error::Config(_)) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_RUNTIME);
                }
            };
            match write_outputs(&output, &csv) {
                Ok(summary) => println!("wrote {} and {}", csv.display(), summary.display()),
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::FAILURE;
                }
            }
            if output.failed() {
                eprintln!(
                    "error: {} of {} realizations failed",
                    output.failures.len(),
                    cfg.realizations
                );
                return ExitCode::from(EXIT_RUNTIME);
            }
            ExitCode::SUCCESS
        }
        Command::CalibrateOd {
            n_od,
            trials,
            quantile,
            seed,
        } => match calibrate_od_threshold(n_od, trials, quantile, &mut StreamRng::seed_from_u64(seed)) {
            Ok(xi) => {
                println!("{xi}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_CONFIG)
            }
        },
        Command::ListPresets { show } => match show {
            None => {
                for p in presets() {
                    println!("{}\t{}", p.experiment_id, p.kind.name());
                }
                ExitCode::SUCCESS
            }
            Some(name) => match preset(&name) {
                Some(p) => {
                    print!("{}", p.to_toml_string());
                    ExitCode::SUCCESS
                }
                None => {
                    eprintln!("error: unknown preset `{name}`");
                    ExitCode::from(EXIT_CONFIG)
                }
            },
        },
    }
}
