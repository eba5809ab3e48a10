use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use momentum_lab::cli::{
    compare, compare_csv, fit_rate_only, load_config, output_dir, run_experiment, to_json, verify_assumptions, CliError,
    ExperimentConfig, Metric,
};

/// Stochastic optimization laboratory.
#[derive(Parser)]
#[command(name = "lab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    /// Base seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Ensemble size, overriding the config.
    #[arg(long)]
    runs: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write trajectory.csv and summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run several experiments on one objective and rank them by a metric.
    Compare {
        #[arg(long = "config", required = true)]
        configs: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = Metric::DecayExponent)]
        metric: Metric,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Estimate the assumption constants and report which theorems apply.
    VerifyAssumptions {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Fit the decay exponent of the mean squared gradient norm.
    FitRate {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
}

fn load(path: &Path, o: &Overrides) -> Result<ExperimentConfig, CliError> {
    let mut cfg = load_config(path)?;
    if let Some(seed) = o.seed {
        cfg.seed = seed;
    }
    if let Some(runs) = o.runs {
        cfg.runs = runs;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_one(out: Option<&Path>, name: &str, body: &str) -> Result<(), CliError> {
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Run { config, overrides } => {
            let cfg = load(&config, &overrides)?;
            let dir = output_dir(&cfg, overrides.out.as_deref());
            let result = run_experiment(&cfg, &dir)?;
            println!("wrote {}", dir.display());
            if !result.summary.passed {
                eprintln!("{}", to_json(&result.summary.failures).trim_end());
                return Ok(1);
            }
            Ok(0)
        }
        Command::Compare { configs, metric, overrides } => {
            let loaded = configs
                .iter()
                .map(|p| Ok((p.display().to_string(), load(p, &overrides)?)))
                .collect::<Result<Vec<_>, CliError>>()?;
            let table = compare_csv(&compare(&loaded, metric)?, metric);
            write_one(overrides.out.as_deref(), "compare.csv", &table)?;
            print!("{table}");
            Ok(0)
        }
        Command::VerifyAssumptions { config, overrides } => {
            let report = to_json(&verify_assumptions(&load(&config, &overrides)?)?);
            write_one(overrides.out.as_deref(), "assumptions.json", &report)?;
            print!("{report}");
            Ok(0)
        }
        Command::FitRate { config, overrides } => {
            let fit = to_json(&fit_rate_only(&load(&config, &overrides)?)?);
            write_one(overrides.out.as_deref(), "rate_fit.json", &fit)?;
            print!("{fit}");
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
