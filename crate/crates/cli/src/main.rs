use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rsprecode::harness::{preset, run_experiment, write_outputs, ExperimentConfig, RunOptions};
use rsprecode::selftest;

/// Log filter variable, e.g. `RS_PRECODE_LOG=debug`.
const LOG_ENV: &str = "RS_PRECODE_LOG";

#[derive(Parser)]
#[command(name = "rs-precode", version, about = "Rate-splitting precoder design experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write CSV, precoders and manifest.
    Run {
        /// TOML config. With --preset it overrides the preset key by key.
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        /// Worker threads for trials.
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the fast acceptance checks.
    Selftest,
}

fn load_config(path: Option<&PathBuf>, preset_name: Option<&str>) -> Result<ExperimentConfig> {
    let mut value = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str::<toml::Value>(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => toml::Value::Table(Default::default()),
    };
    if let Some(name) = preset_name {
        preset(name)?;
        if let toml::Value::Table(t) = &mut value {
            t.insert("preset".into(), toml::Value::String(name.into()));
        }
    } else if path.is_none() {
        bail!("give a config file, --preset NAME, or both");
    }
    Ok(ExperimentConfig::from_value(value)?)
}

fn run(config: Option<PathBuf>, preset_name: Option<String>, jobs: Option<usize>, out: PathBuf, seed: Option<u64>) -> Result<bool> {
    let mut cfg = load_config(config.as_ref(), preset_name.as_deref())?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if jobs == Some(0) {
        bail!("--jobs must be at least 1");
    }
    log::info!("{}: {} trials, config hash {}", cfg.name, cfg.trials, cfg.hash());
    let output = run_experiment(&cfg, &RunOptions { jobs, ..Default::default() })?;
    let paths = write_outputs(&output, &out)?;
    for row in &output.summary {
        println!("{:<22} P={:>5.1} dB sigma2={:.2}  mean {:>8.4}  std {:.4}  n={}", row.scheme, row.p_db, row.sigma2, row.mean, row.std, row.count);
    }
    let bad = output.records.iter().filter(|r| r.status != rsprecode::harness::RowStatus::Ok).count();
    println!("wrote {} ({} rows, {bad} not ok) in {:.1} s", paths.csv.display(), output.records.len(), output.elapsed.as_secs_f64());
    Ok(bad == 0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, preset, jobs, out, seed } => run(config, preset, jobs, out, seed),
        Command::Selftest => selftest::fast_suite().map_err(Into::into).map(|checks| {
            for c in &checks {
                println!("{c}");
            }
            checks.iter().all(|c| c.pass)
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
