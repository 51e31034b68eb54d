use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use postdenit::harness::{
    calibrate_classical, compare, run_scenario, write_combined_csv, CalibrationOptions, RunSummary, ScenarioSpec,
};
use postdenit::influent::write_timeseries;
use postdenit::{Error, Result};

#[derive(Parser)]
#[command(name = "postdenit", version, about = "Post-denitrification biofilter dosing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario; writes the time series CSV and a summary JSON.
    Simulate {
        config: PathBuf,
        /// Time series output (default: run.output.csv or <config>.csv).
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Summary output (default: run.output.summary or <config>.summary.json).
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Run two scenarios on the same influent and compare them.
    Compare {
        config_a: PathBuf,
        config_b: PathBuf,
        /// Output prefix for <prefix>.report.json and <prefix>.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit the feedforward coefficient K to a target mean effluent nitrite.
    Calibrate {
        config: PathBuf,
        #[arg(long)]
        target: f64,
        #[arg(long, default_value_t = CalibrationOptions::default().k_min)]
        k_min: f64,
        #[arg(long, default_value_t = CalibrationOptions::default().k_max)]
        k_max: f64,
        #[arg(long, default_value_t = CalibrationOptions::default().tolerance)]
        tol: f64,
    },
    /// Write the scenario's influent as CSV, one row per sensor period.
    GenInfluent {
        config: PathBuf,
        /// Output file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn sibling(config: &Path, suffix: &str) -> PathBuf {
    let stem = config.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
    config.with_file_name(format!("{stem}{suffix}"))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config, csv, summary } => {
            let spec = ScenarioSpec::load(&config)?;
            let result = run_scenario(&spec)?;
            let csv = csv.or(spec.run.output.csv.clone()).unwrap_or_else(|| sibling(&config, ".csv"));
            let summary_path = summary
                .or(spec.run.output.summary.clone())
                .unwrap_or_else(|| sibling(&config, ".summary.json"));
            result.write_csv(create(&csv)?)?;
            let doc = serde_json::json!({
                "summary": RunSummary::of(&result)?,
                "provenance": result.provenance,
                "backwash_times": result.backwash_times,
                "mass_balance": result.mass_balance,
            });
            write_json(&summary_path, &doc)?;
            info!("wrote {} and {}", csv.display(), summary_path.display());
            println!("{}", serde_json::to_string_pretty(&doc["summary"])?);
        }
        Command::Compare { config_a, config_b, out } => {
            let (spec_a, spec_b) = (ScenarioSpec::load(&config_a)?, ScenarioSpec::load(&config_b)?);
            let (ra, rb) = std::thread::scope(|s| {
                let a = s.spawn(|| run_scenario(&spec_a));
                let b = run_scenario(&spec_b);
                (a.join().expect("scenario thread panicked"), b)
            });
            let (ra, rb) = (ra?, rb?);
            let report = compare(&ra, &rb)?;
            let prefix = out.unwrap_or_else(|| {
                let b = config_b.file_stem().and_then(|s| s.to_str()).unwrap_or("b");
                sibling(&config_a, &format!("_vs_{b}"))
            });
            let with_ext = |ext: &str| {
                let mut p = prefix.clone().into_os_string();
                p.push(ext);
                PathBuf::from(p)
            };
            write_json(&with_ext(".report.json"), &report)?;
            write_combined_csv(&ra, &rb, create(&with_ext(".csv"))?)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Calibrate {
            config,
            target,
            k_min,
            k_max,
            tol,
        } => {
            let spec = ScenarioSpec::load(&config)?;
            spec.validate()?;
            let opts = CalibrationOptions {
                k_min,
                k_max,
                tolerance: tol,
                ..CalibrationOptions::default()
            };
            let cal = calibrate_classical(&spec, target, &opts)?;
            println!("{}", serde_json::to_string_pretty(&cal)?);
        }
        Command::GenInfluent { config, out } => {
            let spec = ScenarioSpec::load(&config)?;
            spec.validate()?;
            let source = spec.influent_source()?;
            let n = (spec.run.duration / spec.sensor.dt_sample).round() as u64;
            let times = (0..=n).map(|i| i as f64 * spec.sensor.dt_sample);
            match out {
                Some(path) => write_timeseries(create(&path)?, source.as_ref(), times)?,
                None => write_timeseries(io::stdout().lock(), source.as_ref(), times)?,
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match &e {
                Error::NumericalFault { .. } => 3,
                _ => e.exit_code(),
            };
            ExitCode::from(code as u8)
        }
    }
}
