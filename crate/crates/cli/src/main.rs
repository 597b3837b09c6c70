use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bellshot::experiment::{
    exact, linspace, run, sweep, sweep_csv_bytes, Experiment, ExperimentConfig, Setup, SweepAxis,
};
use bellshot::output::{json_bytes, shot_csv_bytes, write_atomic};
use bellshot::sampler::RngConfig;
use bellshot::validation::{run_validation, Fault};
use bellshot::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Single-shot Bell analysis for joint unsharp measurements on two qubits.
#[derive(Parser)]
#[command(name = "bellshot", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `outputs.dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Exact statistics, quasi-distribution, S and C values, verdicts.
    Exact(Common),
    /// Sample shots and write per-shot records plus a summary.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        shots: Option<u64>,
        #[arg(long)]
        streams: Option<usize>,
    },
    /// Tabulate single-shot and ensemble quantities over a parameter grid.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        axis: Axis,
        /// Comma-separated grid values.
        #[arg(long, value_delimiter = ',', conflicts_with = "linspace", required_unless_present = "linspace")]
        values: Vec<f64>,
        /// `start,stop,count`.
        #[arg(long, value_delimiter = ',', num_args = 1)]
        linspace: Option<Vec<String>>,
    },
    /// Run internal consistency checks on random admissible setups.
    Validate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, value_enum, hide = true)]
        fault_injection: Option<FaultArg>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Axis {
    Gamma,
    WernerEta,
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    CorruptKernel,
}

enum Failure {
    Config(String),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(msg) => Failure::Config(msg),
            Error::Json(_) => Failure::Config(e.to_string()),
            other => Failure::Other(other.to_string()),
        }
    }
}

fn load(common: &Common) -> Result<(ExperimentConfig, PathBuf), Failure> {
    let text = std::fs::read_to_string(&common.config)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", common.config.display())))?;
    let cfg = ExperimentConfig::from_json(&text)?;
    let dir = common
        .out
        .clone()
        .or_else(|| cfg.outputs.dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    Ok((cfg, dir))
}

fn build(cfg: &ExperimentConfig) -> Result<Experiment, Failure> {
    let exp = Experiment::from_config(cfg)?;
    for w in exp.warnings() {
        eprintln!("warning: {w}");
    }
    Ok(exp)
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    write_atomic(path, bytes)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn parse_linspace(parts: &[String]) -> Result<Vec<f64>, Failure> {
    let bad = || Failure::Config("--linspace expects start,stop,count".into());
    let [start, stop, count] = parts else {
        return Err(bad());
    };
    let start: f64 = start.trim().parse().map_err(|_| bad())?;
    let stop: f64 = stop.trim().parse().map_err(|_| bad())?;
    let count: usize = count.trim().parse().map_err(|_| bad())?;
    Ok(linspace(start, stop, count))
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Exact(common) => {
            let (cfg, dir) = load(&common)?;
            let result = exact(&build(&cfg)?)?;
            write(&dir.join(&cfg.outputs.exact), &json_bytes(&result)?)
        }
        Command::Run {
            common,
            seed,
            shots,
            streams,
        } => {
            let (cfg, dir) = load(&common)?;
            let exp = build(&cfg)?;
            let shots = shots.unwrap_or(cfg.shots);
            let shots = usize::try_from(shots).map_err(|_| Failure::Config(format!("shots: {shots} too large")))?;
            let rng = RngConfig::new(seed.unwrap_or(cfg.seed), streams.unwrap_or(cfg.streams))
                .map_err(|e| Failure::Config(format!("streams: {e}")))?;
            let out = run(&exp, shots, &rng)?;
            write(&dir.join(&cfg.outputs.shots), &shot_csv_bytes(&out.records))?;
            write(&dir.join(&cfg.outputs.summary), &json_bytes(&out.summary)?)
        }
        Command::Sweep {
            common,
            axis,
            values,
            linspace,
        } => {
            let (cfg, dir) = load(&common)?;
            let base = Setup::from_config(&cfg)?;
            let grid = match linspace {
                Some(parts) => parse_linspace(&parts)?,
                None => values,
            };
            let axis = match axis {
                Axis::Gamma => SweepAxis::Gamma,
                Axis::WernerEta => SweepAxis::WernerEta,
            };
            let rows = sweep(&base, axis, &grid)?;
            write(&dir.join(&cfg.outputs.sweep), &sweep_csv_bytes(&rows))
        }
        Command::Validate {
            seed,
            trials,
            fault_injection,
        } => {
            let fault = fault_injection.map(|FaultArg::CorruptKernel| Fault::CorruptKernel);
            let report = run_validation(seed, trials, fault);
            println!("{}", serde_json::to_string_pretty(&report).map_err(Error::from)?);
            if report.passed() {
                Ok(())
            } else {
                Err(Failure::Other(format!("{} of {} checks failed", report.failures.len(), report.checks)))
            }
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
