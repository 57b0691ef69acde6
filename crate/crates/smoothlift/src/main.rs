use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use smoothlift::experiment::{emit_plot_data, run, run_suite, ExperimentConfig, PlotKind, Task};

#[derive(Parser)]
#[command(name = "smoothlift", version, about = "Check lift properties, synthesize witness costs and run solver experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment file (TOML); required for every subcommand except `suite`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Report path (JSON lines); CSV plot data goes next to it. Defaults to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the trial count of the config.
    #[arg(long, global = true)]
    trials: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Verdicts for "local=>local", "1=>1" and "2=>1" with the full condition chain.
    Check,
    /// Witness costs for failing properties, plus the gap of the configured cost.
    Witness,
    /// Second-order solver runs with downstream stationarity gaps.
    Optimize,
    /// Finite-difference slopes of the Taylor residuals.
    Taylor,
    /// Pathological sequences with best fiber-sample distances.
    SlpEvidence,
    /// The acceptance matrix over the whole catalog.
    Suite,
}

impl Command {
    fn task(self) -> Option<Task> {
        Some(match self {
            Self::Check => Task::Check,
            Self::Witness => Task::Witness,
            Self::Optimize => Task::Optimize,
            Self::Taylor => Task::Taylor,
            Self::SlpEvidence => Task::SlpEvidence,
            Self::Suite => return None,
        })
    }
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), String> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_stem().unwrap_or_default().to_os_string();
    name.push(suffix);
    path.with_file_name(name)
}

fn main_inner(cli: Cli) -> Result<bool, String> {
    let start = Instant::now();
    let Some(task) = cli.command.task() else {
        let report = run_suite(cli.seed.unwrap_or(0), cli.trials.unwrap_or(3)).map_err(|e| e.to_string())?;
        write_out(cli.out.as_deref(), &report.to_jsonl())?;
        for name in report.failed_cases() {
            eprintln!("failed: {name}");
        }
        eprintln!("suite: {} cases in {:.1}s", report.cases.len(), start.elapsed().as_secs_f64());
        return Ok(report.passed());
    };
    let path = cli.config.as_deref().ok_or("--config is required")?;
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut cfg = ExperimentConfig::from_toml(&text).map_err(|e| e.to_string())?;
    cfg.tasks = vec![task];
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.trials {
        cfg.trials = t;
    }
    if cli.out.is_some() {
        cfg.out = cli.out.clone();
    }
    let report = run(&cfg).map_err(|e| e.to_string())?;
    write_out(cfg.out.as_deref(), &report.to_jsonl())?;
    if let Some(out) = &cfg.out {
        let plot = match task {
            Task::Taylor => Some((PlotKind::Taylor, "taylor.csv")),
            Task::Optimize => Some((PlotKind::Trace, "trace.csv")),
            _ => None,
        };
        if let Some((kind, suffix)) = plot {
            match emit_plot_data(&report, kind) {
                Ok(csv) => write_out(Some(&sibling(out, &format!(".{suffix}"))), &csv)?,
                Err(e) => eprintln!("{e}"),
            }
        }
    }
    for t in report.trials.iter().filter(|t| !t.ok) {
        eprintln!("trial {} failed: {:?}", t.trial, t.errors);
    }
    eprintln!("{} trials in {:.1}s", report.trials.len(), start.elapsed().as_secs_f64());
    Ok(report.passed())
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
