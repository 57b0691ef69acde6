//! A config-driven experiment, as the `smoothlift` binary runs it, with the report
//! printed as JSON lines and the solver trace as CSV.
//!
//! cargo run --release --example run_experiment

use smoothlift::experiment::{emit_plot_data, run, ExperimentConfig, PlotKind};

const CONFIG: &str = r#"
seed = 4
trials = 2
tasks = ["check", "optimize"]

[entry]
kind = "lr"
m = 4
n = 3
r = 2

[point]
regime = "full_rank"

[cost]
kind = "random_quadratic"
convex = true
quartic = 0.0

[check]
directions = 80
w_samples = 80
restarts = 8
fiber_samples = 100
"#;

fn main() -> smoothlift::Result<()> {
    let cfg = ExperimentConfig::from_toml(CONFIG)?;
    let report = run(&cfg)?;
    print!("{}", report.to_jsonl());
    println!("passed: {}", report.passed());
    print!("{}", emit_plot_data(&report, PlotKind::Trace)?);
    Ok(())
}
