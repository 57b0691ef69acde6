//! Config-driven experiment runner behind the `smoothlift` binary.
//!
//! A run builds one catalog entry, draws `trials` points from the point spec and applies
//! the requested tasks to each. Trials run in parallel on rayon with per-trial seeds
//! from [`trial_seed`]; records are assembled in trial order, so a report is a pure
//! function of `(config, seed)`. Timing never enters a report.
//!
//! Reports are JSON lines: one `config` record, one `trial` record per trial and a
//! closing `summary` record. The schema is documented in `docs/schemas.md`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{build, trial_seed, CatalogEntry, EntryId, Property};
use crate::cones::STATIONARY_TOL;
use crate::checker::{check_chain, check_point, slp_evidence, CheckSettings, PropertyReport, SlpEvidence, Verdict, WitnessCost};
use crate::error::{invalid, LiftError, Result};
use crate::numerics::{derive_seed, gaussian_matrix, gaussian_vector, rng, Matrix, Vector};
use crate::optimize::{downstream_stationarity, fd_validate, find_second_order_point, grad_g, Cost, FdReport, SolverParams, SolverResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Check,
    Witness,
    Optimize,
    Taylor,
    SlpEvidence,
}

impl Task {
    pub const ALL: [Task; 5] = [Task::Check, Task::Witness, Task::Optimize, Task::Taylor, Task::SlpEvidence];
}

/// Where the trial points come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum PointSpec {
    /// The same explicit point for every trial.
    Coords { coords: Vec<f64> },
    /// A fresh point of the named regime per trial.
    Regime { regime: String },
    /// A fresh point of a randomly chosen regime per trial.
    Random { random: u64 },
}

impl Default for PointSpec {
    fn default() -> Self {
        Self::Random { random: 0 }
    }
}

/// Cost used by the `optimize`, `taylor` and `witness` tasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CostSpec {
    Linear { w: Vec<f64> },
    QuadraticShift { w: Vec<f64>, alpha: f64, center: Vec<f64> },
    /// `½xᵀAx + bᵀx + quartic/4 Σ x⁴` with Gaussian `A`, `b` drawn per trial.
    RandomQuadratic {
        #[serde(default)]
        convex: bool,
        #[serde(default = "default_quartic")]
        quartic: f64,
    },
}

fn default_quartic() -> f64 {
    0.5
}

impl Default for CostSpec {
    fn default() -> Self {
        Self::RandomQuadratic { convex: false, quartic: default_quartic() }
    }
}

impl CostSpec {
    pub fn build(&self, dim: usize, seed: u64) -> Result<Cost> {
        let check_len = |v: &[f64], what: &str| {
            if v.len() == dim {
                Ok(())
            } else {
                invalid(format!("cost {what} has length {}, the set lives in R^{dim}", v.len()))
            }
        };
        Ok(match self {
            Self::Linear { w } => {
                check_len(w, "w")?;
                Cost::linear(Vector::from_column_slice(w))
            }
            Self::QuadraticShift { w, alpha, center } => {
                check_len(w, "w")?;
                check_len(center, "center")?;
                Cost::quadratic_shift(Vector::from_column_slice(w), *alpha, Vector::from_column_slice(center))
            }
            Self::RandomQuadratic { convex, quartic } => random_quadratic(dim, *convex, *quartic, seed),
        })
    }
}

/// Gaussian quadratic-plus-quartic cost; `convex` makes `A` positive definite.
pub fn random_quadratic(dim: usize, convex: bool, quartic: f64, seed: u64) -> Cost {
    let mut g = rng(seed);
    let a = gaussian_matrix(&mut g, dim, dim);
    let a: Matrix = if convex {
        &a * a.transpose() / dim as f64 + Matrix::identity(dim, dim) * 0.1
    } else {
        (&a + a.transpose()) / 2.0
    };
    Cost::quadratic_quartic(a, gaussian_vector(&mut g, dim), quartic)
}

fn default_trials() -> usize {
    1
}

fn default_tasks() -> Vec<Task> {
    vec![Task::Check]
}

/// Parsed experiment file (TOML).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub entry: EntryId,
    #[serde(default)]
    pub point: PointSpec,
    #[serde(default = "default_tasks")]
    pub tasks: Vec<Task>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<CostSpec>,
    #[serde(default)]
    pub check: CheckSettings,
    #[serde(default)]
    pub solver: SolverParams,
}

impl ExperimentConfig {
    pub fn new(entry: EntryId, point: PointSpec, tasks: Vec<Task>) -> Self {
        Self {
            entry,
            point,
            tasks,
            trials: 1,
            seed: 0,
            out: None,
            cost: None,
            check: CheckSettings::default(),
            solver: SolverParams::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| LiftError::InvalidInput(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| LiftError::InvalidInput(format!("config: {e}")))
    }

    /// Builds the entry and checks the point spec, tasks and counts against it.
    pub fn validate(&self) -> Result<CatalogEntry> {
        let entry = build(&self.entry)?;
        if self.trials == 0 {
            return invalid("trials must be at least 1");
        }
        if self.tasks.is_empty() {
            return invalid("no tasks requested");
        }
        self.solver.validate()?;
        match &self.point {
            PointSpec::Regime { regime } if !entry.regimes().contains(&regime.as_str()) => {
                return invalid(format!("regime {regime:?} is not one of {:?} for {}", entry.regimes(), self.entry.name()));
            }
            PointSpec::Coords { coords } => {
                entry.lift.manifold.check_point(&Vector::from_column_slice(coords))?;
            }
            _ => {}
        }
        Ok(entry)
    }

    fn wants(&self, t: Task) -> bool {
        self.tasks.contains(&t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostGap {
    pub grad_norm_upstairs: f64,
    pub downstream_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessRecord {
    pub witnesses: Vec<WitnessCost>,
    pub all_valid: bool,
    /// Gap of the configured cost at this point, if a cost was given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cost_gap: Option<CostGap>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeRecord {
    pub start: Vec<f64>,
    pub converged: bool,
    pub result: SolverResult,
    pub downstream_gap: f64,
    /// "2⇒1" verdict at the final point.
    pub w_condition: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlpRecord {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evidence: Option<SlpEvidence>,
    pub supports_failure: bool,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regime: Option<String>,
    pub point: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub check: Option<PropertyReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimize: Option<OptimizeRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub taylor: Option<FdReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slp: Option<SlpRecord>,
    /// Task errors, as messages.
    pub errors: Vec<String>,
    /// Expected verdicts matched, witnesses verified, Taylor slopes passed and converged
    /// runs with "2=>1" ended stationary downstairs.
    pub ok: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictCounts {
    pub holds: usize,
    pub fails: usize,
    pub inconclusive: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub trials: usize,
    pub failed_trials: Vec<usize>,
    pub verdict_mismatches: usize,
    pub verdicts: BTreeMap<String, VerdictCounts>,
    pub witnesses: usize,
    pub invalid_witnesses: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub taylor_min_grad_slope: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub taylor_min_hess_slope: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimize_converged: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimize_min_gap: Option<f64>,
    pub errors: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub trials: Vec<TrialRecord>,
    pub summary: Summary,
}

#[derive(Serialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum Line<'a> {
    Config {
        #[serde(skip_serializing_if = "Option::is_none")]
        case: Option<&'a str>,
        config: &'a ExperimentConfig,
    },
    Trial {
        #[serde(skip_serializing_if = "Option::is_none")]
        case: Option<&'a str>,
        #[serde(flatten)]
        trial: &'a TrialRecord,
    },
    Summary {
        #[serde(skip_serializing_if = "Option::is_none")]
        case: Option<&'a str>,
        #[serde(flatten)]
        summary: &'a Summary,
    },
}

fn push_line(out: &mut String, line: &Line) {
    out.push_str(&serde_json::to_string(line).expect("report records serialize"));
    out.push('\n');
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.summary.passed
    }

    /// JSON-lines rendering.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        self.write_lines(&mut out, None);
        out
    }

    fn write_lines(&self, out: &mut String, case: Option<&str>) {
        push_line(out, &Line::Config { case, config: &self.config });
        for t in &self.trials {
            push_line(out, &Line::Trial { case, trial: t });
        }
        push_line(out, &Line::Summary { case, summary: &self.summary });
    }
}

/// Point, regime label and randomness seed of trial `k`.
fn trial_point(cfg: &ExperimentConfig, entry: &CatalogEntry, k: usize) -> Result<(Vector, Option<String>, u64)> {
    match &cfg.point {
        PointSpec::Coords { coords } => Ok((Vector::from_column_slice(coords), None, trial_seed(cfg.seed, &cfg.entry, "coords", k))),
        PointSpec::Regime { regime } => {
            let s = trial_seed(cfg.seed, &cfg.entry, regime, k);
            Ok((entry.sample_point(regime, s)?, Some(regime.clone()), s))
        }
        PointSpec::Random { random } => {
            let regimes = entry.regimes();
            let pick = derive_seed(cfg.seed ^ random, k as u64);
            let regime = regimes[(pick % regimes.len() as u64) as usize];
            let s = trial_seed(cfg.seed ^ random, &cfg.entry, regime, k);
            Ok((entry.sample_point(regime, s)?, Some(regime.to_string()), s))
        }
    }
}

fn run_trial(cfg: &ExperimentConfig, entry: &CatalogEntry, k: usize) -> Result<TrialRecord> {
    let (y, regime, seed) = trial_point(cfg, entry, k)?;
    let settings = CheckSettings { seed, ..cfg.check };
    let dim = entry.lift.ambient_dim();
    let cost_spec = cfg.cost.clone().unwrap_or_default();
    let mut rec = TrialRecord {
        trial: k,
        seed,
        regime,
        point: y.as_slice().to_vec(),
        check: None,
        witness: None,
        optimize: None,
        taylor: None,
        slp: None,
        errors: vec![],
        ok: true,
    };
    let note = |rec: &mut TrialRecord, task: Task, e: LiftError| {
        rec.errors.push(format!("{task:?}: {e}"));
        rec.ok = false;
    };

    let report = if cfg.wants(Task::Check) || cfg.wants(Task::Witness) {
        match check_point(entry, &y, &settings) {
            Ok(r) => Some(r),
            Err(e) => {
                note(&mut rec, Task::Check, e);
                None
            }
        }
    } else {
        None
    };
    if let Some(r) = &report {
        rec.ok &= r.mismatches.is_empty() && r.witnesses_valid();
    }
    if cfg.wants(Task::Witness) {
        if let Some(r) = &report {
            let cost_gap = match &cfg.cost {
                Some(spec) => match cost_gap(entry, &y, &spec.build(dim, seed)?) {
                    Ok(g) => Some(g),
                    Err(e) => {
                        note(&mut rec, Task::Witness, e);
                        None
                    }
                },
                None => None,
            };
            rec.witness = Some(WitnessRecord { witnesses: r.witnesses.clone(), all_valid: r.witnesses_valid(), cost_gap });
        }
    }
    if cfg.wants(Task::Check) {
        rec.check = report;
    }
    if cfg.wants(Task::Taylor) {
        let cost = cost_spec.build(dim, derive_seed(seed, 11))?;
        match fd_validate(&entry.lift, &cost, &y, seed) {
            Ok(r) => {
                rec.ok &= r.passes();
                rec.taylor = Some(r);
            }
            Err(e) => note(&mut rec, Task::Taylor, e),
        }
    }
    if cfg.wants(Task::Optimize) {
        let cost = cost_spec.build(dim, derive_seed(seed, 12))?;
        match optimize(entry, &cost, &y, &SolverParams { seed, ..cfg.solver }, &settings) {
            Ok(r) => {
                // A converged run where "2=>1" holds must end at a stationary point downstairs.
                rec.ok &= !(r.converged && r.w_condition == Verdict::Holds) || r.downstream_gap >= -STATIONARY_TOL;
                rec.optimize = Some(r);
            }
            Err(e) => note(&mut rec, Task::Optimize, e),
        }
    }
    if cfg.wants(Task::SlpEvidence) {
        rec.slp = Some(match slp_evidence(entry, &y, &settings) {
            Ok(ev) => SlpRecord {
                supports_failure: ev.supports_failure(),
                evidence: Some(ev),
                note: "pathological sequence with best fiber-sample distances".into(),
            },
            Err(LiftError::NoPathology) => SlpRecord {
                evidence: None,
                supports_failure: false,
                note: "local minima are preserved here; no pathological sequence".into(),
            },
            Err(e) => {
                note(&mut rec, Task::SlpEvidence, e);
                SlpRecord { evidence: None, supports_failure: false, note: "failed".into() }
            }
        });
    }
    Ok(rec)
}

fn cost_gap(entry: &CatalogEntry, y: &Vector, cost: &Cost) -> Result<CostGap> {
    let cone = entry.set.cone_at(&entry.lift.value(y)?, entry.tol())?;
    Ok(CostGap {
        grad_norm_upstairs: grad_g(&entry.lift, y, cost)?.norm(),
        downstream_gap: downstream_stationarity(&entry.lift, cost, y, &cone)?,
    })
}

fn optimize(entry: &CatalogEntry, cost: &Cost, y0: &Vector, params: &SolverParams, settings: &CheckSettings) -> Result<OptimizeRecord> {
    let (result, converged) = match find_second_order_point(&entry.lift, cost, y0, params) {
        Ok(r) => (r, true),
        Err(LiftError::NotConverged { iters, grad_norm, min_eig, best, trace }) => {
            let y = Vector::from_vec(best);
            let value = cost.value(&entry.lift.value(&y)?);
            let r = SolverResult { y: y.as_slice().to_vec(), value, grad_norm, min_eig, iters, trace };
            (r, false)
        }
        Err(e) => return Err(e),
    };
    let y = result.point();
    let cone = entry.set.cone_at(&entry.lift.value(&y)?, entry.tol())?;
    let downstream_gap = downstream_stationarity(&entry.lift, cost, &y, &cone)?;
    let w_condition = check_chain(&entry.lift, &y, &cone, Some(entry), settings)?.w_condition.verdict;
    Ok(OptimizeRecord { start: y0.as_slice().to_vec(), converged, result, downstream_gap, w_condition })
}

fn summarize(trials: &[TrialRecord]) -> Summary {
    let mut verdicts: BTreeMap<String, VerdictCounts> = BTreeMap::new();
    let (mut mismatches, mut witnesses, mut invalid_w) = (0, 0, 0);
    let (mut gmin, mut hmin): (Option<f64>, Option<f64>) = (None, None);
    let (mut conv, mut gapmin): (Option<usize>, Option<f64>) = (None, None);
    let fmin = |a: Option<f64>, b: f64| Some(a.map_or(b, |a| a.min(b)));
    for t in trials {
        if let Some(r) = &t.check {
            mismatches += r.mismatches.len();
            for p in Property::ALL {
                let c = verdicts.entry(p.label().to_string()).or_default();
                match r.verdict(p) {
                    Verdict::Holds => c.holds += 1,
                    Verdict::Fails => c.fails += 1,
                    Verdict::Inconclusive => c.inconclusive += 1,
                }
            }
        }
        let ws = t.check.as_ref().map(|r| &r.witnesses).or(t.witness.as_ref().map(|w| &w.witnesses));
        if let Some(ws) = ws {
            witnesses += ws.len();
            invalid_w += ws.iter().filter(|w| !w.is_valid()).count();
        }
        if let Some(f) = &t.taylor {
            if !f.at_machine_precision {
                gmin = fmin(gmin, f.grad_slope);
                hmin = fmin(hmin, f.hess_slope);
            }
        }
        if let Some(o) = &t.optimize {
            conv = Some(conv.unwrap_or(0) + o.converged as usize);
            gapmin = fmin(gapmin, o.downstream_gap);
        }
    }
    let failed_trials: Vec<usize> = trials.iter().filter(|t| !t.ok).map(|t| t.trial).collect();
    let errors = trials.iter().map(|t| t.errors.len()).sum();
    Summary {
        trials: trials.len(),
        passed: failed_trials.is_empty(),
        failed_trials,
        verdict_mismatches: mismatches,
        verdicts,
        witnesses,
        invalid_witnesses: invalid_w,
        taylor_min_grad_slope: gmin,
        taylor_min_hess_slope: hmin,
        optimize_converged: conv,
        optimize_min_gap: gapmin,
        errors,
    }
}

/// Runs every trial of `cfg`; fails only on configuration errors.
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let entry = cfg.validate()?;
    let trials = (0..cfg.trials)
        .into_par_iter()
        .map(|k| run_trial(cfg, &entry, k))
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(&trials);
    Ok(ExperimentReport { config: cfg.clone(), trials, summary })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlotKind {
    /// `trial,t,residual1,residual2` from the taylor task.
    Taylor,
    /// `trial,iter,gradnorm,mineig` from the optimize task.
    Trace,
}

/// CSV plot data; `NoData` when no trial ran the matching task.
pub fn emit_plot_data(report: &ExperimentReport, kind: PlotKind) -> Result<String> {
    let mut out = String::new();
    let mut rows = 0;
    match kind {
        PlotKind::Taylor => {
            out.push_str("trial,t,residual1,residual2\n");
            for t in &report.trials {
                if let Some(f) = &t.taylor {
                    for (i, ts) in f.ts.iter().enumerate() {
                        let _ = writeln!(out, "{},{:e},{:e},{:e}", t.trial, ts, f.grad_residuals[i], f.hess_residuals[i]);
                        rows += 1;
                    }
                }
            }
        }
        PlotKind::Trace => {
            out.push_str("trial,iter,gradnorm,mineig\n");
            for t in &report.trials {
                if let Some(o) = &t.optimize {
                    for r in &o.result.trace {
                        let _ = writeln!(out, "{},{},{:e},{:e}", t.trial, r.iter, r.grad_norm, r.min_eig);
                        rows += 1;
                    }
                }
            }
        }
    }
    if rows == 0 {
        return Err(LiftError::NoData(format!("report has no {kind:?} rows")));
    }
    Ok(out)
}

/// One named experiment of the suite.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteCase {
    pub name: String,
    pub config: ExperimentConfig,
}

/// The acceptance matrix: every catalog entry and regime checked with witnesses, Taylor
/// slopes on random points, the two planar counterexamples, solver runs on benign
/// lifts and sequence evidence for non-open lifts.
pub fn suite_cases(seed: u64, trials: usize) -> Vec<SuiteCase> {
    let mut cases = Vec::new();
    let mut add = |name: String, mut config: ExperimentConfig, n: usize| {
        config.seed = seed;
        config.trials = n;
        cases.push(SuiteCase { name, config });
    };
    for id in EntryId::defaults() {
        let regimes = build(&id).map(|e| e.regimes().to_vec()).unwrap_or_default();
        for regime in regimes {
            let cfg = ExperimentConfig::new(id.clone(), PointSpec::Regime { regime: regime.into() }, vec![Task::Check, Task::Witness]);
            add(format!("check/{}/{regime}", id.name()), cfg, trials);
        }
        let cfg = ExperimentConfig::new(id.clone(), PointSpec::default(), vec![Task::Taylor]);
        add(format!("taylor/{}", id.name()), cfg, trials);
    }
    let mut nodal = ExperimentConfig::new(EntryId::NodalCubic, PointSpec::Coords { coords: vec![0.0, 0.0, -1.0] }, vec![Task::Check, Task::Witness]);
    nodal.cost = Some(CostSpec::Linear { w: vec![-1.0, -1.0] });
    add("witness/nodal_cubic".into(), nodal, 1);
    let disk = ExperimentConfig::new(EntryId::DiskQuartic, PointSpec::Coords { coords: vec![1.0, 0.0, 0.0] }, vec![Task::Check, Task::Witness]);
    add("witness/disk_quartic".into(), disk, 1);
    for (id, regime) in [(EntryId::Hadamard { n: 4 }, "interior"), (EntryId::Lr { m: 4, n: 3, r: 2 }, "full_rank")] {
        let mut cfg = ExperimentConfig::new(id.clone(), PointSpec::Regime { regime: regime.into() }, vec![Task::Optimize]);
        cfg.cost = Some(CostSpec::RandomQuadratic { convex: true, quartic: 0.0 });
        add(format!("optimize/{}", id.name()), cfg, trials);
    }
    for (id, regime) in [
        (EntryId::DesingChart { m: 4, n: 4, r: 2, perm: Some(vec![2, 0, 3, 1]) }, "rank_deficient"),
        (EntryId::Svd { m: 4, n: 3, r: 2 }, "repeated"),
    ] {
        let cfg = ExperimentConfig::new(id.clone(), PointSpec::Regime { regime: regime.into() }, vec![Task::SlpEvidence]);
        add(format!("slp/{}", id.name()), cfg, trials);
    }
    cases
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub cases: Vec<(String, ExperimentReport)>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.cases.iter().all(|(_, r)| r.passed())
    }

    pub fn failed_cases(&self) -> Vec<&str> {
        self.cases.iter().filter(|(_, r)| !r.passed()).map(|(n, _)| n.as_str()).collect()
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for (name, r) in &self.cases {
            r.write_lines(&mut out, Some(name));
        }
        out
    }
}

pub fn run_suite(seed: u64, trials: usize) -> Result<SuiteReport> {
    let cases = suite_cases(seed, trials)
        .into_iter()
        .map(|c| Ok((c.name, run(&c.config)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SuiteReport { cases })
}
