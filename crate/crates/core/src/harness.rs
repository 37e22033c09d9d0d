//! Experiment plans, sweeps over one system parameter, and report files.
//!
//! Each run is an independent job that walks the grid in order. Run `r`
//! uses the same generated instance and the same slot realization at every
//! grid point and for every method, so differences between points and
//! methods are not masked by sampling noise.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{self, GreedyRule};
use crate::error::{Error, Result};
use crate::model::{self, FileSpec, ProfitMode, Scenario, StageOneDecision, StageTwoDecision, SystemConfig};
use crate::scenario::{self, GeneratorSpec, ScenarioSet};
use crate::solver::{self, Incumbent, SolverOptions};
use crate::units;

pub const PLAN_SCHEMA_VERSION: u32 = 1;

/// Stream mixed into the run seed for slot realization.
const SLOT_SEED_SALT: u64 = 0x5EED_5107;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// Cold capacity, MB.
    ColdCapacity,
    /// Hot service rate, Mb/s.
    HotRate,
    /// Hot storage cost, cents per MB.
    HotCost,
    /// Cold storage cost, cents per MB.
    ColdCost,
}

impl SweepVariable {
    pub const ALL: [SweepVariable; 4] = [Self::ColdCapacity, Self::HotRate, Self::HotCost, Self::ColdCost];

    pub fn name(self) -> &'static str {
        match self {
            Self::ColdCapacity => "cold_capacity",
            Self::HotRate => "hot_rate",
            Self::HotCost => "hot_cost",
            Self::ColdCost => "cold_cost",
        }
    }

    /// Copy of `base` with this parameter set to `value`.
    pub fn apply(self, base: &SystemConfig, value: f64) -> SystemConfig {
        let mut cfg = base.clone();
        match self {
            Self::ColdCapacity => cfg.cold_capacity_mb = value,
            Self::HotRate => cfg.hot_rate_mbps = value,
            Self::HotCost => cfg.hot_cost_cents_per_mb = value,
            Self::ColdCost => cfg.cold_cost_cents_per_mb = value,
        }
        cfg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Joint two-stage solve.
    Pm,
    /// Independent stages.
    Is,
    /// Greedy access by bid per size.
    Gh1,
    /// Greedy access by bid per arrival rate.
    Gh2,
}

impl Method {
    pub const ALL: [Method; 4] = [Self::Pm, Self::Is, Self::Gh1, Self::Gh2];

    pub fn name(self) -> &'static str {
        match self {
            Self::Pm => "pm",
            Self::Is => "is",
            Self::Gh1 => "gh1",
            Self::Gh2 => "gh2",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method {s:?}; expected pm, is, gh1 or gh2")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub schema_version: u32,
    pub name: String,
    pub sweep: SweepVariable,
    /// Values of the swept parameter in the units of [`SystemConfig`].
    pub grid: Vec<f64>,
    pub methods: Vec<Method>,
    pub runs: usize,
    pub seed_base: u64,
    pub system: SystemConfig,
    pub generator: GeneratorSpec,
    pub solver: SolverOptions,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

impl ExperimentPlan {
    /// Desk-scale plan: 100 files, 5 scenarios, 20 slots, 10 runs, with
    /// capacities scaled to a tenth of the 1000-file setting.
    pub fn desk(sweep: SweepVariable) -> Self {
        let system = SystemConfig {
            cold_capacity_mb: units::gb_to_mb(40.0),
            hot_capacity_mb: units::gb_to_mb(20.0),
            ..SystemConfig::default()
        };
        let grid = match sweep {
            SweepVariable::ColdCapacity => linspace(0.75, 2.0, 10).into_iter().map(|k| k * system.cold_capacity_mb).collect(),
            SweepVariable::HotRate => linspace(1.0, 12.0, 10).into_iter().map(|k| k * system.hot_rate_mbps).collect(),
            SweepVariable::HotCost => linspace(50.0, 260.0, 10).into_iter().map(units::cents_per_gb_to_per_mb).collect(),
            SweepVariable::ColdCost => linspace(20.0, 120.0, 10).into_iter().map(units::cents_per_gb_to_per_mb).collect(),
        };
        Self {
            schema_version: PLAN_SCHEMA_VERSION,
            name: format!("desk_{}", sweep.name()),
            sweep,
            grid,
            methods: Method::ALL.to_vec(),
            runs: 10,
            seed_base: 0,
            system,
            generator: GeneratorSpec {
                num_files: 100,
                num_scenarios: 5,
                ..GeneratorSpec::default()
            },
            solver: SolverOptions {
                multistarts: 4,
                ..SolverOptions::default()
            },
        }
    }

    /// 1000 files, 10 scenarios, 100 runs over the original parameter ranges.
    pub fn full(sweep: SweepVariable) -> Self {
        let system = SystemConfig::default();
        let grid = match sweep {
            SweepVariable::ColdCapacity => (0..=25).map(|k| units::gb_to_mb(300.0 + 20.0 * k as f64)).collect(),
            SweepVariable::HotRate => linspace(100.0, 2500.0, 25).into_iter().map(units::gbps_to_mbps).collect(),
            SweepVariable::HotCost => linspace(50.0, 3450.0, 18).into_iter().map(units::cents_per_gb_to_per_mb).collect(),
            SweepVariable::ColdCost => linspace(20.0, 120.0, 11).into_iter().map(units::cents_per_gb_to_per_mb).collect(),
        };
        Self {
            schema_version: PLAN_SCHEMA_VERSION,
            name: format!("full_{}", sweep.name()),
            sweep,
            grid,
            methods: Method::ALL.to_vec(),
            runs: 100,
            seed_base: 0,
            system,
            generator: GeneratorSpec::default(),
            solver: SolverOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != PLAN_SCHEMA_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported plan schema version {}",
                self.schema_version
            )));
        }
        if self.grid.is_empty() {
            return Err(Error::InvalidConfig("grid must not be empty".into()));
        }
        if self.grid.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(Error::InvalidConfig("grid must be sorted ascending".into()));
        }
        if self.runs < 1 {
            return Err(Error::InvalidConfig("runs must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("methods must not be empty".into()));
        }
        self.generator.validate()?;
        self.solver.validate()?;
        for &v in &self.grid {
            self.sweep.apply(&self.system, v).validate()?;
        }
        Ok(())
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        let plan: Self = toml::from_str(s)?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    /// Generator settings of run `run`.
    pub fn generator_for(&self, run: usize) -> GeneratorSpec {
        GeneratorSpec {
            seed: self.seed_base.wrapping_add(run as u64),
            ..self.generator.clone()
        }
    }

    pub fn slot_seed(&self, run: usize) -> u64 {
        self.seed_base.wrapping_add(run as u64) ^ SLOT_SEED_SALT
    }
}

/// One row of results: a method's outcome on one run at one grid point.
/// Field order is the column order of the results CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub point: usize,
    pub sweep_variable: SweepVariable,
    pub sweep_value: f64,
    pub method: Method,
    pub run: usize,
    pub seed: u64,
    /// `ok`, or the error that stopped this run.
    pub status: String,
    pub total_profit: f64,
    pub storage_profit: f64,
    pub access_profit: f64,
    pub arar: f64,
    pub accepted_storage: usize,
    pub hot_replicas: usize,
    pub accepted_access: usize,
    pub submitted_access: usize,
    /// Expected profit the method's stage-one decision was chosen for.
    pub expected_objective: f64,
    pub kkt_residual: f64,
    pub relaxed_violation: f64,
    pub repairs: usize,
    pub iterations: usize,
}

impl SweepResult {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

/// Decisions behind one result row.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub method: Method,
    pub stage_one: StageOneDecision,
    /// Scenario realized in each slot.
    pub slots: Vec<usize>,
    /// Access decision of each slot.
    pub stage_two: Vec<StageTwoDecision>,
    pub row: SweepResult,
}

#[derive(Default)]
struct Diagnostics {
    expected_objective: f64,
    kkt_residual: f64,
    relaxed_violation: f64,
    repairs: usize,
    iterations: usize,
}

/// Accepted and submitted access bids over the slots. Only files stored at
/// stage one count as submitted; 0/0 is reported as 0.
pub fn arar(d1: &StageOneDecision, slots: &[usize], stage_two: &[StageTwoDecision], scenarios: &[Scenario]) -> (f64, usize, usize) {
    let mut accepted = 0;
    let mut submitted = 0;
    for (&k, d2) in slots.iter().zip(stage_two) {
        let sc = &scenarios[k];
        for i in 0..d1.len() {
            if d1.accept[i] && sc.arrival_rate_per_s[i] > 0.0 {
                submitted += 1;
                if d2.accept_access[i] {
                    accepted += 1;
                }
            }
        }
    }
    let rate = if submitted == 0 { 0.0 } else { accepted as f64 / submitted as f64 };
    (rate, accepted, submitted)
}

fn per_slot<F>(slots: &[usize], mut solve: F) -> Result<Vec<StageTwoDecision>>
where
    F: FnMut(usize) -> Result<StageTwoDecision>,
{
    let mut cache: BTreeMap<usize, StageTwoDecision> = BTreeMap::new();
    slots
        .iter()
        .map(|&k| {
            if let Some(d) = cache.get(&k) {
                return Ok(d.clone());
            }
            let d = solve(k)?;
            cache.insert(k, d.clone());
            Ok(d)
        })
        .collect()
}

/// Runs every method of the plan on run `run`, visiting the grid points in
/// order and handing each point's outcomes to `sink`. The joint method is
/// offered its previous point's decision as an incumbent.
pub fn run_series<F>(plan: &ExperimentPlan, run: usize, mut sink: F) -> Result<()>
where
    F: FnMut(usize, Vec<RunOutcome>),
{
    let set = ScenarioSet::generate(&plan.generator_for(run))?;
    let slots = scenario::realize_slots(&set.scenarios, plan.system.num_slots as usize, plan.slot_seed(run))?;
    let mut incumbent: Option<Incumbent> = None;
    for point in 0..plan.grid.len() {
        let cfg = plan.sweep.apply(&plan.system, plan.grid[point]);
        let (outcomes, next) = run_methods(plan, point, run, &set.files, &set.scenarios, &slots, &cfg, incumbent.take());
        incumbent = next;
        sink(point, outcomes);
    }
    Ok(())
}

fn run_methods(
    plan: &ExperimentPlan,
    point: usize,
    run: usize,
    files: &[FileSpec],
    scenarios: &[Scenario],
    slots: &[usize],
    cfg: &SystemConfig,
    incumbent: Option<Incumbent>,
) -> (Vec<RunOutcome>, Option<Incumbent>) {
    let opts = &plan.solver;
    let mut next_incumbent = None;
    let mut is_stage_one: Option<Result<(StageOneDecision, Diagnostics)>> = None;
    let mut is_first = || -> Result<(StageOneDecision, Diagnostics)> {
        let sol = solver::solve_stage_one(files, &[], cfg, opts)?;
        let diag = Diagnostics {
            expected_objective: sol.report.objective,
            kkt_residual: sol.report.kkt_residual,
            relaxed_violation: sol.report.relaxed_violation,
            repairs: sol.report.repairs,
            iterations: sol.report.iterations,
        };
        Ok((sol.decision, diag))
    };
    let mut out = Vec::with_capacity(plan.methods.len());
    for &method in &plan.methods {
        let mut attempt = || -> Result<(StageOneDecision, Vec<StageTwoDecision>, Diagnostics)> {
            match method {
                Method::Pm => {
                    let sol = solver::solve_stage_one_with(files, scenarios, cfg, opts, incumbent.as_slice())?;
                    next_incumbent = Some(Incumbent {
                        decision: sol.decision.clone(),
                        plan: sol.plan.clone(),
                    });
                    let mut diag = Diagnostics {
                        expected_objective: sol.report.objective,
                        kkt_residual: sol.report.kkt_residual,
                        relaxed_violation: sol.report.relaxed_violation,
                        repairs: sol.report.repairs,
                        iterations: sol.report.iterations,
                    };
                    let d1 = sol.decision;
                    let stage_two = per_slot(slots, |k| {
                        let fresh = solver::solve_stage_two(&d1, &scenarios[k], files, cfg, opts)?;
                        diag.repairs += fresh.report.repairs;
                        diag.iterations += fresh.report.iterations;
                        // the plan computed with stage one is also feasible
                        let planned = &sol.plan[k];
                        let sc = &scenarios[k];
                        Ok(if model::accepted_bids(planned, sc) > model::accepted_bids(&fresh.decision, sc) {
                            planned.clone()
                        } else {
                            fresh.decision
                        })
                    })?;
                    Ok((d1, stage_two, diag))
                }
                Method::Is | Method::Gh1 | Method::Gh2 => {
                    let first = is_stage_one.get_or_insert_with(&mut is_first);
                    let (d1, base) = match first {
                        Ok((d1, diag)) => (d1.clone(), diag),
                        Err(e) => return Err(Error::InvalidConfig(format!("independent stage one failed: {e}"))),
                    };
                    let mut diag = Diagnostics {
                        expected_objective: base.expected_objective,
                        kkt_residual: base.kkt_residual,
                        relaxed_violation: base.relaxed_violation,
                        repairs: base.repairs,
                        iterations: base.iterations,
                    };
                    let stage_two = per_slot(slots, |k| match method {
                        Method::Is => {
                            let sol = solver::solve_stage_two(&d1, &scenarios[k], files, cfg, opts)?;
                            diag.repairs += sol.report.repairs;
                            diag.iterations += sol.report.iterations;
                            Ok(sol.decision)
                        }
                        Method::Gh1 => baselines::solve_gh(files, &d1, &scenarios[k], cfg, GreedyRule::PerSize),
                        _ => baselines::solve_gh(files, &d1, &scenarios[k], cfg, GreedyRule::PerRate),
                    })?;
                    Ok((d1, stage_two, diag))
                }
            }
        };
        let seed = plan.seed_base.wrapping_add(run as u64);
        let mut row = SweepResult {
            point,
            sweep_variable: plan.sweep,
            sweep_value: plan.grid[point],
            method,
            run,
            seed,
            status: "ok".into(),
            total_profit: 0.0,
            storage_profit: 0.0,
            access_profit: 0.0,
            arar: 0.0,
            accepted_storage: 0,
            hot_replicas: 0,
            accepted_access: 0,
            submitted_access: 0,
            expected_objective: 0.0,
            kkt_residual: 0.0,
            relaxed_violation: 0.0,
            repairs: 0,
            iterations: 0,
        };
        let outcome = attempt().and_then(|(d1, stage_two, diag)| {
            let p = model::profit(&d1, &stage_two, scenarios, files, cfg, ProfitMode::Realized(slots))?;
            let (rate, accepted, submitted) = arar(&d1, slots, &stage_two, scenarios);
            row.total_profit = p.total();
            row.storage_profit = p.storage_profit();
            row.access_profit = p.access_revenue;
            row.arar = rate;
            row.accepted_storage = d1.num_accepted();
            row.hot_replicas = d1.num_hot();
            row.accepted_access = accepted;
            row.submitted_access = submitted;
            row.expected_objective = diag.expected_objective;
            row.kkt_residual = diag.kkt_residual;
            row.relaxed_violation = diag.relaxed_violation;
            row.repairs = diag.repairs;
            row.iterations = diag.iterations;
            Ok((d1, stage_two))
        });
        match outcome {
            Ok((stage_one, stage_two)) => out.push(RunOutcome {
                method,
                stage_one,
                slots: slots.to_vec(),
                stage_two,
                row,
            }),
            Err(e) => {
                row.status = e.to_string();
                out.push(RunOutcome {
                    method,
                    stage_one: StageOneDecision::reject_all(files.len()),
                    slots: slots.to_vec(),
                    stage_two: Vec::new(),
                    row,
                });
            }
        }
    }
    (out, next_incumbent)
}

/// Runs the whole plan. Rows come back ordered by point, method and run.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<Vec<SweepResult>> {
    run_experiment_with(plan, |_, _| Ok(()))
}

/// Like [`run_experiment`], handing each grid point's rows to `sink` as soon
/// as that point and all earlier ones are complete.
pub fn run_experiment_with<F>(plan: &ExperimentPlan, mut sink: F) -> Result<Vec<SweepResult>>
where
    F: FnMut(usize, &[SweepResult]) -> Result<()>,
{
    plan.validate()?;
    let (tx, rx) = mpsc::channel::<(usize, Result<Vec<SweepResult>>)>();
    let mut all = Vec::new();
    let mut failure = None;
    std::thread::scope(|s| {
        s.spawn(move || {
            (0..plan.runs).into_par_iter().for_each_with(tx, |tx, r| {
                let mut sent = 0;
                let res = run_series(plan, r, |p, outcomes| {
                    let _ = tx.send((p, Ok(outcomes.into_iter().map(|o| o.row).collect())));
                    sent = p + 1;
                });
                if let Err(e) = res {
                    let msg = e.to_string();
                    for p in sent..plan.grid.len() {
                        let _ = tx.send((p, Err(Error::InvalidConfig(format!("run {r}: {msg}")))));
                    }
                }
            });
        });
        let mut pending: BTreeMap<usize, Vec<SweepResult>> = BTreeMap::new();
        let mut done = vec![0usize; plan.grid.len()];
        let mut next = 0;
        for (p, rows) in rx {
            match rows {
                Ok(rows) => pending.entry(p).or_default().extend(rows),
                Err(e) => {
                    failure.get_or_insert(e);
                }
            }
            done[p] += 1;
            while next < done.len() && done[next] == plan.runs {
                let mut rows = pending.remove(&next).unwrap_or_default();
                rows.sort_by_key(|a| (a.method, a.run));
                if failure.is_none() {
                    if let Err(e) = sink(next, &rows) {
                        failure = Some(e);
                    }
                }
                all.extend(rows);
                next += 1;
            }
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(all),
    }
}

/// Mean and sample standard deviation; the deviation of one value is 0.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    fn of(values: &[f64]) -> Self {
        let (mean, std) = mean_std(values);
        Self { mean, std }
    }
}

/// Statistics over the successful runs of one method at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub point: usize,
    pub sweep_value: f64,
    pub method: Method,
    pub runs: usize,
    pub failed_runs: usize,
    pub total_profit: Stat,
    pub storage_profit: Stat,
    pub access_profit: Stat,
    pub arar: Stat,
    pub accepted_storage: Stat,
    pub accepted_access: Stat,
}

pub fn summarize(results: &[SweepResult]) -> Vec<PointSummary> {
    let mut groups: BTreeMap<(usize, Method), Vec<&SweepResult>> = BTreeMap::new();
    for r in results {
        groups.entry((r.point, r.method)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((point, method), rows)| {
            let ok: Vec<&SweepResult> = rows.iter().copied().filter(|r| r.is_ok()).collect();
            let col = |f: fn(&SweepResult) -> f64| -> Stat { Stat::of(&ok.iter().map(|r| f(r)).collect::<Vec<_>>()) };
            PointSummary {
                point,
                sweep_value: rows[0].sweep_value,
                method,
                runs: ok.len(),
                failed_runs: rows.len() - ok.len(),
                total_profit: col(|r| r.total_profit),
                storage_profit: col(|r| r.storage_profit),
                access_profit: col(|r| r.access_profit),
                arar: col(|r| r.arar),
                accepted_storage: col(|r| r.accepted_storage as f64),
                accepted_access: col(|r| r.accepted_access as f64),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl ReportFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::InvalidConfig(format!("unknown format {other:?}; expected csv or json"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub plan: String,
    pub sweep_variable: SweepVariable,
    pub schema_version: u32,
    pub generated_at_unix_s: u64,
    pub wall_time_s: Option<f64>,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub metadata: ReportMetadata,
    pub points: Vec<PointSummary>,
}

/// Plot-data panels written for every sweep.
pub const PANELS: [&str; 4] = ["profit", "profit_split", "arar", "accepted_counts"];

/// Paths written by [`emit_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReportFiles {
    pub results: PathBuf,
    pub summary: PathBuf,
    pub plots: Vec<PathBuf>,
}

pub fn write_results_csv<W: Write>(results: &[SweepResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in results {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results_csv(path: &Path) -> Result<Vec<SweepResult>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<Vec<SweepResult>, _>>()?)
}

/// Writes the per-row results (`results.csv` or `results.json`), the JSON
/// summary and the four plot-data files into `dir`.
pub fn emit_report(
    results: &[SweepResult],
    plan: &ExperimentPlan,
    dir: &Path,
    format: ReportFormat,
    wall_time_s: Option<f64>,
) -> Result<ReportFiles> {
    if results.is_empty() {
        return Err(Error::InvalidConfig("no results to report".into()));
    }
    fs::create_dir_all(dir)?;
    let results_path = match format {
        ReportFormat::Csv => {
            let path = dir.join("results.csv");
            write_results_csv(results, fs::File::create(&path)?)?;
            path
        }
        ReportFormat::Json => {
            let path = dir.join("results.json");
            fs::write(&path, serde_json::to_string_pretty(results)?)?;
            path
        }
    };
    let points = summarize(results);
    let summary = Summary {
        metadata: ReportMetadata {
            plan: plan.name.clone(),
            sweep_variable: plan.sweep,
            schema_version: plan.schema_version,
            generated_at_unix_s: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            wall_time_s,
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
        points,
    };
    let summary_path = dir.join("summary.json");
    fs::write(&summary_path, serde_json::to_string_pretty(&summary)?)?;
    let plots = write_plot_data(&summary.points, plan, dir)?;
    Ok(ReportFiles {
        results: results_path,
        summary: summary_path,
        plots,
    })
}

/// One file per panel. Rows are `series,x,y`, grouped by series, so each
/// series reads as a two-column `x,y` table.
fn write_plot_data(points: &[PointSummary], plan: &ExperimentPlan, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::with_capacity(PANELS.len());
    for panel in PANELS {
        let path = dir.join(format!("plot_{}_{}.csv", plan.sweep.name(), panel));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["series", plan.sweep.name(), panel])?;
        let series: Vec<(String, Method, fn(&PointSummary) -> f64)> = match panel {
            "profit" => plan
                .methods
                .iter()
                .map(|&m| {
                    (
                        m.name().to_string(),
                        m,
                        (|s: &PointSummary| s.total_profit.mean) as fn(&PointSummary) -> f64,
                    )
                })
                .collect(),
            "profit_split" => plan
                .methods
                .iter()
                .flat_map(|&m| {
                    [
                        (
                            format!("{}_storage", m.name()),
                            m,
                            (|s: &PointSummary| s.storage_profit.mean) as fn(&PointSummary) -> f64,
                        ),
                        (format!("{}_access", m.name()), m, |s: &PointSummary| s.access_profit.mean),
                    ]
                })
                .collect(),
            "arar" => plan
                .methods
                .iter()
                .map(|&m| {
                    (
                        m.name().to_string(),
                        m,
                        (|s: &PointSummary| s.arar.mean) as fn(&PointSummary) -> f64,
                    )
                })
                .collect(),
            _ => plan
                .methods
                .iter()
                .flat_map(|&m| {
                    [
                        (
                            format!("{}_storage", m.name()),
                            m,
                            (|s: &PointSummary| s.accepted_storage.mean) as fn(&PointSummary) -> f64,
                        ),
                        (format!("{}_access", m.name()), m, |s: &PointSummary| s.accepted_access.mean),
                    ]
                })
                .collect(),
        };
        for (label, method, y) in series {
            for s in points.iter().filter(|s| s.method == method) {
                w.write_record([label.clone(), s.sweep_value.to_string(), y(s).to_string()])?;
            }
        }
        w.flush()?;
        paths.push(path);
    }
    Ok(paths)
}

/// Runs a plan, appending each completed grid point to `results.csv` in
/// `dir`, then writes the full report.
pub fn run_sweep(plan: &ExperimentPlan, dir: &Path, format: ReportFormat) -> Result<(Vec<SweepResult>, ReportFiles)> {
    fs::create_dir_all(dir)?;
    let t0 = Instant::now();
    let partial = dir.join("results.partial.csv");
    let mut writer = csv::Writer::from_path(&partial)?;
    let results = run_experiment_with(plan, |_, rows| {
        for r in rows {
            writer.serialize(r)?;
        }
        writer.flush()?;
        Ok(())
    })?;
    drop(writer);
    let files = emit_report(&results, plan, dir, format, Some(t0.elapsed().as_secs_f64()))?;
    fs::remove_file(&partial)?;
    Ok((results, files))
}
