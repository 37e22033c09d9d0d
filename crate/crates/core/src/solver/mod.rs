//! Relax-and-round solver for the two-stage bidding problem.
//!
//! Each start solves a sequence of smooth problems by projected gradient:
//! an augmented Lagrangian handles capacity, stability and latency, and a
//! sigmoid penalty of growing sharpness and weight drives the relaxed
//! binaries to 0 or 1. The last stage always uses the configured penalty.
//! Every start is rounded and repaired into a feasible decision, and the
//! most profitable one wins.

mod local;
mod oracle;
mod problem;
mod rounding;
mod spg;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    self, check_stage_one_feasible, check_stage_two_feasible, validate_instance, validate_slot, Constraint, FileSpec, ProfitMode, Scenario,
    StageOneDecision, StageTwoDecision, SystemConfig,
};
use crate::relax::{RelaxedStageOne, RelaxedStageTwo};

pub use oracle::{brute_force_oracle, OracleLimits, OracleSolution};
pub use spg::StepRule;

use problem::{Multipliers, Problem, Stage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Number of starting points; the first is the centre of the box.
    pub multistarts: usize,
    /// Projected-gradient iterations per augmented-Lagrangian round.
    pub max_iters: usize,
    pub step_rule: StepRule,
    /// Penalty parameter of each augmented-Lagrangian round.
    pub constraint_penalty_schedule: Vec<f64>,
    /// Sigmoid sharpness of each continuation stage before the final one.
    pub alpha_schedule: Vec<f64>,
    /// Integrality weight of each continuation stage, relative to the mean
    /// magnitude of a binary variable's objective coefficient.
    pub integrality_schedule: Vec<f64>,
    /// Stop an inner solve when the projected step is below this.
    pub tol: f64,
    pub seed: u64,
    /// Wall-clock budget in seconds for the whole solve.
    pub time_budget_s: Option<f64>,
    /// Run starts on the rayon pool.
    pub parallel: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            multistarts: 16,
            max_iters: 200,
            step_rule: StepRule::default(),
            constraint_penalty_schedule: vec![1.0, 10.0, 100.0, 1000.0],
            alpha_schedule: vec![10.0, 10.0, 20.0, 50.0, 100.0],
            integrality_schedule: vec![0.0, 0.05, 0.2, 1.0, 5.0],
            tol: 1e-6,
            seed: 0,
            time_budget_s: None,
            parallel: true,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.multistarts == 0 {
            return Err(Error::InvalidConfig("multistarts must be at least 1".into()));
        }
        if self.constraint_penalty_schedule.is_empty() || self.constraint_penalty_schedule.iter().any(|&r| !(r > 0.0)) {
            return Err(Error::InvalidConfig("constraint penalties must be positive and non-empty".into()));
        }
        if self.alpha_schedule.len() != self.integrality_schedule.len() {
            return Err(Error::DimensionMismatch {
                what: "integrality_schedule",
                expected: self.alpha_schedule.len(),
                got: self.integrality_schedule.len(),
            });
        }
        if self.alpha_schedule.iter().any(|&a| !(a > 0.0)) || self.integrality_schedule.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::InvalidConfig("continuation schedules must be non-negative".into()));
        }
        if self.alpha_schedule.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidConfig("alpha_schedule must be nondecreasing".into()));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::InvalidConfig("tol must be non-negative".into()));
        }
        Ok(())
    }
}

/// Smallest slack of one constraint family over all files and scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinSlack {
    pub constraint: Constraint,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// Objective of the returned integral decision: expected profit for
    /// stage one, accepted bids for stage two.
    pub objective: f64,
    /// The same objective at the winning start's relaxed point.
    pub relaxed_objective: f64,
    /// Projected-gradient iterations summed over starts.
    pub iterations: usize,
    pub starts: usize,
    pub best_start: usize,
    /// Unit-step projected-gradient norm at the winning relaxed point.
    pub kkt_residual: f64,
    /// Largest normalized constraint violation at the winning relaxed point.
    pub relaxed_violation: f64,
    pub min_slacks: Vec<MinSlack>,
    /// Fraction of relaxed binaries within 1e-3 of 0 or 1 after each
    /// continuation stage of the winning start.
    pub integrality_trace: Vec<f64>,
    /// Rounding repairs applied to the winning start.
    pub repairs: usize,
    /// The returned decision is a supplied incumbent, not a relaxed solve.
    pub from_incumbent: bool,
    pub budget_exhausted: bool,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageOneSolution {
    pub decision: StageOneDecision,
    /// Access decision planned for each scenario.
    pub plan: Vec<StageTwoDecision>,
    pub relaxed: RelaxedStageOne,
    pub relaxed_plan: Vec<RelaxedStageTwo>,
    pub report: SolveReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTwoSolution {
    pub decision: StageTwoDecision,
    pub relaxed: RelaxedStageTwo,
    pub report: SolveReport,
}

const INTEGRALITY_TOL: f64 = 1e-3;
const FINAL_STAGE_ITERS: usize = 50;

/// Augmented Lagrangian as a function of the box factors.
struct AlObjective<'p, 'a> {
    problem: &'p Problem<'a>,
    stage: Stage,
    mult: &'p Multipliers,
    rho: f64,
    x: Vec<f64>,
    gx: Vec<f64>,
}

impl spg::Smooth for AlObjective<'_, '_> {
    fn dim(&self) -> usize {
        self.problem.dim()
    }

    fn value_grad(&mut self, z: &[f64], grad: &mut [f64]) -> f64 {
        self.problem.lift(z, &mut self.x);
        let v = self.problem.eval(&self.x, self.stage, self.mult, self.rho, &mut self.gx);
        self.problem.pull_back(z, &self.gx, grad);
        grad.iter_mut().for_each(|g| *g = -*g);
        -v
    }

    fn project(&mut self, z: &mut [f64]) {
        for (v, &u) in z.iter_mut().zip(&self.problem.ub) {
            *v = v.clamp(0.0, u);
        }
    }
}

struct RelaxedRun {
    x: Vec<f64>,
    iterations: usize,
    kkt: f64,
    violation: f64,
    trace: Vec<f64>,
    exhausted: bool,
}

fn initial_point(dim: usize, start: usize, seed: u64) -> Vec<f64> {
    if start == 0 {
        return vec![0.5; dim];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(start as u64);
    (0..dim).map(|_| rng.random::<f64>()).collect()
}

fn run_relaxed(problem: &Problem<'_>, cfg: &SystemConfig, opts: &SolverOptions, start: usize, deadline: Option<Instant>) -> RelaxedRun {
    let dim = problem.dim();
    let mut z = initial_point(dim, start, opts.seed);
    let mut x = vec![0.0; dim];
    problem.lift(&z, &mut x);
    let mut mult = problem.new_multipliers();
    let mut stages: Vec<(Stage, usize, bool)> = opts
        .alpha_schedule
        .iter()
        .zip(&opts.integrality_schedule)
        .map(|(&alpha, &w)| {
            (
                Stage {
                    alpha,
                    weight: w * problem.obj_scale,
                },
                opts.max_iters,
                true,
            )
        })
        .collect();
    stages.push((
        Stage {
            alpha: cfg.penalty_alpha,
            weight: cfg.penalty_weight,
        },
        FINAL_STAGE_ITERS.min(opts.max_iters),
        false,
    ));

    let mut out = RelaxedRun {
        x: Vec::new(),
        iterations: 0,
        kkt: 0.0,
        violation: 0.0,
        trace: Vec::with_capacity(stages.len()),
        exhausted: false,
    };
    let last_rho = *opts.constraint_penalty_schedule.last().expect("validated");
    for (stage, iters, full_al) in stages {
        let rhos: Vec<f64> = if full_al {
            opts.constraint_penalty_schedule.clone()
        } else {
            vec![last_rho]
        };
        for rho in rhos {
            if out.exhausted {
                break;
            }
            let mut obj = AlObjective {
                problem,
                stage,
                mult: &mult,
                rho,
                x: vec![0.0; dim],
                gx: vec![0.0; dim],
            };
            let res = spg::minimize(&mut obj, &mut z, opts.step_rule, iters, opts.tol);
            problem.lift(&z, &mut x);
            out.iterations += res.iterations;
            out.kkt = res.residual;
            if full_al {
                let cons = problem.constraint_values(&x);
                problem.update_multipliers(&mut mult, &cons, rho);
            }
            if deadline.is_some_and(|d| Instant::now() >= d) {
                out.exhausted = true;
            }
        }
        out.trace.push(problem.integrality(&x, INTEGRALITY_TOL));
    }
    out.violation = problem.constraint_values(&x).max_violation();
    out.x = x;
    out
}

fn deadline(opts: &SolverOptions, t0: Instant) -> Option<Instant> {
    opts.time_budget_s.map(|s| t0 + std::time::Duration::from_secs_f64(s.max(0.0)))
}

fn run_starts<T: Send>(opts: &SolverOptions, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    if opts.parallel {
        (0..opts.multistarts).into_par_iter().map(f).collect()
    } else {
        (0..opts.multistarts).map(f).collect()
    }
}

/// Index of the largest objective; ties go to the lowest index.
fn best_index(objectives: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in objectives.iter().enumerate() {
        if v > objectives[best] {
            best = i;
        }
    }
    best
}

fn min_slacks(reports: &[model::FeasibilityReport]) -> Vec<MinSlack> {
    let mut out: Vec<MinSlack> = Vec::new();
    for r in reports {
        for s in &r.slacks {
            match out.iter_mut().find(|m| m.constraint == s.constraint) {
                Some(m) => m.slack = m.slack.min(s.slack),
                None => out.push(MinSlack {
                    constraint: s.constraint,
                    slack: s.slack,
                }),
            }
        }
    }
    out
}

struct StageOneCandidate {
    decision: StageOneDecision,
    plan: Vec<StageTwoDecision>,
    objective: f64,
    repairs: usize,
    run: RelaxedRun,
}

/// A known decision offered to the solver, such as the solution of a
/// neighbouring instance. `plan` may be empty or hold one access decision
/// per scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Incumbent {
    pub decision: StageOneDecision,
    pub plan: Vec<StageTwoDecision>,
}

/// Solves the first stage jointly with a per-scenario access plan. With no
/// scenarios only storage is decided.
pub fn solve_stage_one(files: &[FileSpec], scenarios: &[Scenario], cfg: &SystemConfig, opts: &SolverOptions) -> Result<StageOneSolution> {
    solve_stage_one_with(files, scenarios, cfg, opts, &[])
}

/// Access plan for a fixed storage decision: per scenario the better of a
/// fresh solve and the supplied decision, when that one is still feasible.
fn plan_for(
    d1: &StageOneDecision,
    prior: &[StageTwoDecision],
    scenarios: &[Scenario],
    files: &[FileSpec],
    cfg: &SystemConfig,
    opts: &SolverOptions,
) -> Result<Vec<StageTwoDecision>> {
    scenarios
        .iter()
        .enumerate()
        .map(|(k, sc)| {
            let fresh = solve_stage_two(d1, sc, files, cfg, opts)?.decision;
            if let Some(old) = prior.get(k) {
                if old.len() == files.len()
                    && check_stage_two_feasible(old, d1, sc, files, cfg)?.is_feasible()
                    && model::accepted_bids(old, sc) > model::accepted_bids(&fresh, sc)
                {
                    return Ok(old.clone());
                }
            }
            Ok(fresh)
        })
        .collect()
}

/// Like [`solve_stage_one`], also considering each incumbent that fits
/// the capacities; an incumbent wins only if strictly more profitable.
pub fn solve_stage_one_with(
    files: &[FileSpec],
    scenarios: &[Scenario],
    cfg: &SystemConfig,
    opts: &SolverOptions,
    incumbents: &[Incumbent],
) -> Result<StageOneSolution> {
    let t0 = Instant::now();
    cfg.validate()?;
    opts.validate()?;
    validate_instance(files, scenarios)?;
    let problem = Problem::stage_one(files, scenarios, cfg);
    let stop = deadline(opts, t0);
    let bs = problem.block;
    let n = files.len();
    let candidates = run_starts(opts, |start| {
        let run = run_relaxed(&problem, cfg, opts, start, stop);
        let col = |off: usize| -> Vec<f64> { (0..n).map(|i| run.x[i * bs + off]).collect() };
        let (mut decision, mut repairs) = rounding::round_stage_one(&col(0), &col(1), files, cfg);
        rounding::fill_storage(&mut decision, files, cfg);
        let mut plan = Vec::with_capacity(scenarios.len());
        for (s, sc) in scenarios.iter().enumerate() {
            let (oh, op) = problem.access_offsets(s);
            let (d2, r) = rounding::round_stage_two(&col(oh), &col(op), &decision, sc, files, cfg)?;
            repairs += r;
            plan.push(d2);
        }
        let objective = model::profit(&decision, &plan, scenarios, files, cfg, ProfitMode::Expected)?.total();
        Ok(StageOneCandidate {
            decision,
            plan,
            objective,
            repairs,
            run,
        })
    })?;
    let objectives: Vec<f64> = candidates.iter().map(|c| c.objective).collect();
    let best = best_index(&objectives);
    let iterations = candidates.iter().map(|c| c.run.iterations).sum();
    let exhausted = candidates.iter().any(|c| c.run.exhausted);
    let mut c = candidates.into_iter().nth(best).expect("at least one start");

    let mut from_incumbent = false;
    for inc in incumbents {
        if inc.decision.len() != n || !check_stage_one_feasible(&inc.decision, files, cfg)?.is_feasible() {
            continue;
        }
        let plan = plan_for(&inc.decision, &inc.plan, scenarios, files, cfg, opts)?;
        let objective = model::profit(&inc.decision, &plan, scenarios, files, cfg, ProfitMode::Expected)?.total();
        if objective > c.objective {
            c.decision = inc.decision.clone();
            c.plan = plan;
            c.objective = objective;
            c.repairs = 0;
            from_incumbent = true;
        }
    }
    let better = local::improve(c.decision, c.plan, c.objective, scenarios, files, cfg)?;
    c.decision = better.decision;
    c.plan = better.plan;
    c.objective = better.objective;

    let relaxed = RelaxedStageOne {
        accept: (0..n).map(|i| c.run.x[i * bs]).collect(),
        hot_replica: (0..n).map(|i| c.run.x[i * bs + 1]).collect(),
    };
    let relaxed_plan: Vec<RelaxedStageTwo> = (0..scenarios.len())
        .map(|s| {
            let (oh, op) = problem.access_offsets(s);
            RelaxedStageTwo {
                accept_access: (0..n).map(|i| c.run.x[i * bs + oh]).collect(),
                sched_prob: (0..n)
                    .map(|i| {
                        let (h, p) = (c.run.x[i * bs + oh], c.run.x[i * bs + op]);
                        [(h - p).max(0.0), p]
                    })
                    .collect(),
            }
        })
        .collect();
    let relaxed_objective: f64 = c.run.x.iter().zip(&problem.lin).map(|(x, l)| x * l).sum();

    let mut reports = vec![check_stage_one_feasible(&c.decision, files, cfg)?];
    for (sc, d2) in scenarios.iter().zip(&c.plan) {
        reports.push(check_stage_two_feasible(d2, &c.decision, sc, files, cfg)?);
    }
    let report = SolveReport {
        objective: c.objective,
        relaxed_objective,
        iterations,
        starts: opts.multistarts,
        best_start: best,
        kkt_residual: c.run.kkt,
        relaxed_violation: c.run.violation,
        min_slacks: min_slacks(&reports),
        integrality_trace: c.run.trace.clone(),
        repairs: c.repairs,
        from_incumbent,
        budget_exhausted: exhausted,
        wall_time_s: t0.elapsed().as_secs_f64(),
    };
    Ok(StageOneSolution {
        decision: c.decision,
        plan: c.plan,
        relaxed,
        relaxed_plan,
        report,
    })
}

/// Solves the access decision of one slot given the storage decision.
pub fn solve_stage_two(
    d1: &StageOneDecision,
    sc: &Scenario,
    files: &[FileSpec],
    cfg: &SystemConfig,
    opts: &SolverOptions,
) -> Result<StageTwoSolution> {
    let t0 = Instant::now();
    cfg.validate()?;
    opts.validate()?;
    validate_slot(files, sc)?;
    d1.check_dims(files.len())?;
    let problem = Problem::stage_two(files, d1, sc, cfg);
    let stop = deadline(opts, t0);
    let n = files.len();
    let candidates = run_starts(opts, |start| {
        let run = run_relaxed(&problem, cfg, opts, start, stop);
        let h: Vec<f64> = (0..n).map(|i| run.x[2 * i]).collect();
        let p: Vec<f64> = (0..n).map(|i| run.x[2 * i + 1]).collect();
        let (d2, repairs) = rounding::round_stage_two(&h, &p, d1, sc, files, cfg)?;
        let objective = model::accepted_bids(&d2, sc);
        Ok((d2, objective, repairs, run))
    })?;
    let objectives: Vec<f64> = candidates.iter().map(|c| c.1).collect();
    let best = best_index(&objectives);
    let iterations = candidates.iter().map(|c| c.3.iterations).sum();
    let exhausted = candidates.iter().any(|c| c.3.exhausted);
    let (decision, objective, repairs, run) = candidates.into_iter().nth(best).expect("at least one start");
    let relaxed = RelaxedStageTwo {
        accept_access: (0..n).map(|i| run.x[2 * i]).collect(),
        sched_prob: (0..n)
            .map(|i| [(run.x[2 * i] - run.x[2 * i + 1]).max(0.0), run.x[2 * i + 1]])
            .collect(),
    };
    let relaxed_objective = (0..n).map(|i| run.x[2 * i] * sc.access_bid_cents[i]).sum();
    let feas = check_stage_two_feasible(&decision, d1, sc, files, cfg)?;
    let report = SolveReport {
        objective,
        relaxed_objective,
        iterations,
        starts: opts.multistarts,
        best_start: best,
        kkt_residual: run.kkt,
        relaxed_violation: run.violation,
        min_slacks: min_slacks(std::slice::from_ref(&feas)),
        integrality_trace: run.trace,
        repairs,
        from_incumbent: false,
        budget_exhausted: exhausted,
        wall_time_s: t0.elapsed().as_secs_f64(),
    };
    Ok(StageTwoSolution { decision, relaxed, report })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> SolverOptions {
        SolverOptions {
            multistarts: 4,
            parallel: false,
            ..SolverOptions::default()
        }
    }

    fn scenario(n: usize, q: f64, l_ms: f64, lam: f64) -> Scenario {
        Scenario {
            index: 0,
            probability: 1.0,
            access_bid_cents: vec![q; n],
            latency_req_ms: vec![l_ms; n],
            arrival_rate_per_s: vec![lam; n],
        }
    }

    #[test]
    fn profitable_single_file_is_accepted_without_replica() {
        let files = vec![FileSpec {
            id: 0,
            size_mb: 64.0,
            storage_bid_cents: 16.0,
        }];
        let scs = vec![scenario(1, 10.0, 50.0, 1.0)];
        let cfg = SystemConfig {
            num_slots: 1,
            ..SystemConfig::default()
        };
        let sol = solve_stage_one(&files, &scs, &cfg, &quick()).unwrap();
        assert_eq!(sol.decision.accept, vec![true]);
        assert_eq!(sol.decision.hot_replica, vec![false]);
        assert!(sol.plan[0].accept_access[0]);
        assert!((sol.report.objective - 19.6).abs() < 1e-9);
    }

    #[test]
    fn unprofitable_file_is_rejected() {
        let files = vec![FileSpec {
            id: 0,
            size_mb: 1000.0,
            storage_bid_cents: 1.0,
        }];
        let scs = vec![scenario(1, 0.0, 50.0, 0.0)];
        let sol = solve_stage_one(&files, &scs, &SystemConfig::default(), &quick()).unwrap();
        assert_eq!(sol.decision.accept, vec![false]);
        assert_eq!(sol.report.objective, 0.0);
    }

    #[test]
    fn storage_only_problem_is_supported() {
        let files: Vec<FileSpec> = (0..5)
            .map(|i| FileSpec {
                id: i,
                size_mb: 100.0,
                storage_bid_cents: if i % 2 == 0 { 20.0 } else { 5.0 },
            })
            .collect();
        let sol = solve_stage_one(&files, &[], &SystemConfig::default(), &quick()).unwrap();
        assert_eq!(sol.decision.accept, vec![true, false, true, false, true]);
        assert!(sol.plan.is_empty());
    }

    #[test]
    fn tight_capacity_keeps_the_best_files() {
        let files: Vec<FileSpec> = (0..4)
            .map(|i| FileSpec {
                id: i,
                size_mb: 100.0,
                storage_bid_cents: 20.0 + 10.0 * i as f64,
            })
            .collect();
        let cfg = SystemConfig {
            cold_capacity_mb: 400.0,
            hot_capacity_mb: 1.0,
            ..SystemConfig::default()
        };
        let sol = solve_stage_one(&files, &[], &cfg, &quick()).unwrap();
        assert_eq!(sol.decision.accept, vec![false, false, true, true]);
        assert!(sol.decision.cold_usage_mb(&files) <= 400.0);
    }

    #[test]
    fn stage_two_respects_storage_decision() {
        let files: Vec<FileSpec> = (0..3)
            .map(|i| FileSpec {
                id: i,
                size_mb: 64.0,
                storage_bid_cents: 10.0,
            })
            .collect();
        let d1 = StageOneDecision {
            accept: vec![true, false, true],
            hot_replica: vec![false; 3],
        };
        let sc = scenario(3, 2.0, 100.0, 1.0);
        let sol = solve_stage_two(&d1, &sc, &files, &SystemConfig::default(), &quick()).unwrap();
        assert_eq!(sol.decision.accept_access, vec![true, false, true]);
        assert_eq!(sol.report.objective, 4.0);
    }

    #[test]
    fn integrality_trace_is_nondecreasing_and_ends_integral() {
        let files: Vec<FileSpec> = (0..6)
            .map(|i| FileSpec {
                id: i,
                size_mb: 64.0 * (1 + i % 3) as f64,
                storage_bid_cents: 8.0 + 3.0 * i as f64,
            })
            .collect();
        let mut sc = scenario(6, 1.5, 80.0, 10.0);
        sc.access_bid_cents = (0..6).map(|i| 0.5 + i as f64).collect();
        let cfg = SystemConfig {
            cold_capacity_mb: 900.0,
            hot_capacity_mb: 300.0,
            cold_rate_mbps: 20_000.0,
            hot_rate_mbps: 30_000.0,
            ..SystemConfig::default()
        };
        let sol = solve_stage_one(&files, &[sc], &cfg, &quick()).unwrap();
        let trace = &sol.report.integrality_trace;
        assert!(trace.windows(2).all(|w| w[1] >= w[0] - 1e-12), "{trace:?}");
        assert!(*trace.last().unwrap() > 0.9, "{trace:?}");
    }

    #[test]
    fn invalid_options_are_rejected() {
        let files = vec![FileSpec {
            id: 0,
            size_mb: 1.0,
            storage_bid_cents: 1.0,
        }];
        let bad = SolverOptions {
            multistarts: 0,
            ..SolverOptions::default()
        };
        assert!(solve_stage_one(&files, &[], &SystemConfig::default(), &bad).is_err());
        let bad = SolverOptions {
            alpha_schedule: vec![1.0],
            ..SolverOptions::default()
        };
        assert!(solve_stage_one(&files, &[], &SystemConfig::default(), &bad).is_err());
    }
}
