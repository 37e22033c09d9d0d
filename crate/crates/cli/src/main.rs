use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use tierbid_core::baselines::{self, GreedyRule};
use tierbid_core::des::{self, DesClass, DesConfig};
use tierbid_core::harness::{self, ExperimentPlan, Method, ReportFormat, SweepVariable};
use tierbid_core::latency::{self, TierLoad};
use tierbid_core::model::{self, FileSpec, ProfitBreakdown, ProfitMode, Scenario, StageOneDecision, StageTwoDecision, SystemConfig};
use tierbid_core::scenario::{GeneratorSpec, ScenarioSet};
use tierbid_core::solver::{self, SolverOptions};
use tierbid_core::{Error, Result, Tier};

#[derive(Parser)]
#[command(name = "tierbid", version, about = "Two-stage bidding for tiered cloud storage")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate files and scenarios and write them as JSON.
    Generate(GenerateArgs),
    /// Solve one instance with one method.
    Solve(SolveArgs),
    /// Run an experiment plan and write results, summary and plot data.
    Sweep(SweepArgs),
    /// Write a built-in experiment plan as TOML.
    Plan(PlanArgs),
    /// Simulate one tier and compare with the closed-form waiting time.
    ValidateQueue(QueueArgs),
    /// Solve a tiny instance exactly by enumeration.
    Oracle(OracleArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => ReportFormat::Csv,
            Format::Json => ReportFormat::Json,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Pm,
    Is,
    Gh1,
    Gh2,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Pm => Method::Pm,
            MethodArg::Is => Method::Is,
            MethodArg::Gh1 => Method::Gh1,
            MethodArg::Gh2 => Method::Gh2,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    DeskColdCapacity,
    DeskHotRate,
    DeskHotCost,
    DeskColdCost,
    FullColdCapacity,
    FullHotRate,
    FullHotCost,
    FullColdCost,
}

impl Preset {
    fn plan(self) -> ExperimentPlan {
        use SweepVariable::*;
        match self {
            Self::DeskColdCapacity => ExperimentPlan::desk(ColdCapacity),
            Self::DeskHotRate => ExperimentPlan::desk(HotRate),
            Self::DeskHotCost => ExperimentPlan::desk(HotCost),
            Self::DeskColdCost => ExperimentPlan::desk(ColdCost),
            Self::FullColdCapacity => ExperimentPlan::full(ColdCapacity),
            Self::FullHotRate => ExperimentPlan::full(HotRate),
            Self::FullHotCost => ExperimentPlan::full(HotCost),
            Self::FullColdCost => ExperimentPlan::full(ColdCost),
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// Generator settings (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    files: Option<usize>,
    #[arg(long)]
    scenarios: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

/// System and solver settings read by `solve` and `oracle`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
struct SolveConfig {
    system: SystemConfig,
    solver: SolverOptions,
}

#[derive(Args)]
struct SolveArgs {
    /// Instance written by `generate`.
    #[arg(long)]
    instance: PathBuf,
    /// System and solver settings (TOML with `[system]` and `[solver]`).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "pm")]
    method: MethodArg,
    /// Solver seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct SweepArgs {
    /// Experiment plan (TOML).
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Overrides the plan's seed base.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the plan's runs per point.
    #[arg(long)]
    runs: Option<usize>,
    /// Restricts the plan to one method.
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Format of the per-run results file.
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long, value_enum)]
    preset: Preset,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct QueueArgs {
    /// Simulation settings (TOML); the flags below are ignored when given.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Service rate, Mb/s.
    #[arg(long, default_value_t = 2000.0)]
    mu: f64,
    /// Request class as `rate_per_s:megabits`; repeatable.
    #[arg(long = "class", value_parser = parse_class, default_value = "10:100")]
    classes: Vec<DesClass>,
    #[arg(long, default_value_t = 1_000_000)]
    horizon: u64,
    #[arg(long, default_value_t = 0.1)]
    warmup: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Hot-share grid resolution.
    #[arg(long, default_value_t = 32)]
    grid: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

fn parse_class(s: &str) -> std::result::Result<DesClass, String> {
    let (rate, mb) = s.split_once(':').ok_or_else(|| format!("expected rate:megabits, got {s:?}"))?;
    Ok(DesClass {
        rate_per_s: rate.trim().parse().map_err(|e| format!("bad rate {rate:?}: {e}"))?,
        megabits: mb.trim().parse().map_err(|e| format!("bad size {mb:?}: {e}"))?,
    })
}

fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(toml::from_str(&fs::read_to_string(path)?)?)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(p, text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn csv_text<S: Serialize>(rows: &[S]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Serialize)]
struct FileRow {
    file: usize,
    size_mb: f64,
    storage_bid_cents: f64,
    accepted: bool,
    hot_replica: bool,
    scenario: usize,
    access_bid_cents: f64,
    access_accepted: bool,
    cold_share: f64,
    hot_share: f64,
}

fn decision_rows(files: &[FileSpec], scenarios: &[Scenario], d1: &StageOneDecision, plan: &[StageTwoDecision]) -> Vec<FileRow> {
    let mut rows = Vec::new();
    for (k, (sc, d2)) in scenarios.iter().zip(plan).enumerate() {
        for (i, f) in files.iter().enumerate() {
            rows.push(FileRow {
                file: f.id,
                size_mb: f.size_mb,
                storage_bid_cents: f.storage_bid_cents,
                accepted: d1.accept[i],
                hot_replica: d1.hot_replica[i],
                scenario: k,
                access_bid_cents: sc.access_bid_cents[i],
                access_accepted: d2.accept_access[i],
                cold_share: d2.sched_prob[i][0],
                hot_share: d2.sched_prob[i][1],
            });
        }
    }
    rows
}

#[derive(Serialize)]
struct SolveOutput {
    method: Method,
    expected_profit: f64,
    breakdown: ProfitBreakdown,
    stage_one: StageOneDecision,
    plan: Vec<StageTwoDecision>,
    report: Option<solver::SolveReport>,
}

fn solve_method(
    method: Method,
    files: &[FileSpec],
    scenarios: &[Scenario],
    cfg: &SystemConfig,
    opts: &SolverOptions,
) -> Result<(StageOneDecision, Vec<StageTwoDecision>, Option<solver::SolveReport>)> {
    match method {
        Method::Pm => {
            let sol = solver::solve_stage_one(files, scenarios, cfg, opts)?;
            Ok((sol.decision, sol.plan, Some(sol.report)))
        }
        Method::Is => {
            let sol = baselines::solve_is(files, scenarios, cfg, opts)?;
            let plan = sol.plan.into_iter().map(|s| s.decision).collect();
            Ok((sol.stage_one.decision, plan, Some(sol.stage_one.report)))
        }
        Method::Gh1 | Method::Gh2 => {
            let rule = if method == Method::Gh1 {
                GreedyRule::PerSize
            } else {
                GreedyRule::PerRate
            };
            let first = solver::solve_stage_one(files, &[], cfg, opts)?;
            let plan = scenarios
                .iter()
                .map(|sc| baselines::solve_gh(files, &first.decision, sc, cfg, rule))
                .collect::<Result<Vec<_>>>()?;
            Ok((first.decision, plan, Some(first.report)))
        }
    }
}

fn solve_config(path: Option<&Path>, seed: Option<u64>) -> Result<SolveConfig> {
    let mut cfg: SolveConfig = match path {
        Some(p) => read_toml(p)?,
        None => SolveConfig::default(),
    };
    if let Some(s) = seed {
        cfg.solver.seed = s;
    }
    cfg.system.validate()?;
    cfg.solver.validate()?;
    Ok(cfg)
}

fn run_generate(a: GenerateArgs) -> Result<()> {
    let mut spec: GeneratorSpec = match &a.config {
        Some(p) => read_toml(p)?,
        None => GeneratorSpec::default(),
    };
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    if let Some(n) = a.files {
        spec.num_files = n;
    }
    if let Some(k) = a.scenarios {
        spec.num_scenarios = k;
    }
    let set = ScenarioSet::generate(&spec)?;
    let text = match a.format {
        Format::Json => set.to_json()? + "\n",
        Format::Csv => {
            #[derive(Serialize)]
            struct Row {
                scenario: usize,
                probability: f64,
                file: usize,
                size_mb: f64,
                storage_bid_cents: f64,
                arrival_rate_per_s: f64,
                latency_req_ms: f64,
                access_bid_cents: f64,
            }
            let rows: Vec<Row> = set
                .scenarios
                .iter()
                .flat_map(|sc| {
                    set.files.iter().enumerate().map(move |(i, f)| Row {
                        scenario: sc.index,
                        probability: sc.probability,
                        file: f.id,
                        size_mb: f.size_mb,
                        storage_bid_cents: f.storage_bid_cents,
                        arrival_rate_per_s: sc.arrival_rate_per_s[i],
                        latency_req_ms: sc.latency_req_ms[i],
                        access_bid_cents: sc.access_bid_cents[i],
                    })
                })
                .collect();
            csv_text(&rows)?
        }
    };
    emit(a.out.as_deref(), &text)
}

fn run_solve(a: SolveArgs) -> Result<()> {
    let set = ScenarioSet::read(&a.instance)?;
    let cfg = solve_config(a.config.as_deref(), a.seed)?;
    let method = Method::from(a.method);
    let (d1, plan, report) = solve_method(method, &set.files, &set.scenarios, &cfg.system, &cfg.solver)?;
    let breakdown = model::profit(&d1, &plan, &set.scenarios, &set.files, &cfg.system, ProfitMode::Expected)?;
    let text = match a.format {
        Format::Json => {
            let out = SolveOutput {
                method,
                expected_profit: breakdown.total(),
                breakdown,
                stage_one: d1,
                plan,
                report,
            };
            serde_json::to_string_pretty(&out)? + "\n"
        }
        Format::Csv => csv_text(&decision_rows(&set.files, &set.scenarios, &d1, &plan))?,
    };
    eprintln!("{}: expected profit {:.3} cents", method.name(), breakdown.total());
    emit(a.out.as_deref(), &text)
}

fn run_sweep(a: SweepArgs) -> Result<()> {
    let mut plan = match (&a.config, a.preset) {
        (Some(p), _) => ExperimentPlan::read(p)?,
        (None, Some(preset)) => preset.plan(),
        (None, None) => unreachable!("clap requires --config or --preset"),
    };
    if let Some(s) = a.seed {
        plan.seed_base = s;
    }
    if let Some(r) = a.runs {
        plan.runs = r;
    }
    if let Some(m) = a.method {
        plan.methods = vec![m.into()];
    }
    let (results, files) = harness::run_sweep(&plan, &a.out, a.format.into())?;
    let failed = results.iter().filter(|r| !r.is_ok()).count();
    eprintln!("{} rows ({} failed) written to {}", results.len(), failed, files.results.display());
    Ok(())
}

fn run_plan(a: PlanArgs) -> Result<()> {
    emit(a.out.as_deref(), &a.preset.plan().to_toml()?)
}

#[derive(Serialize)]
struct QueueOutput {
    offered_load_mbps: f64,
    utilization: f64,
    analytic_wait_s: f64,
    simulated_wait_s: f64,
    ci_halfwidth_s: f64,
    relative_error: f64,
    simulation: des::DesResult,
}

fn run_validate_queue(a: QueueArgs) -> Result<()> {
    let cfg = match &a.config {
        Some(p) => read_toml(p)?,
        None => DesConfig {
            tier: Tier::Cold,
            mu_mbps: a.mu,
            classes: a.classes.clone(),
            horizon_requests: a.horizon,
            warmup_fraction: a.warmup,
            seed: a.seed,
        },
    };
    let sim = des::simulate_tier(&cfg)?;
    let load = TierLoad::from_classes(&cfg.classes.iter().map(|c| (c.rate_per_s, c.megabits)).collect::<Vec<_>>());
    let analytic = latency::waiting_time(&load, cfg.mu_mbps)?;
    let out = QueueOutput {
        offered_load_mbps: load.f_mbps,
        utilization: load.utilization(cfg.mu_mbps),
        analytic_wait_s: analytic,
        simulated_wait_s: sim.mean_wait_s,
        ci_halfwidth_s: sim.ci_halfwidth,
        relative_error: if analytic > 0.0 {
            (sim.mean_wait_s - analytic).abs() / analytic
        } else {
            sim.mean_wait_s
        },
        simulation: sim,
    };
    let text = match a.format {
        Format::Json => serde_json::to_string_pretty(&out)? + "\n",
        Format::Csv => {
            #[derive(Serialize)]
            struct Row {
                class: usize,
                rate_per_s: f64,
                megabits: f64,
                requests: u64,
                analytic_latency_s: f64,
                simulated_latency_s: Option<f64>,
            }
            let rows: Vec<Row> = cfg
                .classes
                .iter()
                .enumerate()
                .map(|(i, c)| Row {
                    class: i,
                    rate_per_s: c.rate_per_s,
                    megabits: c.megabits,
                    requests: out.simulation.requests_per_class[i],
                    analytic_latency_s: c.megabits / cfg.mu_mbps + analytic,
                    simulated_latency_s: out.simulation.mean_latency_per_file_s[i],
                })
                .collect();
            csv_text(&rows)?
        }
    };
    eprintln!(
        "utilization {:.3}: simulated wait {:.6} s, closed form {:.6} s",
        out.utilization, out.simulated_wait_s, out.analytic_wait_s
    );
    emit(a.out.as_deref(), &text)
}

fn run_oracle(a: OracleArgs) -> Result<()> {
    let set = ScenarioSet::read(&a.instance)?;
    let cfg = solve_config(a.config.as_deref(), a.seed)?;
    let sol = solver::brute_force_oracle(&set.files, &set.scenarios, &cfg.system, a.grid)?;
    let text = match a.format {
        Format::Json => serde_json::to_string_pretty(&sol)? + "\n",
        Format::Csv => csv_text(&decision_rows(&set.files, &set.scenarios, &sol.decision, &sol.plan))?,
    };
    eprintln!("oracle: expected profit {:.3} cents", sol.profit);
    emit(a.out.as_deref(), &text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Generate(a) => run_generate(a),
        Command::Solve(a) => run_solve(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Plan(a) => run_plan(a),
        Command::ValidateQueue(a) => run_validate_queue(a),
        Command::Oracle(a) => run_oracle(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
