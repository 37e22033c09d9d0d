//! Domain types, the linear constraints of both stages, and profit.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::latency;
use crate::units;

/// Premium storage tier. Every accepted file keeps its original copy in cold
/// storage; the replica lives in cold or hot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    Cold,
    Hot,
}

impl Tier {
    pub const ALL: [Tier; 2] = [Tier::Cold, Tier::Hot];

    #[inline]
    pub fn index(self) -> usize {
        match self {
            Tier::Cold => 0,
            Tier::Hot => 1,
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tier::Cold => "cold",
            Tier::Hot => "hot",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SystemConfig {
    pub cold_capacity_mb: f64,
    pub hot_capacity_mb: f64,
    pub cold_rate_mbps: f64,
    pub hot_rate_mbps: f64,
    pub cold_cost_cents_per_mb: f64,
    pub hot_cost_cents_per_mb: f64,
    /// Second-stage auction slots per first-stage period.
    pub num_slots: u32,
    /// Stability is enforced as load <= (1 - margin) * rate.
    pub stability_margin: f64,
    /// Capacities and rates are shrunk by this factor during the relaxed solve.
    pub restriction_eps: f64,
    pub penalty_alpha: f64,
    pub penalty_weight: f64,
}

impl Default for SystemConfig {
    /// 400 GB cold, 200 GB hot, 100/200 Gb/s, 50/80 cents per GB, 20 slots.
    fn default() -> Self {
        Self {
            cold_capacity_mb: units::gb_to_mb(400.0),
            hot_capacity_mb: units::gb_to_mb(200.0),
            cold_rate_mbps: units::gbps_to_mbps(100.0),
            hot_rate_mbps: units::gbps_to_mbps(200.0),
            cold_cost_cents_per_mb: units::cents_per_gb_to_per_mb(50.0),
            hot_cost_cents_per_mb: units::cents_per_gb_to_per_mb(80.0),
            num_slots: 20,
            stability_margin: 1e-6,
            restriction_eps: 1e-3,
            penalty_alpha: 1e6,
            penalty_weight: 1e9,
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("cold_capacity_mb", self.cold_capacity_mb),
            ("hot_capacity_mb", self.hot_capacity_mb),
            ("cold_rate_mbps", self.cold_rate_mbps),
            ("hot_rate_mbps", self.hot_rate_mbps),
            ("cold_cost_cents_per_mb", self.cold_cost_cents_per_mb),
            ("hot_cost_cents_per_mb", self.hot_cost_cents_per_mb),
            ("penalty_alpha", self.penalty_alpha),
            ("penalty_weight", self.penalty_weight),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if self.num_slots < 1 {
            return Err(Error::InvalidConfig("num_slots must be at least 1".into()));
        }
        for (name, v) in [
            ("stability_margin", self.stability_margin),
            ("restriction_eps", self.restriction_eps),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidConfig(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn capacity_mb(&self, tier: Tier) -> f64 {
        match tier {
            Tier::Cold => self.cold_capacity_mb,
            Tier::Hot => self.hot_capacity_mb,
        }
    }

    #[inline]
    pub fn rate_mbps(&self, tier: Tier) -> f64 {
        match tier {
            Tier::Cold => self.cold_rate_mbps,
            Tier::Hot => self.hot_rate_mbps,
        }
    }

    #[inline]
    pub fn rates_mbps(&self) -> [f64; 2] {
        [self.cold_rate_mbps, self.hot_rate_mbps]
    }

    /// Largest admissible offered load on a tier.
    #[inline]
    pub fn stable_load_mbps(&self, tier: Tier) -> f64 {
        (1.0 - self.stability_margin) * self.rate_mbps(tier)
    }

    /// Copy with capacities and service rates shrunk by `restriction_eps`.
    pub fn restricted(&self) -> SystemConfig {
        let keep = 1.0 - self.restriction_eps;
        SystemConfig {
            cold_capacity_mb: self.cold_capacity_mb * keep,
            hot_capacity_mb: self.hot_capacity_mb * keep,
            cold_rate_mbps: self.cold_rate_mbps * keep,
            hot_rate_mbps: self.hot_rate_mbps * keep,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileSpec {
    pub id: usize,
    pub size_mb: f64,
    pub storage_bid_cents: f64,
}

impl FileSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.size_mb.is_finite() && self.size_mb > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "file {} has non-positive size {}",
                self.id, self.size_mb
            )));
        }
        if !(self.storage_bid_cents.is_finite() && self.storage_bid_cents >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "file {} has negative storage bid {}",
                self.id, self.storage_bid_cents
            )));
        }
        Ok(())
    }

    /// Request size in megabits.
    #[inline]
    pub fn megabits(&self) -> f64 {
        units::mb_to_megabits(self.size_mb)
    }
}

/// One joint realization of access bids, latency requirements and arrival
/// rates for every file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub index: usize,
    pub probability: f64,
    pub access_bid_cents: Vec<f64>,
    pub latency_req_ms: Vec<f64>,
    pub arrival_rate_per_s: Vec<f64>,
}

impl Scenario {
    pub fn num_files(&self) -> usize {
        self.access_bid_cents.len()
    }

    #[inline]
    pub fn latency_req_s(&self, i: usize) -> f64 {
        units::ms_to_s(self.latency_req_ms[i])
    }

    pub fn validate(&self, num_files: usize) -> Result<()> {
        for (what, v) in [
            ("access_bid_cents", &self.access_bid_cents),
            ("latency_req_ms", &self.latency_req_ms),
            ("arrival_rate_per_s", &self.arrival_rate_per_s),
        ] {
            if v.len() != num_files {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: num_files,
                    got: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(what));
            }
        }
        if !(0.0..=1.0).contains(&self.probability) {
            return Err(Error::InvalidConfig(format!(
                "scenario {} probability {} outside [0, 1]",
                self.index, self.probability
            )));
        }
        if self.access_bid_cents.iter().any(|&q| q < 0.0)
            || self.arrival_rate_per_s.iter().any(|&l| l < 0.0)
            || self.latency_req_ms.iter().any(|&l| l <= 0.0)
        {
            return Err(Error::InvalidConfig(format!(
                "scenario {} has a negative bid, negative rate or non-positive latency requirement",
                self.index
            )));
        }
        Ok(())
    }
}

/// Checks the files and a single scenario, whose probability need not be one.
pub fn validate_slot(files: &[FileSpec], sc: &Scenario) -> Result<()> {
    for f in files {
        f.validate()?;
    }
    sc.validate(files.len())
}

/// Checks dimensions, value ranges and that probabilities sum to one.
pub fn validate_instance(files: &[FileSpec], scenarios: &[Scenario]) -> Result<()> {
    for sc in scenarios {
        validate_slot(files, sc)?;
    }
    if scenarios.is_empty() {
        for f in files {
            f.validate()?;
        }
    }
    if !scenarios.is_empty() {
        let total: f64 = scenarios.iter().map(|s| s.probability).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!("scenario probabilities sum to {total}, expected 1")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageOneDecision {
    pub accept: Vec<bool>,
    pub hot_replica: Vec<bool>,
}

impl StageOneDecision {
    pub fn reject_all(n: usize) -> Self {
        Self {
            accept: vec![false; n],
            hot_replica: vec![false; n],
        }
    }

    pub fn len(&self) -> usize {
        self.accept.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accept.is_empty()
    }

    pub fn num_accepted(&self) -> usize {
        self.accept.iter().filter(|&&a| a).count()
    }

    pub fn num_hot(&self) -> usize {
        self.hot_replica.iter().filter(|&&r| r).count()
    }

    /// Megabytes used in cold storage: two copies unless the replica is hot.
    pub fn cold_usage_mb(&self, files: &[FileSpec]) -> f64 {
        files
            .iter()
            .zip(self.accept.iter().zip(&self.hot_replica))
            .map(|(f, (&a, &r))| f.size_mb * (2.0 * b2f(a) - b2f(r)))
            .sum()
    }

    pub fn hot_usage_mb(&self, files: &[FileSpec]) -> f64 {
        files.iter().zip(&self.hot_replica).map(|(f, &r)| f.size_mb * b2f(r)).sum()
    }

    pub(crate) fn check_dims(&self, n: usize) -> Result<()> {
        check_len("accept", n, self.accept.len())?;
        check_len("hot_replica", n, self.hot_replica.len())
    }
}

/// Access acceptance and scheduling for one scenario or slot.
/// `sched_prob[i]` is `[cold, hot]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTwoDecision {
    pub accept_access: Vec<bool>,
    pub sched_prob: Vec<[f64; 2]>,
}

impl StageTwoDecision {
    pub fn reject_all(n: usize) -> Self {
        Self {
            accept_access: vec![false; n],
            sched_prob: vec![[0.0; 2]; n],
        }
    }

    pub fn len(&self) -> usize {
        self.accept_access.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accept_access.is_empty()
    }

    pub fn num_accepted(&self) -> usize {
        self.accept_access.iter().filter(|&&h| h).count()
    }

    pub(crate) fn check_dims(&self, n: usize) -> Result<()> {
        check_len("accept_access", n, self.accept_access.len())?;
        check_len("sched_prob", n, self.sched_prob.len())?;
        if self.sched_prob.iter().flatten().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("sched_prob"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    /// Cold-storage capacity.
    ColdCapacity,
    /// Hot-storage capacity.
    HotCapacity,
    /// A hot replica requires an accepted file.
    ReplicaNeedsAccept,
    /// An accepted access requires an accepted file.
    AccessNeedsAccept,
    /// Hot scheduling requires a hot replica.
    HotNeedsReplica,
    /// Scheduling probabilities sum to the access decision.
    ScheduleSum,
    /// Scheduling probabilities lie in [0, 1].
    ScheduleRange,
    /// Offered load below the tier's service rate.
    Stability(Tier),
    /// Expected latency of an accepted file within its requirement.
    Latency,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slack {
    pub constraint: Constraint,
    /// File index for per-file constraints.
    pub file: Option<usize>,
    /// Non-negative when satisfied. Units follow the constraint (MB, Mb/s, s).
    pub slack: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub slacks: Vec<Slack>,
}

/// Equality of scheduling probabilities to the access decision is checked to
/// this absolute tolerance; 1 - p + p need not round-trip exactly.
pub const SCHEDULE_SUM_TOL: f64 = 1e-12;

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.slacks.iter().all(|s| s.slack >= 0.0)
    }

    pub fn violations(&self) -> impl Iterator<Item = &Slack> {
        self.slacks.iter().filter(|s| s.slack < 0.0)
    }

    pub fn slack_of(&self, constraint: Constraint) -> Option<f64> {
        self.slacks
            .iter()
            .filter(|s| s.constraint == constraint)
            .map(|s| s.slack)
            .reduce(f64::min)
    }

    fn push(&mut self, constraint: Constraint, file: Option<usize>, slack: f64) {
        self.slacks.push(Slack { constraint, file, slack });
    }
}

/// Constraints on storage: cold capacity, hot capacity, and replica only
/// for accepted files.
pub fn check_stage_one_feasible(d: &StageOneDecision, files: &[FileSpec], cfg: &SystemConfig) -> Result<FeasibilityReport> {
    d.check_dims(files.len())?;
    let mut report = FeasibilityReport::default();
    report.push(Constraint::ColdCapacity, None, cfg.cold_capacity_mb - d.cold_usage_mb(files));
    report.push(Constraint::HotCapacity, None, cfg.hot_capacity_mb - d.hot_usage_mb(files));
    for (i, (&a, &r)) in d.accept.iter().zip(&d.hot_replica).enumerate() {
        report.push(Constraint::ReplicaNeedsAccept, Some(i), b2f(a) - b2f(r));
    }
    Ok(report)
}

/// Constraints on one slot's access decision given the storage decision:
/// access only for stored files, hot only with a hot replica, probabilities
/// summing to the access decision, tier stability, and latency.
pub fn check_stage_two_feasible(
    d2: &StageTwoDecision,
    d1: &StageOneDecision,
    sc: &Scenario,
    files: &[FileSpec],
    cfg: &SystemConfig,
) -> Result<FeasibilityReport> {
    let n = files.len();
    d1.check_dims(n)?;
    d2.check_dims(n)?;
    sc.validate(n)?;

    let mut report = FeasibilityReport::default();
    for i in 0..n {
        let h = b2f(d2.accept_access[i]);
        let [p_cold, p_hot] = d2.sched_prob[i];
        report.push(Constraint::AccessNeedsAccept, Some(i), b2f(d1.accept[i]) - h);
        report.push(Constraint::HotNeedsReplica, Some(i), b2f(d1.hot_replica[i]) - p_hot);
        let range = p_cold.min(p_hot).min(1.0 - p_cold).min(1.0 - p_hot);
        report.push(Constraint::ScheduleRange, Some(i), range);
        report.push(Constraint::ScheduleSum, Some(i), SCHEDULE_SUM_TOL - (p_cold + p_hot - h).abs());
    }

    let loads = latency::tier_loads(&d2.sched_prob, sc, files);
    let mut stable = [true; 2];
    for tier in Tier::ALL {
        let slack = cfg.stable_load_mbps(tier) - loads[tier.index()].f_mbps;
        stable[tier.index()] = loads[tier.index()].f_mbps < cfg.rate_mbps(tier);
        report.push(Constraint::Stability(tier), None, slack);
    }

    let waits = [
        stable[0].then(|| latency::waiting_time(&loads[0], cfg.cold_rate_mbps)),
        stable[1].then(|| latency::waiting_time(&loads[1], cfg.hot_rate_mbps)),
    ];
    for i in 0..n {
        if !d2.accept_access[i] {
            continue;
        }
        let mut t = 0.0;
        let mut finite = true;
        for tier in Tier::ALL {
            let p = d2.sched_prob[i][tier.index()];
            if p == 0.0 {
                continue;
            }
            match &waits[tier.index()] {
                Some(Ok(w)) => t += p * (files[i].megabits() / cfg.rate_mbps(tier) + w),
                _ => finite = false,
            }
        }
        let slack = if finite { sc.latency_req_s(i) - t } else { f64::NEG_INFINITY };
        report.push(Constraint::Latency, Some(i), slack);
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ProfitBreakdown {
    pub storage_revenue: f64,
    pub storage_cost: f64,
    pub access_revenue: f64,
}

impl ProfitBreakdown {
    pub fn storage_profit(&self) -> f64 {
        self.storage_revenue - self.storage_cost
    }

    pub fn total(&self) -> f64 {
        self.storage_profit() + self.access_revenue
    }
}

/// How second-stage revenue is counted.
#[derive(Debug, Clone, Copy)]
pub enum ProfitMode<'a> {
    /// One decision per scenario, weighted `T * p^k`.
    Expected,
    /// One decision per slot; `slots[t]` is the scenario realized in slot `t`.
    Realized(&'a [usize]),
}

/// Storage revenue minus storage cost, plus access revenue.
pub fn profit(
    d1: &StageOneDecision,
    stage_two: &[StageTwoDecision],
    scenarios: &[Scenario],
    files: &[FileSpec],
    cfg: &SystemConfig,
    mode: ProfitMode<'_>,
) -> Result<ProfitBreakdown> {
    d1.check_dims(files.len())?;
    let mut out = storage_profit(d1, files, cfg);
    match mode {
        ProfitMode::Expected => {
            check_len("stage_two", scenarios.len(), stage_two.len())?;
            let t = cfg.num_slots as f64;
            for (sc, d2) in scenarios.iter().zip(stage_two) {
                d2.check_dims(files.len())?;
                out.access_revenue += t * sc.probability * accepted_bids(d2, sc);
            }
        }
        ProfitMode::Realized(slots) => {
            check_len("stage_two", slots.len(), stage_two.len())?;
            for (&k, d2) in slots.iter().zip(stage_two) {
                let sc = scenarios
                    .get(k)
                    .ok_or_else(|| Error::InvalidConfig(format!("slot refers to missing scenario {k}")))?;
                d2.check_dims(files.len())?;
                out.access_revenue += accepted_bids(d2, sc);
            }
        }
    }
    Ok(out)
}

pub fn storage_profit(d1: &StageOneDecision, files: &[FileSpec], cfg: &SystemConfig) -> ProfitBreakdown {
    let mut out = ProfitBreakdown::default();
    for (f, (&a, &r)) in files.iter().zip(d1.accept.iter().zip(&d1.hot_replica)) {
        let (a, r) = (b2f(a), b2f(r));
        out.storage_revenue += f.storage_bid_cents * a;
        out.storage_cost += f.size_mb * ((2.0 * a - r) * cfg.cold_cost_cents_per_mb + r * cfg.hot_cost_cents_per_mb);
    }
    out
}

/// Sum of accepted access bids in one scenario.
pub fn accepted_bids(d2: &StageTwoDecision, sc: &Scenario) -> f64 {
    d2.accept_access
        .iter()
        .zip(&sc.access_bid_cents)
        .filter(|(&h, _)| h)
        .map(|(_, &q)| q)
        .sum()
}

#[inline]
pub(crate) fn b2f(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { what, expected, got })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file(id: usize, size_mb: f64, bid: f64) -> FileSpec {
        FileSpec {
            id,
            size_mb,
            storage_bid_cents: bid,
        }
    }

    fn scenario(q: Vec<f64>, l_ms: Vec<f64>, lam: Vec<f64>) -> Scenario {
        Scenario {
            index: 0,
            probability: 1.0,
            access_bid_cents: q,
            latency_req_ms: l_ms,
            arrival_rate_per_s: lam,
        }
    }

    #[test]
    fn stage_one_two_small_files() {
        let files = vec![file(0, 1.0, 1.0), file(1, 1.0, 1.0)];
        let cfg = SystemConfig {
            cold_capacity_mb: 3.0,
            hot_capacity_mb: 1.0,
            ..SystemConfig::default()
        };
        let d = StageOneDecision {
            accept: vec![true, true],
            hot_replica: vec![true, false],
        };
        let rep = check_stage_one_feasible(&d, &files, &cfg).unwrap();
        assert!(rep.is_feasible());
        assert_eq!(d.cold_usage_mb(&files), 3.0);
        assert_eq!(d.hot_usage_mb(&files), 1.0);
        assert_eq!(rep.slack_of(Constraint::ColdCapacity), Some(0.0));
    }

    #[test]
    fn replica_without_accept_is_infeasible() {
        let files = vec![file(0, 1.0, 1.0), file(1, 1.0, 1.0)];
        let d = StageOneDecision {
            accept: vec![false, false],
            hot_replica: vec![true, false],
        };
        let rep = check_stage_one_feasible(&d, &files, &SystemConfig::default()).unwrap();
        assert!(!rep.is_feasible());
        let v: Vec<_> = rep.violations().collect();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].constraint, Constraint::ReplicaNeedsAccept);
        assert_eq!(v[0].file, Some(0));
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let files = vec![file(0, 1.0, 1.0)];
        let d = StageOneDecision::reject_all(2);
        assert!(matches!(
            check_stage_one_feasible(&d, &files, &SystemConfig::default()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn empty_access_is_feasible() {
        let files = vec![file(0, 64.0, 16.0), file(1, 128.0, 20.0)];
        let d1 = StageOneDecision {
            accept: vec![true, false],
            hot_replica: vec![false, false],
        };
        let d2 = StageTwoDecision::reject_all(2);
        let sc = scenario(vec![1.0, 2.0], vec![50.0, 60.0], vec![1.0, 1.0]);
        let rep = check_stage_two_feasible(&d2, &d1, &sc, &files, &SystemConfig::default()).unwrap();
        assert!(rep.is_feasible());
        assert!(rep.slacks.iter().all(|s| s.slack >= 0.0));
    }

    #[test]
    fn access_without_storage_is_infeasible() {
        let files = vec![file(0, 64.0, 16.0)];
        let d1 = StageOneDecision::reject_all(1);
        let d2 = StageTwoDecision {
            accept_access: vec![true],
            sched_prob: vec![[1.0, 0.0]],
        };
        let sc = scenario(vec![1.0], vec![1e6], vec![0.0]);
        let rep = check_stage_two_feasible(&d2, &d1, &sc, &files, &SystemConfig::default()).unwrap();
        assert!(!rep.is_feasible());
        assert!(rep.violations().any(|s| s.constraint == Constraint::AccessNeedsAccept));
    }

    #[test]
    fn nan_schedule_is_structural_error() {
        let files = vec![file(0, 64.0, 16.0)];
        let d1 = StageOneDecision {
            accept: vec![true],
            hot_replica: vec![false],
        };
        let d2 = StageTwoDecision {
            accept_access: vec![true],
            sched_prob: vec![[f64::NAN, 0.0]],
        };
        let sc = scenario(vec![1.0], vec![1e6], vec![0.0]);
        assert!(matches!(
            check_stage_two_feasible(&d2, &d1, &sc, &files, &SystemConfig::default()),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn stability_hand_evaluation() {
        // 8S = 100 Mb, lambda = 10/s: offered load 1000 Mb/s against 2000 Mb/s
        let files = vec![file(0, 12.5, 0.0)];
        let cfg = SystemConfig {
            cold_rate_mbps: 2000.0,
            stability_margin: 1e-12,
            ..SystemConfig::default()
        };
        let d1 = StageOneDecision {
            accept: vec![true],
            hot_replica: vec![false],
        };
        let d2 = StageTwoDecision {
            accept_access: vec![true],
            sched_prob: vec![[1.0, 0.0]],
        };
        let sc = scenario(vec![1.0], vec![1e6], vec![10.0]);
        let rep = check_stage_two_feasible(&d2, &d1, &sc, &files, &cfg).unwrap();
        assert!(rep.is_feasible());
        let slack = rep.slack_of(Constraint::Stability(Tier::Cold)).unwrap();
        assert!((slack - 1000.0).abs() < 1e-6);
    }

    #[test]
    fn overloaded_tier_fails_stability_and_latency() {
        let files = vec![file(0, 12.5, 0.0)];
        let cfg = SystemConfig {
            cold_rate_mbps: 900.0,
            ..SystemConfig::default()
        };
        let d1 = StageOneDecision {
            accept: vec![true],
            hot_replica: vec![false],
        };
        let d2 = StageTwoDecision {
            accept_access: vec![true],
            sched_prob: vec![[1.0, 0.0]],
        };
        let sc = scenario(vec![1.0], vec![1e6], vec![10.0]);
        let rep = check_stage_two_feasible(&d2, &d1, &sc, &files, &cfg).unwrap();
        assert!(!rep.is_feasible());
        assert_eq!(rep.slack_of(Constraint::Latency), Some(f64::NEG_INFINITY));
    }

    #[test]
    fn profit_nothing_accepted_is_zero() {
        let files = vec![file(0, 64.0, 16.0)];
        let sc = scenario(vec![10.0], vec![50.0], vec![1.0]);
        let p = profit(
            &StageOneDecision::reject_all(1),
            &[StageTwoDecision::reject_all(1)],
            &[sc],
            &files,
            &SystemConfig::default(),
            ProfitMode::Expected,
        )
        .unwrap();
        assert_eq!(p.total(), 0.0);
    }

    #[test]
    fn profit_single_file_substitution() {
        // 16 - 64 * 2 * 0.05 + 10 = 19.6
        let files = vec![file(0, 64.0, 16.0)];
        let cfg = SystemConfig {
            num_slots: 1,
            ..SystemConfig::default()
        };
        let sc = scenario(vec![10.0], vec![50.0], vec![1.0]);
        let d1 = StageOneDecision {
            accept: vec![true],
            hot_replica: vec![false],
        };
        let d2 = StageTwoDecision {
            accept_access: vec![true],
            sched_prob: vec![[1.0, 0.0]],
        };
        let p = profit(&d1, std::slice::from_ref(&d2), std::slice::from_ref(&sc), &files, &cfg, ProfitMode::Expected).unwrap();
        assert!((p.total() - 19.6).abs() < 1e-12);
        let realized = profit(&d1, &[d2], &[sc], &files, &cfg, ProfitMode::Realized(&[0])).unwrap();
        assert!((realized.total() - 19.6).abs() < 1e-12);
    }

    #[test]
    fn storage_bid_example() {
        // 64 MB at 0.25 cents per MB bids 16 cents
        assert_eq!(64.0 * 0.25, 16.0);
    }

    #[test]
    fn restricted_config_shrinks_capacity_and_rate_only() {
        let cfg = SystemConfig::default();
        let r = cfg.restricted();
        assert!((r.cold_capacity_mb - 399_600.0).abs() < 1e-6);
        assert!((r.hot_rate_mbps - 199_800.0).abs() < 1e-6);
        assert_eq!(r.cold_cost_cents_per_mb, cfg.cold_cost_cents_per_mb);
    }

    #[test]
    fn config_validation() {
        assert!(SystemConfig::default().validate().is_ok());
        let bad = SystemConfig {
            stability_margin: 1.0,
            ..SystemConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SystemConfig {
            num_slots: 0,
            ..SystemConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
