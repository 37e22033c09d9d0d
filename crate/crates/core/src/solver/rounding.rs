//! Rounding of relaxed solutions and repair of the rounded decisions.

use crate::error::Result;
use crate::latency;
use crate::model::{check_stage_two_feasible, Constraint, FileSpec, Scenario, StageOneDecision, StageTwoDecision, SystemConfig, Tier};

use super::problem::{ScenarioMultipliers, ScenarioTerms};
use super::spg::{self, Smooth, StepRule};

/// Values strictly above one half round up; one half rounds down.
#[inline]
pub(crate) fn round_half_down(x: f64) -> bool {
    x > 0.5
}

/// Rounds storage variables and repairs capacity: replicas with the
/// smallest relaxed value are dropped while hot storage overflows, then
/// files with the smallest relaxed acceptance while cold storage does.
/// Returns the decision and the number of repairs.
pub(crate) fn round_stage_one(accept: &[f64], replica: &[f64], files: &[FileSpec], cfg: &SystemConfig) -> (StageOneDecision, usize) {
    let a: Vec<bool> = accept.iter().map(|&v| round_half_down(v)).collect();
    let r: Vec<bool> = replica.iter().zip(&a).map(|(&v, &a)| a && round_half_down(v)).collect();
    let mut d = StageOneDecision { accept: a, hot_replica: r };
    let mut repairs = 0;
    while d.hot_usage_mb(files) > cfg.hot_capacity_mb {
        let victim = argmin_where(replica, |i| d.hot_replica[i]);
        d.hot_replica[victim] = false;
        repairs += 1;
    }
    while d.cold_usage_mb(files) > cfg.cold_capacity_mb {
        let victim = argmin_where(accept, |i| d.accept[i]);
        d.accept[victim] = false;
        d.hot_replica[victim] = false;
        repairs += 1;
    }
    (d, repairs)
}

/// Admits rejected files with a positive storage margin while capacity
/// lasts, best margin per MB first, each with its more profitable placement.
pub(crate) fn fill_storage(d: &mut StageOneDecision, files: &[FileSpec], cfg: &SystemConfig) {
    let margin = |i: usize, hot: bool| {
        let f = &files[i];
        if hot {
            f.storage_bid_cents - f.size_mb * (cfg.cold_cost_cents_per_mb + cfg.hot_cost_cents_per_mb)
        } else {
            f.storage_bid_cents - 2.0 * f.size_mb * cfg.cold_cost_cents_per_mb
        }
    };
    let best = |i: usize| margin(i, false).max(margin(i, true));
    let mut order: Vec<usize> = (0..files.len()).filter(|&i| !d.accept[i] && best(i) > 0.0).collect();
    order.sort_by(|&a, &b| {
        (best(b) / files[b].size_mb)
            .total_cmp(&(best(a) / files[a].size_mb))
            .then(files[a].id.cmp(&files[b].id))
    });
    for i in order {
        let mut options = [(margin(i, true), true), (margin(i, false), false)];
        options.sort_by(|a, b| b.0.total_cmp(&a.0));
        for (m, hot) in options {
            if m <= 0.0 {
                continue;
            }
            d.accept[i] = true;
            d.hot_replica[i] = hot;
            if d.cold_usage_mb(files) <= cfg.cold_capacity_mb && d.hot_usage_mb(files) <= cfg.hot_capacity_mb {
                break;
            }
            d.accept[i] = false;
            d.hot_replica[i] = false;
        }
    }
}

fn argmin_where(values: &[f64], keep: impl Fn(usize) -> bool) -> usize {
    let mut best = usize::MAX;
    for i in 0..values.len() {
        if keep(i) && (best == usize::MAX || values[i] < values[best]) {
            best = i;
        }
    }
    assert!(best != usize::MAX, "repair ran out of candidates");
    best
}

/// Rounds one scenario's access variables under `d1` and repairs until the
/// decision is feasible for the original (unrestricted) configuration.
pub(crate) fn round_stage_two(
    access: &[f64],
    hot_share: &[f64],
    d1: &StageOneDecision,
    sc: &Scenario,
    files: &[FileSpec],
    cfg: &SystemConfig,
) -> Result<(StageTwoDecision, usize)> {
    let n = files.len();
    let h: Vec<bool> = (0..n).map(|i| d1.accept[i] && round_half_down(access[i])).collect();
    let mut p: Vec<f64> = (0..n)
        .map(|i| {
            if h[i] && d1.hot_replica[i] {
                hot_share[i].clamp(0.0, 1.0)
            } else {
                0.0
            }
        })
        .collect();
    let mut d2 = assemble(&h, &p);
    let mut repairs = 0;
    let mut resolved = false;
    loop {
        let report = check_stage_two_feasible(&d2, d1, sc, files, cfg)?;
        if report.is_feasible() {
            fill_access(&mut d2, d1, sc, files, cfg);
            return Ok((d2, repairs));
        }
        if !resolved {
            resolve_schedule(&d2.accept_access, d1, sc, files, cfg, &mut p);
            d2 = assemble(&d2.accept_access, &p);
            resolved = true;
            repairs += 1;
            continue;
        }
        let victim = pick_drop(&d2, &report, sc, files);
        let mut h = d2.accept_access.clone();
        h[victim] = false;
        p[victim] = 0.0;
        d2 = assemble(&h, &p);
        resolved = false;
        repairs += 1;
    }
}

/// Admits skipped access bids, highest bid first, whenever the accepted set
/// stays stable and within latency.
fn fill_access(d2: &mut StageTwoDecision, d1: &StageOneDecision, sc: &Scenario, files: &[FileSpec], cfg: &SystemConfig) {
    let mut order: Vec<usize> = (0..files.len())
        .filter(|&i| d1.accept[i] && !d2.accept_access[i] && sc.access_bid_cents[i] > 0.0)
        .collect();
    if order.is_empty() {
        return;
    }
    order.sort_by(|&a, &b| {
        sc.access_bid_cents[b]
            .total_cmp(&sc.access_bid_cents[a])
            .then(files[a].id.cmp(&files[b].id))
    });
    let mut accept = d2.accept_access.clone();
    let mut hot: Vec<f64> = d2.sched_prob.iter().map(|p| p[1]).collect();
    for i in order {
        latency::admit(i, &mut accept, &mut hot, d1, sc, files, cfg);
    }
    *d2 = assemble(&accept, &hot);
}

fn assemble(h: &[bool], p: &[f64]) -> StageTwoDecision {
    StageTwoDecision {
        accept_access: h.to_vec(),
        sched_prob: h.iter().zip(p).map(|(&h, &p)| if h { [1.0 - p, p] } else { [0.0, 0.0] }).collect(),
    }
}

/// Among accepted accesses loading an implicated tier, the one with the
/// lowest bid per unit of offered load.
fn pick_drop(d2: &StageTwoDecision, report: &crate::model::FeasibilityReport, sc: &Scenario, files: &[FileSpec]) -> usize {
    let mut tiers = [false; 2];
    let mut late = Vec::new();
    for s in report.violations() {
        match (s.constraint, s.file) {
            (Constraint::Stability(t), _) => tiers[t.index()] = true,
            (Constraint::Latency, Some(i)) => {
                late.push(i);
                for t in Tier::ALL {
                    if d2.sched_prob[i][t.index()] > 0.0 {
                        tiers[t.index()] = true;
                    }
                }
            }
            _ => {}
        }
    }
    let mut best: Option<(usize, f64)> = None;
    for i in 0..files.len() {
        let load = sc.arrival_rate_per_s[i] * files[i].megabits();
        if !d2.accept_access[i] || load == 0.0 {
            continue;
        }
        let on_tier = Tier::ALL.iter().any(|t| tiers[t.index()] && d2.sched_prob[i][t.index()] > 0.0);
        if !on_tier {
            continue;
        }
        let density = sc.access_bid_cents[i] / load;
        if best.is_none_or(|(_, b)| density < b) {
            best = Some((i, density));
        }
    }
    match best {
        Some((i, _)) => i,
        // only zero-load accesses are late: their service time alone is too long
        None => late[0],
    }
}

/// Squared normalized violation of the latency and stability constraints
/// as a function of the hot shares, for a fixed access set.
struct Violation<'a> {
    terms: ScenarioTerms<'a>,
    h: Vec<f64>,
    ub: Vec<f64>,
    zeros: Vec<f64>,
    ones: Vec<f64>,
    dh: Vec<f64>,
}

impl Smooth for Violation<'_> {
    fn dim(&self) -> usize {
        self.h.len()
    }

    fn value_grad(&mut self, x: &[f64], grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        self.dh.iter_mut().for_each(|g| *g = 0.0);
        let m = ScenarioMultipliers {
            lat: &self.zeros,
            lat_scale: &self.ones,
            stab: [0.0; 2],
            stab_scale: 1.0,
            rho: 2.0,
        };
        self.terms.penalty(&self.h, x, &m, &mut self.dh, grad)
    }

    fn project(&mut self, x: &mut [f64]) {
        for (v, &u) in x.iter_mut().zip(&self.ub) {
            *v = v.clamp(0.0, u);
        }
    }
}

/// Re-optimizes hot shares of accepted, replicated files to minimize the
/// violation, measured on the restricted configuration so that a zero
/// residual leaves margin in the original one.
pub(crate) fn resolve_schedule(
    accept_access: &[bool],
    d1: &StageOneDecision,
    sc: &Scenario,
    files: &[FileSpec],
    cfg: &SystemConfig,
    p: &mut [f64],
) {
    let n = files.len();
    let restricted = cfg.restricted();
    let megabits: Vec<f64> = files.iter().map(|f| f.megabits()).collect();
    let h: Vec<f64> = accept_access.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let ub: Vec<f64> = (0..n)
        .map(|i| if accept_access[i] && d1.hot_replica[i] { 1.0 } else { 0.0 })
        .collect();
    // accepted files that cannot use the hot tier still need their latency
    // counted, so every accepted file has a unit scale
    let ones: Vec<f64> = h.clone();
    let mut obj = Violation {
        terms: ScenarioTerms::new(sc, &megabits, &restricted),
        h,
        ub,
        zeros: vec![0.0; n],
        ones,
        dh: vec![0.0; n],
    };
    spg::minimize(&mut obj, p, StepRule::default(), 500, 1e-12);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file(id: usize, size_mb: f64) -> FileSpec {
        FileSpec {
            id,
            size_mb,
            storage_bid_cents: 1.0,
        }
    }

    #[test]
    fn half_rounds_down() {
        assert!(!round_half_down(0.5));
        assert!(round_half_down(0.500001));
        assert!(!round_half_down(0.0));
    }

    #[test]
    fn replica_requires_acceptance() {
        let files = vec![file(0, 1.0), file(1, 1.0)];
        let cfg = SystemConfig::default();
        let (d, repairs) = round_stage_one(&[0.4, 0.9], &[0.45, 0.8], &files, &cfg);
        assert_eq!(d.accept, vec![false, true]);
        assert_eq!(d.hot_replica, vec![false, true]);
        assert_eq!(repairs, 0);
    }

    #[test]
    fn capacity_repair_drops_least_confident_file() {
        let files = vec![file(0, 100.0), file(1, 100.0), file(2, 100.0)];
        let cfg = SystemConfig {
            cold_capacity_mb: 450.0,
            hot_capacity_mb: 100.0,
            ..SystemConfig::default()
        };
        let (d, repairs) = round_stage_one(&[0.9, 0.6, 0.95], &[0.7, 0.8, 0.0], &files, &cfg);
        // hot: replicas of 0 and 1 need 200 > 100, drop the replica of 0;
        // cold: 100 + 200 + 200 = 500 > 450, drop file 1
        assert_eq!(d.hot_replica, vec![false, false, false]);
        assert_eq!(d.accept, vec![true, false, true]);
        assert_eq!(repairs, 2);
        assert!(d.cold_usage_mb(&files) <= cfg.cold_capacity_mb);
    }

    fn busy_scenario(n: usize, rate: f64) -> Scenario {
        Scenario {
            index: 0,
            probability: 1.0,
            access_bid_cents: (0..n).map(|i| 1.0 + i as f64).collect(),
            latency_req_ms: vec![60.0; n],
            arrival_rate_per_s: vec![rate; n],
        }
    }

    #[test]
    fn stage_two_repair_yields_feasible_decision() {
        let n = 4;
        let files: Vec<FileSpec> = (0..n).map(|i| file(i, 64.0)).collect();
        let cfg = SystemConfig {
            cold_rate_mbps: 20_000.0,
            hot_rate_mbps: 20_000.0,
            ..SystemConfig::default()
        };
        let d1 = StageOneDecision {
            accept: vec![true; n],
            hot_replica: vec![true, true, false, false],
        };
        // all cold: wait 26.9 ms + service 25.6 ms > 45 ms; with files 0 and 1
        // on hot each tier waits 8.8 ms
        let mut sc = busy_scenario(n, 5.0);
        sc.latency_req_ms = vec![45.0; n];
        let (d2, _) = round_stage_two(&[1.0; 4], &[0.0; 4], &d1, &sc, &files, &cfg).unwrap();
        let report = check_stage_two_feasible(&d2, &d1, &sc, &files, &cfg).unwrap();
        assert!(report.is_feasible(), "{:?}", report.violations().collect::<Vec<_>>());
        // shifting load to the hot tier is enough: nothing is dropped
        assert_eq!(d2.num_accepted(), n);
        assert!(d2.sched_prob[0][1] > 0.0 || d2.sched_prob[1][1] > 0.0);
    }

    #[test]
    fn unstable_load_drops_the_lowest_bid_density() {
        let n = 3;
        let files: Vec<FileSpec> = (0..n).map(|i| file(i, 64.0)).collect();
        let cfg = SystemConfig {
            cold_rate_mbps: 10_000.0,
            hot_rate_mbps: 10_000.0,
            ..SystemConfig::default()
        };
        let d1 = StageOneDecision {
            accept: vec![true; n],
            hot_replica: vec![false; n],
        };
        let sc = busy_scenario(n, 9.0);
        let (d2, repairs) = round_stage_two(&[1.0; 3], &[0.0; 3], &d1, &sc, &files, &cfg).unwrap();
        assert!(check_stage_two_feasible(&d2, &d1, &sc, &files, &cfg).unwrap().is_feasible());
        assert!(!d2.accept_access[0], "{d2:?}");
        assert!(repairs >= 2);
    }

    #[test]
    fn unreachable_latency_is_dropped() {
        let files = vec![file(0, 1000.0)];
        let cfg = SystemConfig::default();
        let d1 = StageOneDecision {
            accept: vec![true],
            hot_replica: vec![false],
        };
        let sc = Scenario {
            index: 0,
            probability: 1.0,
            access_bid_cents: vec![5.0],
            latency_req_ms: vec![1.0],
            arrival_rate_per_s: vec![0.0],
        };
        let (d2, _) = round_stage_two(&[1.0], &[0.0], &d1, &sc, &files, &cfg).unwrap();
        assert!(!d2.accept_access[0]);
    }
}
