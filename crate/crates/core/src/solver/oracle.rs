//! Exhaustive reference solver for tiny instances.
//!
//! Enumerates every storage decision, every access subset per scenario, and
//! hot shares on the grid `{0, 1/G, ..., 1}` for accessed files with a hot
//! replica. Feasibility of an access set depends only on which files are
//! accessed and which of those are replicated, so it is memoized on that pair.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::latency;
use crate::model::{self, validate_instance, FileSpec, Scenario, StageOneDecision, StageTwoDecision, SystemConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleLimits {
    pub max_files: usize,
    pub max_scenarios: usize,
    pub max_grid: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        Self {
            max_files: 4,
            max_scenarios: 3,
            max_grid: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSolution {
    pub decision: StageOneDecision,
    pub plan: Vec<StageTwoDecision>,
    /// Expected profit.
    pub profit: f64,
}

/// Optimal expected profit over the grid. Refuses instances beyond the
/// default [`OracleLimits`].
pub fn brute_force_oracle(files: &[FileSpec], scenarios: &[Scenario], cfg: &SystemConfig, grid: usize) -> Result<OracleSolution> {
    let limits = OracleLimits::default();
    if files.len() > limits.max_files || scenarios.len() > limits.max_scenarios || grid > limits.max_grid {
        return Err(Error::TooLarge(format!(
            "oracle handles at most {} files, {} scenarios and grid {}; got {}, {}, {}",
            limits.max_files,
            limits.max_scenarios,
            limits.max_grid,
            files.len(),
            scenarios.len(),
            grid
        )));
    }
    if grid == 0 {
        return Err(Error::InvalidConfig("oracle grid must be at least 1".into()));
    }
    cfg.validate()?;
    validate_instance(files, scenarios)?;

    let n = files.len();
    let t = cfg.num_slots as f64;
    let mut memo: Vec<HashMap<(u32, u32), Option<Vec<f64>>>> = vec![HashMap::new(); scenarios.len()];
    let mut best: Option<OracleSolution> = None;
    let combos = 3usize.pow(n as u32);
    for code in 0..combos {
        let mut d1 = StageOneDecision::reject_all(n);
        let mut c = code;
        for i in 0..n {
            match c % 3 {
                1 => d1.accept[i] = true,
                2 => {
                    d1.accept[i] = true;
                    d1.hot_replica[i] = true;
                }
                _ => {}
            }
            c /= 3;
        }
        if d1.cold_usage_mb(files) > cfg.cold_capacity_mb || d1.hot_usage_mb(files) > cfg.hot_capacity_mb {
            continue;
        }
        let mut total = model::storage_profit(&d1, files, cfg).total();
        let mut plan = Vec::with_capacity(scenarios.len());
        for (k, sc) in scenarios.iter().enumerate() {
            let d2 = best_access(&d1, sc, files, cfg, grid, &mut memo[k]);
            total += t * sc.probability * model::accepted_bids(&d2, sc);
            plan.push(d2);
        }
        if best.as_ref().is_none_or(|b| total > b.profit) {
            best = Some(OracleSolution {
                decision: d1,
                plan,
                profit: total,
            });
        }
    }
    Ok(best.expect("rejecting everything is always feasible"))
}

fn best_access(
    d1: &StageOneDecision,
    sc: &Scenario,
    files: &[FileSpec],
    cfg: &SystemConfig,
    grid: usize,
    memo: &mut HashMap<(u32, u32), Option<Vec<f64>>>,
) -> StageTwoDecision {
    let n = files.len();
    let stored: Vec<usize> = (0..n).filter(|&i| d1.accept[i]).collect();
    let mut subsets: Vec<(u32, f64)> = (0..1u32 << stored.len())
        .map(|bits| {
            let mut mask = 0u32;
            let mut value = 0.0;
            for (k, &i) in stored.iter().enumerate() {
                if bits >> k & 1 == 1 {
                    mask |= 1 << i;
                    value += sc.access_bid_cents[i];
                }
            }
            (mask, value)
        })
        .collect();
    // most valuable first; the first feasible subset is optimal
    subsets.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    for (mask, _) in subsets {
        let hot_mask = (0..n)
            .filter(|&i| mask >> i & 1 == 1 && d1.hot_replica[i])
            .fold(0u32, |m, i| m | 1 << i);
        let shares = memo
            .entry((mask, hot_mask))
            .or_insert_with(|| feasible_shares(mask, hot_mask, sc, files, cfg, grid))
            .clone();
        if let Some(p) = shares {
            return StageTwoDecision {
                accept_access: (0..n).map(|i| mask >> i & 1 == 1).collect(),
                sched_prob: (0..n)
                    .map(|i| if mask >> i & 1 == 1 { [1.0 - p[i], p[i]] } else { [0.0, 0.0] })
                    .collect(),
            };
        }
    }
    StageTwoDecision::reject_all(n)
}

/// First grid assignment of hot shares making the access set feasible.
fn feasible_shares(mask: u32, hot_mask: u32, sc: &Scenario, files: &[FileSpec], cfg: &SystemConfig, grid: usize) -> Option<Vec<f64>> {
    let n = files.len();
    let hot: Vec<usize> = (0..n).filter(|&i| hot_mask >> i & 1 == 1).collect();
    let mut p = vec![0.0; n];
    let mut idx = vec![0usize; hot.len()];
    loop {
        for (k, &i) in hot.iter().enumerate() {
            p[i] = idx[k] as f64 / grid as f64;
        }
        if is_feasible(mask, &p, sc, files, cfg) {
            return Some(p);
        }
        // odometer increment
        let mut k = 0;
        loop {
            if k == idx.len() {
                return None;
            }
            idx[k] += 1;
            if idx[k] <= grid {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

fn is_feasible(mask: u32, p: &[f64], sc: &Scenario, files: &[FileSpec], cfg: &SystemConfig) -> bool {
    let accept: Vec<bool> = (0..files.len()).map(|i| mask >> i & 1 == 1).collect();
    latency::admits(&accept, p, sc, files, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{check_stage_one_feasible, check_stage_two_feasible};

    fn files(n: usize) -> Vec<FileSpec> {
        (0..n)
            .map(|i| FileSpec {
                id: i,
                size_mb: 64.0 * (1 + i) as f64,
                storage_bid_cents: 10.0 + 7.0 * i as f64,
            })
            .collect()
    }

    #[test]
    fn refuses_large_instances() {
        let cfg = SystemConfig::default();
        assert!(matches!(brute_force_oracle(&files(5), &[], &cfg, 8), Err(Error::TooLarge(_))));
        assert!(matches!(brute_force_oracle(&files(2), &[], &cfg, 65), Err(Error::TooLarge(_))));
    }

    #[test]
    fn storage_only_matches_hand_enumeration() {
        let fs = files(3);
        let cfg = SystemConfig {
            cold_capacity_mb: 300.0,
            ..SystemConfig::default()
        };
        let sol = brute_force_oracle(&fs, &[], &cfg, 4).unwrap();
        // two copies each: 128 + 256 = 384 > 300, so only one file or the
        // smallest plus a hot replica arrangement fits
        assert!(check_stage_one_feasible(&sol.decision, &fs, &cfg).unwrap().is_feasible());
        let direct = model::storage_profit(&sol.decision, &fs, &cfg).total();
        assert!((sol.profit - direct).abs() < 1e-12);
        assert!(sol.profit > 0.0);
    }

    #[test]
    fn oracle_plans_are_feasible() {
        let fs = files(3);
        let sc = Scenario {
            index: 0,
            probability: 1.0,
            access_bid_cents: vec![5.0, 4.0, 3.0],
            latency_req_ms: vec![20.0, 30.0, 40.0],
            arrival_rate_per_s: vec![40.0, 30.0, 20.0],
        };
        let cfg = SystemConfig {
            cold_rate_mbps: 60_000.0,
            hot_rate_mbps: 60_000.0,
            num_slots: 2,
            ..SystemConfig::default()
        };
        let sol = brute_force_oracle(&fs, std::slice::from_ref(&sc), &cfg, 8).unwrap();
        let report = check_stage_two_feasible(&sol.plan[0], &sol.decision, &sc, &fs, &cfg).unwrap();
        assert!(report.is_feasible());
        let expected = model::profit(&sol.decision, &sol.plan, &[sc], &fs, &cfg, model::ProfitMode::Expected)
            .unwrap()
            .total();
        assert!((expected - sol.profit).abs() < 1e-9);
    }
}
