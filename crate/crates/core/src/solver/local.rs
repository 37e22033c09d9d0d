//! Local search on a rounded storage decision: replica moves between the
//! tiers and swapping a rejected file in for less valuable accepted ones.

use crate::error::Result;
use crate::model::{self, FileSpec, ProfitMode, Scenario, StageOneDecision, StageTwoDecision, SystemConfig};

use super::rounding;

const MAX_PASSES: usize = 10;

pub(crate) struct Improved {
    pub decision: StageOneDecision,
    pub plan: Vec<StageTwoDecision>,
    pub objective: f64,
    pub moves: usize,
}

fn margin(f: &FileSpec, hot: bool, cfg: &SystemConfig) -> f64 {
    let cost = if hot {
        cfg.cold_cost_cents_per_mb + cfg.hot_cost_cents_per_mb
    } else {
        2.0 * cfg.cold_cost_cents_per_mb
    };
    f.storage_bid_cents - f.size_mb * cost
}

fn fits(d: &StageOneDecision, files: &[FileSpec], cfg: &SystemConfig) -> bool {
    d.cold_usage_mb(files) <= cfg.cold_capacity_mb && d.hot_usage_mb(files) <= cfg.hot_capacity_mb
}

/// Access plan for `d1` starting from `base`: accesses and hot shares the
/// new storage decision no longer allows are cleared, then the plan is
/// repaired and filled.
fn replan(
    d1: &StageOneDecision,
    base: &[StageTwoDecision],
    scenarios: &[Scenario],
    files: &[FileSpec],
    cfg: &SystemConfig,
) -> Result<(Vec<StageTwoDecision>, f64)> {
    let mut plan = Vec::with_capacity(scenarios.len());
    for (sc, d2) in scenarios.iter().zip(base) {
        let access: Vec<f64> = (0..files.len())
            .map(|i| if d1.accept[i] && d2.accept_access[i] { 1.0 } else { 0.0 })
            .collect();
        let hot: Vec<f64> = (0..files.len())
            .map(|i| if d1.hot_replica[i] { d2.sched_prob[i][1] } else { 0.0 })
            .collect();
        plan.push(rounding::round_stage_two(&access, &hot, d1, sc, files, cfg)?.0);
    }
    let objective = model::profit(d1, &plan, scenarios, files, cfg, ProfitMode::Expected)?.total();
    Ok((plan, objective))
}

pub(crate) fn improve(
    decision: StageOneDecision,
    plan: Vec<StageTwoDecision>,
    objective: f64,
    scenarios: &[Scenario],
    files: &[FileSpec],
    cfg: &SystemConfig,
) -> Result<Improved> {
    let n = files.len();
    let mut cur = Improved {
        decision,
        plan,
        objective,
        moves: 0,
    };
    let t = cfg.num_slots as f64;
    for _ in 0..MAX_PASSES {
        let before = cur.moves;

        for i in 0..n {
            if !cur.decision.accept[i] {
                continue;
            }
            let mut d = cur.decision.clone();
            d.hot_replica[i] = !d.hot_replica[i];
            if !fits(&d, files, cfg) {
                continue;
            }
            let gain = margin(&files[i], d.hot_replica[i], cfg) - margin(&files[i], cur.decision.hot_replica[i], cfg);
            if gain <= 0.0 {
                continue;
            }
            let (plan, objective) = replan(&d, &cur.plan, scenarios, files, cfg)?;
            if objective > cur.objective {
                cur = Improved {
                    decision: d,
                    plan,
                    objective,
                    moves: cur.moves + 1,
                };
            }
        }

        let value: Vec<f64> = (0..n)
            .map(|i| {
                if !cur.decision.accept[i] {
                    return 0.0;
                }
                let access: f64 = scenarios
                    .iter()
                    .zip(&cur.plan)
                    .filter(|(_, d2)| d2.accept_access[i])
                    .map(|(sc, _)| t * sc.probability * sc.access_bid_cents[i])
                    .sum();
                margin(&files[i], cur.decision.hot_replica[i], cfg) + access
            })
            .collect();
        let mut cheapest: Vec<usize> = (0..n).filter(|&i| cur.decision.accept[i]).collect();
        cheapest.sort_by(|&a, &b| {
            (value[a] / files[a].size_mb)
                .total_cmp(&(value[b] / files[b].size_mb))
                .then(files[a].id.cmp(&files[b].id))
        });
        let mut entrants: Vec<(usize, bool, f64)> = (0..n)
            .filter(|&j| !cur.decision.accept[j])
            .map(|j| {
                let (mh, mc) = (margin(&files[j], true, cfg), margin(&files[j], false, cfg));
                if mh > mc {
                    (j, true, mh)
                } else {
                    (j, false, mc)
                }
            })
            .filter(|&(_, _, m)| m > 0.0)
            .collect();
        entrants.sort_by(|a, b| b.2.total_cmp(&a.2).then(files[a.0].id.cmp(&files[b.0].id)));
        for (j, hot, m) in entrants {
            if cur.decision.accept[j] {
                continue;
            }
            let mut d = cur.decision.clone();
            d.accept[j] = true;
            d.hot_replica[j] = hot && files[j].size_mb <= cfg.hot_capacity_mb;
            let mut lost = 0.0;
            for &i in &cheapest {
                if fits(&d, files, cfg) || lost >= m {
                    break;
                }
                if d.accept[i] {
                    d.accept[i] = false;
                    d.hot_replica[i] = false;
                    lost += value[i];
                }
            }
            if !fits(&d, files, cfg) || lost >= margin(&files[j], d.hot_replica[j], cfg) {
                continue;
            }
            let (plan, objective) = replan(&d, &cur.plan, scenarios, files, cfg)?;
            if objective > cur.objective {
                cur = Improved {
                    decision: d,
                    plan,
                    objective,
                    moves: cur.moves + 1,
                };
                break;
            }
        }

        if cur.moves == before {
            break;
        }
    }
    Ok(cur)
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

    #[test]
    fn large_file_displaces_two_small_ones() {
        let files = vec![file(0, 64.0, 7.3), file(1, 256.0, 50.0), file(2, 64.0, 10.9)];
        let cfg = SystemConfig {
            cold_capacity_mb: 573.0,
            hot_capacity_mb: 150.0,
            ..SystemConfig::default()
        };
        let d = StageOneDecision {
            accept: vec![true, false, true],
            hot_replica: vec![false, false, true],
        };
        let before = model::storage_profit(&d, &files, &cfg).total();
        let out = improve(d, vec![], before, &[], &files, &cfg).unwrap();
        assert_eq!(out.decision.accept, vec![false, true, false]);
        assert!(out.objective > before);
        assert!(model::check_stage_one_feasible(&out.decision, &files, &cfg).unwrap().is_feasible());
    }

    #[test]
    fn replica_moves_to_the_cheaper_tier() {
        let files = vec![file(0, 100.0, 30.0)];
        let cfg = SystemConfig::default();
        let d = StageOneDecision {
            accept: vec![true],
            hot_replica: vec![true],
        };
        let before = model::storage_profit(&d, &files, &cfg).total();
        let out = improve(d, vec![], before, &[], &files, &cfg).unwrap();
        assert_eq!(out.decision.hot_replica, vec![false]);
        assert!((out.objective - before - 100.0 * 0.03).abs() < 1e-9);
    }

    #[test]
    fn optimal_decision_is_left_alone() {
        let files = vec![file(0, 64.0, 16.0)];
        let cfg = SystemConfig::default();
        let d = StageOneDecision {
            accept: vec![true],
            hot_replica: vec![false],
        };
        let before = model::storage_profit(&d, &files, &cfg).total();
        let out = improve(d.clone(), vec![], before, &[], &files, &cfg).unwrap();
        assert_eq!(out.decision, d);
        assert_eq!(out.moves, 0);
    }
}
