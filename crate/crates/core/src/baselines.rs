//! Comparison methods: independent stages (IS) and two greedy access
//! heuristics ranking bids per size (GH I) or per arrival rate (GH II).

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::latency;
use crate::model::{validate_instance, validate_slot, FileSpec, Scenario, StageOneDecision, StageTwoDecision, SystemConfig};
use crate::solver::{self, SolverOptions, StageOneSolution, StageTwoSolution};

/// Storage decided for storage profit alone, access decided afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsSolution {
    pub stage_one: StageOneSolution,
    /// Access decision of each scenario under the storage decision.
    pub plan: Vec<StageTwoSolution>,
}

/// Maximizes storage profit subject to capacity, then solves each
/// scenario's access problem under that storage decision.
pub fn solve_is(files: &[FileSpec], scenarios: &[Scenario], cfg: &SystemConfig, opts: &SolverOptions) -> Result<IsSolution> {
    validate_instance(files, scenarios)?;
    let stage_one = solver::solve_stage_one(files, &[], cfg, opts)?;
    let plan = scenarios
        .iter()
        .map(|sc| solver::solve_stage_two(&stage_one.decision, sc, files, cfg, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(IsSolution { stage_one, plan })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GreedyRule {
    /// Rank by access bid per MB of file size.
    PerSize,
    /// Rank by access bid per request per second.
    PerRate,
}

/// Order in which the greedy rule scans stored files that submitted a bid.
pub fn greedy_order(files: &[FileSpec], d1: &StageOneDecision, sc: &Scenario, rule: GreedyRule) -> Vec<usize> {
    let mut order: Vec<usize> = (0..files.len())
        .filter(|&i| d1.accept[i] && sc.arrival_rate_per_s[i] > 0.0)
        .collect();
    let key = |i: usize| match rule {
        GreedyRule::PerSize => sc.access_bid_cents[i] / files[i].size_mb,
        GreedyRule::PerRate => sc.access_bid_cents[i] / sc.arrival_rate_per_s[i],
    };
    order.sort_by(|&a, &b| key(b).total_cmp(&key(a)).then(files[a].id.cmp(&files[b].id)));
    order
}

/// Greedy access decision: scan stored files by the rule and keep each
/// acceptance only if every accepted file still meets stability and latency.
pub fn solve_gh(
    files: &[FileSpec],
    d1: &StageOneDecision,
    sc: &Scenario,
    cfg: &SystemConfig,
    rule: GreedyRule,
) -> Result<StageTwoDecision> {
    validate_slot(files, sc)?;
    d1.check_dims(files.len())?;
    let n = files.len();
    let mut accept = vec![false; n];
    let mut hot = vec![0.0; n];
    for i in greedy_order(files, d1, sc, rule) {
        latency::admit(i, &mut accept, &mut hot, d1, sc, files, cfg);
    }
    Ok(StageTwoDecision {
        sched_prob: (0..n)
            .map(|i| if accept[i] { [1.0 - hot[i], hot[i]] } else { [0.0, 0.0] })
            .collect(),
        accept_access: accept,
    })
}

/// Files in the scan order that were skipped but could still be admitted
/// next to the final decision. Empty for every output of [`solve_gh`].
pub fn greedy_addable(
    files: &[FileSpec],
    d1: &StageOneDecision,
    sc: &Scenario,
    cfg: &SystemConfig,
    d2: &StageTwoDecision,
    rule: GreedyRule,
) -> Vec<usize> {
    let mut accept = d2.accept_access.clone();
    let mut hot: Vec<f64> = d2.sched_prob.iter().map(|p| p[1]).collect();
    greedy_order(files, d1, sc, rule)
        .into_iter()
        .filter(|&i| !d2.accept_access[i])
        .filter(|&i| {
            let ok = latency::admit(i, &mut accept, &mut hot, d1, sc, files, cfg).is_some();
            accept[i] = false;
            hot[i] = 0.0;
            ok
        })
        .collect()
}
