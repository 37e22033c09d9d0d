//! Closed-form M/G/1 latency of each storage tier.
//!
//! Requests for file `i` reach tier `j` as a Poisson stream of rate
//! `lambda_i * pi_ij`. A request for a file of `b` megabits takes `b * V`
//! seconds where `V` is exponential with mean `1 / mu_j`, so the per-tier
//! service time is a size-weighted mixture and the Pollaczek-Khinchin formula
//! gives the mean wait.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{check_len, FileSpec, Scenario, StageOneDecision, StageTwoDecision, SystemConfig, Tier};

/// Aggregates of the request streams directed at one tier.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TierLoad {
    /// Sum of `lambda * pi`, requests per second.
    pub agg_arrival_per_s: f64,
    /// Sum of `lambda * pi * b`, the offered load in Mb/s.
    pub f_mbps: f64,
    /// Sum of `lambda * pi * b^2`, in Mb^2/s.
    pub h_mb2ps: f64,
}

impl TierLoad {
    pub fn add(&mut self, rate_per_s: f64, megabits: f64) {
        self.agg_arrival_per_s += rate_per_s;
        self.f_mbps += rate_per_s * megabits;
        self.h_mb2ps += rate_per_s * megabits * megabits;
    }

    /// Load from explicit per-class `(rate, megabits)` pairs.
    pub fn from_classes(classes: &[(f64, f64)]) -> Self {
        let mut load = Self::default();
        for &(rate, mb) in classes {
            load.add(rate, mb);
        }
        load
    }

    pub fn utilization(&self, mu_mbps: f64) -> f64 {
        self.f_mbps / mu_mbps
    }
}

/// Loads on `[cold, hot]` for scheduling probabilities `pi[i] = [cold, hot]`.
pub fn tier_loads(pi: &[[f64; 2]], sc: &Scenario, files: &[FileSpec]) -> [TierLoad; 2] {
    let mut loads = [TierLoad::default(); 2];
    for ((p, f), &lam) in pi.iter().zip(files).zip(&sc.arrival_rate_per_s) {
        let b = f.megabits();
        for j in 0..2 {
            if p[j] != 0.0 {
                loads[j].add(lam * p[j], b);
            }
        }
    }
    loads
}

/// Mean and second moment of the service time, in s and s^2.
pub fn service_moments(load: &TierLoad, mu_mbps: f64) -> Result<(f64, f64)> {
    if load.agg_arrival_per_s <= 0.0 {
        return Err(Error::UndefinedMoments);
    }
    let g = load.agg_arrival_per_s;
    let mean = load.f_mbps / (mu_mbps * g);
    let second = 2.0 * load.h_mb2ps / (mu_mbps * mu_mbps * g);
    Ok((mean, second))
}

/// Mean waiting time in queue, seconds: `h / (mu (mu - f))`.
pub fn waiting_time(load: &TierLoad, mu_mbps: f64) -> Result<f64> {
    if load.f_mbps >= mu_mbps {
        return Err(Error::Unstable {
            tier: Tier::Cold,
            load_mbps: load.f_mbps,
            rate_mbps: mu_mbps,
        });
    }
    if load.h_mb2ps == 0.0 {
        return Ok(0.0);
    }
    Ok(load.h_mb2ps / (mu_mbps * (mu_mbps - load.f_mbps)))
}

fn tier_wait(loads: &[TierLoad; 2], cfg: &SystemConfig, tier: Tier) -> Result<f64> {
    waiting_time(&loads[tier.index()], cfg.rate_mbps(tier)).map_err(|e| match e {
        Error::Unstable { load_mbps, rate_mbps, .. } => Error::Unstable {
            tier,
            load_mbps,
            rate_mbps,
        },
        other => other,
    })
}

/// Expected latency of file `i` in seconds: service time plus waiting time,
/// each averaged over the tiers by the scheduling probabilities.
pub fn expected_latency(i: usize, pi: &[[f64; 2]], sc: &Scenario, files: &[FileSpec], cfg: &SystemConfig) -> Result<f64> {
    check_len("sched_prob", files.len(), pi.len())?;
    let loads = tier_loads(pi, sc, files);
    latency_with_loads(i, pi, files, cfg, &loads)
}

fn latency_with_loads(i: usize, pi: &[[f64; 2]], files: &[FileSpec], cfg: &SystemConfig, loads: &[TierLoad; 2]) -> Result<f64> {
    let b = files[i].megabits();
    let mut t = 0.0;
    for tier in Tier::ALL {
        let p = pi[i][tier.index()];
        if p == 0.0 {
            continue;
        }
        let w = tier_wait(loads, cfg, tier)?;
        t += p * (b / cfg.rate_mbps(tier) + w);
    }
    Ok(t)
}

/// Expected latency of every file, seconds.
pub fn latencies(pi: &[[f64; 2]], sc: &Scenario, files: &[FileSpec], cfg: &SystemConfig) -> Result<Vec<f64>> {
    check_len("sched_prob", files.len(), pi.len())?;
    let loads = tier_loads(pi, sc, files);
    (0..files.len()).map(|i| latency_with_loads(i, pi, files, cfg, &loads)).collect()
}

/// Latency requirement minus expected latency per file, in seconds. Files
/// whose access is rejected have zero latency and so slack `l_i`.
pub fn latency_slacks(
    d2: &StageTwoDecision,
    d1: &StageOneDecision,
    sc: &Scenario,
    files: &[FileSpec],
    cfg: &SystemConfig,
) -> Result<Vec<f64>> {
    check_len("accept", files.len(), d1.accept.len())?;
    check_len("accept_access", files.len(), d2.accept_access.len())?;
    let lat = latencies(&d2.sched_prob, sc, files, cfg)?;
    Ok(lat
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let t = if d2.accept_access[i] { t } else { 0.0 };
            sc.latency_req_s(i) - t
        })
        .collect())
}

/// Whether accepting the files flagged in `accept`, each sending the
/// fraction `hot_share[i]` of its requests to the hot tier and the rest to
/// the cold tier, keeps both tiers stable and every accepted file within its
/// latency requirement. Agrees with the stability and latency parts of
/// `check_stage_two_feasible` without allocating a report.
pub(crate) fn admits(accept: &[bool], hot_share: &[f64], sc: &Scenario, files: &[FileSpec], cfg: &SystemConfig) -> bool {
    let mut f = [0.0; 2];
    let mut h = [0.0; 2];
    for i in 0..files.len() {
        if !accept[i] {
            continue;
        }
        let b = files[i].megabits();
        let lam = sc.arrival_rate_per_s[i];
        let pi = [1.0 - hot_share[i], hot_share[i]];
        for j in 0..2 {
            if pi[j] != 0.0 {
                f[j] += lam * pi[j] * b;
                h[j] += lam * pi[j] * b * b;
            }
        }
    }
    let mut w = [0.0; 2];
    for tier in Tier::ALL {
        let j = tier.index();
        if f[j] > cfg.stable_load_mbps(tier) {
            return false;
        }
        let mu = cfg.rate_mbps(tier);
        if h[j] > 0.0 {
            w[j] = h[j] / (mu * (mu - f[j]));
        }
    }
    for i in 0..files.len() {
        if !accept[i] {
            continue;
        }
        let b = files[i].megabits();
        let pi = [1.0 - hot_share[i], hot_share[i]];
        let mut t = 0.0;
        for tier in Tier::ALL {
            let j = tier.index();
            if pi[j] != 0.0 {
                t += pi[j] * (b / cfg.rate_mbps(tier) + w[j]);
            }
        }
        if t > sc.latency_req_s(i) {
            return false;
        }
    }
    true
}

/// Hot shares tried for a replicated file, from the largest the hot tier
/// can absorb down to zero.
const SPLIT_STEPS: usize = 32;

/// Hot share admitting file `i` next to the already accepted files, if any.
/// Replicated files go to the hot tier as far as its stability allows, with
/// the rest spilling to cold; shares are reduced until everything fits.
pub(crate) fn admit(
    i: usize,
    accept: &mut [bool],
    hot: &mut [f64],
    d1: &StageOneDecision,
    sc: &Scenario,
    files: &[FileSpec],
    cfg: &SystemConfig,
) -> Option<f64> {
    accept[i] = true;
    let candidates: Vec<f64> = if d1.hot_replica[i] {
        let hot_load: f64 = (0..files.len())
            .filter(|&k| accept[k] && k != i)
            .map(|k| sc.arrival_rate_per_s[k] * hot[k] * files[k].megabits())
            .sum();
        let own = sc.arrival_rate_per_s[i] * files[i].megabits();
        let room = (cfg.stable_load_mbps(Tier::Hot) - hot_load).max(0.0);
        let top = if own > 0.0 { (room / own).min(1.0) } else { 1.0 };
        (0..=SPLIT_STEPS).map(|k| top * (1.0 - k as f64 / SPLIT_STEPS as f64)).collect()
    } else {
        vec![0.0]
    };
    for p in candidates {
        hot[i] = p;
        if admits(accept, hot, sc, files, cfg) {
            return Some(p);
        }
    }
    accept[i] = false;
    hot[i] = 0.0;
    None
}
