//! Discrete-event simulation of a single tier as a FIFO M/G/1 queue.
//!
//! Each class is an independent Poisson stream; the streams are merged by
//! next-arrival time. A request of `b` megabits is served in `b * V` seconds
//! with `V` exponential of mean `1 / mu`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FileSpec, Scenario, StageTwoDecision, SystemConfig, Tier};

/// Fewest measured requests a run may ask for.
pub const MIN_HORIZON: u64 = 10_000;
pub const NUM_BATCHES: usize = 20;
/// Two-sided 95% Student t quantile with `NUM_BATCHES - 1` degrees of freedom.
const T_QUANTILE_19: f64 = 2.093_024_054_408_263;

/// One request stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesClass {
    pub rate_per_s: f64,
    pub megabits: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesConfig {
    pub tier: Tier,
    pub mu_mbps: f64,
    pub classes: Vec<DesClass>,
    /// Requests measured after warmup.
    pub horizon_requests: u64,
    /// Share of all simulated requests discarded as warmup.
    pub warmup_fraction: f64,
    pub seed: u64,
}

impl DesConfig {
    /// Streams reaching `tier` under an access decision: one class per file
    /// with rate `lambda_i * pi_ij`.
    pub fn for_tier(
        d2: &StageTwoDecision,
        sc: &Scenario,
        files: &[FileSpec],
        cfg: &SystemConfig,
        tier: Tier,
        horizon_requests: u64,
        seed: u64,
    ) -> Self {
        let classes = files
            .iter()
            .zip(&d2.sched_prob)
            .zip(&sc.arrival_rate_per_s)
            .map(|((f, p), &lam)| DesClass {
                rate_per_s: lam * p[tier.index()],
                megabits: f.megabits(),
            })
            .collect();
        Self {
            tier,
            mu_mbps: cfg.rate_mbps(tier),
            classes,
            horizon_requests,
            warmup_fraction: 0.1,
            seed,
        }
    }

    pub fn total_rate(&self) -> f64 {
        self.classes.iter().map(|c| c.rate_per_s).sum()
    }

    pub fn offered_load_mbps(&self) -> f64 {
        self.classes.iter().map(|c| c.rate_per_s * c.megabits).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon_requests < MIN_HORIZON {
            return Err(Error::InvalidConfig(format!(
                "horizon_requests must be at least {MIN_HORIZON}, got {}",
                self.horizon_requests
            )));
        }
        if !(0.0..0.5).contains(&self.warmup_fraction) {
            return Err(Error::InvalidConfig(format!(
                "warmup_fraction must lie in [0, 0.5), got {}",
                self.warmup_fraction
            )));
        }
        if !(self.mu_mbps.is_finite() && self.mu_mbps > 0.0) {
            return Err(Error::InvalidConfig(format!("service rate must be positive, got {}", self.mu_mbps)));
        }
        for (i, c) in self.classes.iter().enumerate() {
            if !(c.rate_per_s.is_finite() && c.rate_per_s >= 0.0) {
                return Err(Error::InvalidConfig(format!("class {i}: rate must be finite and nonnegative")));
            }
            if !(c.megabits.is_finite() && c.megabits > 0.0) {
                return Err(Error::InvalidConfig(format!("class {i}: size must be positive")));
            }
        }
        let load = self.offered_load_mbps();
        if load >= self.mu_mbps {
            return Err(Error::Unstable {
                tier: self.tier,
                load_mbps: load,
                rate_mbps: self.mu_mbps,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesResult {
    /// Mean time in queue over measured requests, seconds.
    pub mean_wait_s: f64,
    /// Half-width of the 95% batch-means interval for `mean_wait_s`.
    pub ci_halfwidth: f64,
    /// Mean time in system per class; `None` for classes without requests.
    pub mean_latency_per_file_s: Vec<Option<f64>>,
    pub requests_per_class: Vec<u64>,
    pub measured_requests: u64,
    /// Length of the measurement window, seconds.
    pub window_s: f64,
    /// Measured requests over window length.
    pub observed_rate_per_s: f64,
    /// Time-average number in system over the window.
    pub mean_in_system: f64,
    /// Mean time in system over measured requests, seconds.
    pub mean_sojourn_s: f64,
}

#[derive(Debug, Clone, Copy)]
struct Next {
    time: f64,
    class: usize,
}

impl PartialEq for Next {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Next {}

impl PartialOrd for Next {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Next {
    // min-heap on time
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then(other.class.cmp(&self.class))
    }
}

/// Simulates one tier until `horizon_requests` requests have been measured.
pub fn simulate_tier(cfg: &DesConfig) -> Result<DesResult> {
    cfg.validate()?;
    let n = cfg.classes.len();
    let total_rate = cfg.total_rate();
    if total_rate == 0.0 {
        return Ok(DesResult {
            mean_wait_s: 0.0,
            ci_halfwidth: 0.0,
            mean_latency_per_file_s: vec![None; n],
            requests_per_class: vec![0; n],
            measured_requests: 0,
            window_s: 0.0,
            observed_rate_per_s: 0.0,
            mean_in_system: 0.0,
            mean_sojourn_s: 0.0,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let gaps: Vec<Option<Exp<f64>>> = cfg
        .classes
        .iter()
        .map(|c| (c.rate_per_s > 0.0).then(|| Exp::new(c.rate_per_s).expect("positive rate")))
        .collect();
    let mut heap = BinaryHeap::with_capacity(n);
    for (class, gap) in gaps.iter().enumerate() {
        if let Some(g) = gap {
            heap.push(Next {
                time: g.sample(&mut rng),
                class,
            });
        }
    }

    let horizon = cfg.horizon_requests;
    let warmup = (horizon as f64 * cfg.warmup_fraction / (1.0 - cfg.warmup_fraction)).ceil() as u64;
    let batch_len = horizon / NUM_BATCHES as u64;

    let mut last_departure = 0.0f64;
    let mut count = vec![0u64; n];
    let mut sojourn_sum = vec![0.0; n];
    let mut wait_sum = 0.0;
    let mut batch_sums = [0.0; NUM_BATCHES];
    let mut window_start = 0.0;
    let mut window_end = 0.0;
    // departures of requests in the system when the window opens
    let mut carried: Vec<f64> = Vec::new();
    let mut area = 0.0;
    let mut tail: Vec<f64> = Vec::new();

    for seq in 0..warmup + horizon {
        let Next { time: arrival, class } = heap.pop().expect("at least one active stream");
        let gap = gaps[class].as_ref().expect("active stream");
        heap.push(Next {
            time: arrival + gap.sample(&mut rng),
            class,
        });
        let x: f64 = Exp1.sample(&mut rng);
        let service = cfg.classes[class].megabits * x / cfg.mu_mbps;
        let start = arrival.max(last_departure);
        let departure = start + service;
        last_departure = departure;

        if seq < warmup {
            carried.retain(|&d| d > arrival);
            carried.push(departure);
            continue;
        }
        let m = seq - warmup;
        if m == 0 {
            window_start = arrival;
            carried.retain(|&d| d > arrival);
        }
        window_end = arrival;
        let wait = start - arrival;
        wait_sum += wait;
        count[class] += 1;
        sojourn_sum[class] += departure - arrival;
        area += departure - arrival;
        tail.retain(|&d| d > arrival);
        tail.push(departure);
        let b = ((m / batch_len.max(1)) as usize).min(NUM_BATCHES - 1);
        batch_sums[b] += wait;
    }

    // time in system inside [window_start, window_end]
    area += carried
        .iter()
        .map(|&d| d.min(window_end) - window_start)
        .filter(|v| *v > 0.0)
        .sum::<f64>();
    // measured requests still present after the window closes; departures
    // are increasing under FIFO so they form the tail
    area -= tail.iter().map(|&d| (d - window_end).max(0.0)).sum::<f64>();
    let window = window_end - window_start;

    let h = horizon as f64;
    let mean_wait = wait_sum / h;
    let batch_means: Vec<f64> = (0..NUM_BATCHES)
        .map(|b| {
            let len = if b == NUM_BATCHES - 1 {
                horizon - batch_len * (NUM_BATCHES as u64 - 1)
            } else {
                batch_len
            };
            batch_sums[b] / len as f64
        })
        .collect();
    let bm_mean = batch_means.iter().sum::<f64>() / NUM_BATCHES as f64;
    let var = batch_means.iter().map(|v| (v - bm_mean).powi(2)).sum::<f64>() / (NUM_BATCHES - 1) as f64;
    let ci = T_QUANTILE_19 * (var / NUM_BATCHES as f64).sqrt();

    Ok(DesResult {
        mean_wait_s: mean_wait,
        ci_halfwidth: ci,
        mean_latency_per_file_s: count
            .iter()
            .zip(&sojourn_sum)
            .map(|(&c, &s)| (c > 0).then(|| s / c as f64))
            .collect(),
        requests_per_class: count,
        measured_requests: horizon,
        window_s: window,
        observed_rate_per_s: if window > 0.0 { h / window } else { 0.0 },
        mean_in_system: if window > 0.0 { area / window } else { 0.0 },
        mean_sojourn_s: sojourn_sum.iter().sum::<f64>() / h,
    })
}
