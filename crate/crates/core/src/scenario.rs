//! Synthetic file populations and bidding scenarios.
//!
//! Five file types of 64 to 1024 MB. Storage bids are `S * U[0.1, 0.3]`
//! cents. Per scenario, each file draws an integer arrival count around its
//! type's mean, a latency requirement that grows with size, and an access
//! bid `50 S ln(lambda + 1) / l^2`.

use std::collections::BTreeMap;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Poisson;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FileSpec, Scenario};
use crate::units;

/// Sizes of the five file types, MB.
pub const TYPE_SIZES_MB: [f64; 5] = [64.0, 128.0, 256.0, 512.0, 1024.0];

/// Mean arrival count per time unit of each file type.
pub const TYPE_MEAN_ARRIVALS: [f64; 5] = [20.0, 10.0, 8.0, 4.0, 2.0];

pub const SCENARIO_SCHEMA_VERSION: u32 = 1;

const FILE_STREAM: u64 = 1;
const SCENARIO_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorSpec {
    pub num_files: usize,
    /// Proportions over the five file types.
    pub type_mix: [f64; 5],
    pub num_scenarios: usize,
    pub seed: u64,
    /// Mean arrival count per `arrival_time_unit_s`, per type.
    pub mean_arrivals: [f64; 5],
    /// Length in seconds of the time unit the arrival counts refer to.
    /// Rates fed to the queueing model are `count / arrival_time_unit_s`.
    pub arrival_time_unit_s: f64,
    /// Storage bid per MB is uniform on this range, cents.
    pub storage_bid_per_mb: (f64, f64),
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        Self {
            num_files: 1000,
            type_mix: [0.2; 5],
            num_scenarios: 10,
            seed: 0,
            mean_arrivals: TYPE_MEAN_ARRIVALS,
            arrival_time_unit_s: 1.0,
            storage_bid_per_mb: (0.1, 0.3),
        }
    }
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_files < 1 {
            return Err(Error::InvalidConfig("num_files must be at least 1".into()));
        }
        if self.num_scenarios < 1 {
            return Err(Error::InvalidConfig("num_scenarios must be at least 1".into()));
        }
        if self.type_mix.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::InvalidConfig("type_mix entries must be non-negative".into()));
        }
        let total: f64 = self.type_mix.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!("type_mix sums to {total}, expected 1")));
        }
        if self.mean_arrivals.iter().any(|&m| !(m >= 0.0 && m.is_finite())) {
            return Err(Error::InvalidConfig("mean_arrivals must be non-negative".into()));
        }
        if !(self.arrival_time_unit_s > 0.0) {
            return Err(Error::InvalidConfig("arrival_time_unit_s must be positive".into()));
        }
        let (lo, hi) = self.storage_bid_per_mb;
        if !(lo >= 0.0 && hi >= lo) {
            return Err(Error::InvalidConfig("storage_bid_per_mb must be a non-negative range".into()));
        }
        Ok(())
    }
}

/// Index of the file type closest (in log size) to `size_mb`.
pub fn file_type_of(size_mb: f64) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (t, &s) in TYPE_SIZES_MB.iter().enumerate() {
        let d = (size_mb.ln() - s.ln()).abs();
        if d < best_d {
            best = t;
            best_d = d;
        }
    }
    best
}

/// Latency requirement range in ms; the size enters in bytes.
pub fn latency_req_range_ms(size_mb: f64) -> (f64, f64) {
    let bytes = units::mb_to_bytes(size_mb);
    (30.0 + bytes / 5.0e6, 30.0 + bytes / 1.0e6)
}

/// Access bid in cents for an arrival count and latency requirement (ms).
/// The size enters in MB; the logarithm is natural.
pub fn access_bid_cents(size_mb: f64, arrival_count: f64, latency_req_ms: f64) -> f64 {
    50.0 * size_mb * (arrival_count + 1.0).ln() / (latency_req_ms * latency_req_ms)
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn generate_files(spec: &GeneratorSpec) -> Result<Vec<FileSpec>> {
    spec.validate()?;
    let mut rng = rng_for(spec.seed, FILE_STREAM);
    let types = WeightedIndex::new(spec.type_mix).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let (lo, hi) = spec.storage_bid_per_mb;
    Ok((0..spec.num_files)
        .map(|id| {
            let size_mb = TYPE_SIZES_MB[types.sample(&mut rng)];
            let per_mb = if hi > lo { rng.random_range(lo..hi) } else { lo };
            FileSpec {
                id,
                size_mb,
                storage_bid_cents: size_mb * per_mb,
            }
        })
        .collect())
}

fn draw_count(rng: &mut ChaCha8Rng, mean: f64) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    Poisson::new(mean).map(|p| p.sample(rng)).unwrap_or(mean)
}

/// Draws `num_scenarios` scenarios and assigns each its empirical frequency
/// among the draws. Identical draws are merged, so with continuous latency
/// requirements every scenario ends up with probability `1 / K`.
pub fn generate_scenarios(files: &[FileSpec], spec: &GeneratorSpec) -> Result<Vec<Scenario>> {
    spec.validate()?;
    let mut rng = rng_for(spec.seed, SCENARIO_STREAM);
    let k_total = spec.num_scenarios;
    let mut draws: Vec<Scenario> = Vec::with_capacity(k_total);
    for _ in 0..k_total {
        let n = files.len();
        let mut sc = Scenario {
            index: 0,
            probability: 0.0,
            access_bid_cents: Vec::with_capacity(n),
            latency_req_ms: Vec::with_capacity(n),
            arrival_rate_per_s: Vec::with_capacity(n),
        };
        for f in files {
            let ty = file_type_of(f.size_mb);
            let count = draw_count(&mut rng, spec.mean_arrivals[ty]);
            let (lo, hi) = latency_req_range_ms(f.size_mb);
            let l_ms = rng.random_range(lo..hi);
            sc.arrival_rate_per_s.push(count / spec.arrival_time_unit_s);
            sc.latency_req_ms.push(l_ms);
            sc.access_bid_cents.push(access_bid_cents(f.size_mb, count, l_ms));
        }
        draws.push(sc);
    }

    // empirical distribution over distinct draws, in first-seen order
    let mut counts: Vec<(Scenario, usize)> = Vec::new();
    for d in draws {
        match counts.iter_mut().find(|(s, _)| same_realization(s, &d)) {
            Some((_, c)) => *c += 1,
            None => counts.push((d, 1)),
        }
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(k, (mut s, c))| {
            s.index = k;
            s.probability = c as f64 / k_total as f64;
            s
        })
        .collect())
}

fn same_realization(a: &Scenario, b: &Scenario) -> bool {
    a.access_bid_cents == b.access_bid_cents && a.latency_req_ms == b.latency_req_ms && a.arrival_rate_per_s == b.arrival_rate_per_s
}

/// Scenario index realized in each of `num_slots` slots, i.i.d. by probability.
pub fn realize_slots(scenarios: &[Scenario], num_slots: usize, seed: u64) -> Result<Vec<usize>> {
    let weights: Vec<f64> = scenarios.iter().map(|s| s.probability).collect();
    let total: f64 = weights.iter().sum();
    if scenarios.is_empty() || (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidConfig(format!(
            "slot realization needs probabilities summing to 1, got {total}"
        )));
    }
    let dist = WeightedIndex::new(&weights).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..num_slots).map(|_| dist.sample(&mut rng)).collect())
}

/// Serialized form of a generated instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    pub schema_version: u32,
    pub generator: Option<GeneratorSpec>,
    pub files: Vec<FileSpec>,
    pub scenarios: Vec<Scenario>,
}

impl ScenarioSet {
    pub fn generate(spec: &GeneratorSpec) -> Result<Self> {
        let files = generate_files(spec)?;
        let scenarios = generate_scenarios(&files, spec)?;
        Ok(Self {
            schema_version: SCENARIO_SCHEMA_VERSION,
            generator: Some(spec.clone()),
            files,
            scenarios,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let set: Self = serde_json::from_str(s)?;
        if set.schema_version != SCENARIO_SCHEMA_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported scenario schema version {}",
                set.schema_version
            )));
        }
        crate::model::validate_instance(&set.files, &set.scenarios)?;
        Ok(set)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Files per type index.
    pub fn type_counts(&self) -> BTreeMap<usize, usize> {
        let mut out = BTreeMap::new();
        for f in &self.files {
            *out.entry(file_type_of(f.size_mb)).or_insert(0) += 1;
        }
        out
    }
}
