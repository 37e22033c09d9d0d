//! Smooth relaxed problems and their gradients.
//!
//! Stage one packs, per file, `[A, R, H^1, P^1, ..., H^K, P^K]` where `P^k`
//! is the hot scheduling probability and the cold one is `H^k - P^k`. Stage
//! two packs `[H, P]` for a single scenario with `A`, `R` entering as upper
//! bounds. Capacity, stability and latency are handled by an augmented
//! Lagrangian.
//!
//! The order constraints `R, H <= A` and `P <= R, H` are removed by writing
//! each variable as a product of box-constrained factors: `R = a r`,
//! `H = a h`, `P = a h r p` with every factor in `[0, 1]`.

use crate::model::{FileSpec, Scenario, StageOneDecision, SystemConfig};
use crate::relax::{g1, g1_grad};

/// Offered load, as a fraction of the rate, past which the waiting-time
/// pole is replaced by its quadratic Taylor extension.
const BARRIER_KNEE: f64 = 0.98;

/// `1 / (mu - f)` and its derivative, continued quadratically past the knee
/// so the value stays finite at and beyond the pole.
#[inline]
pub(crate) fn pole(f: f64, mu: f64) -> (f64, f64) {
    let knee = BARRIER_KNEE * mu;
    if f <= knee {
        let a = 1.0 / (mu - f);
        (a, a * a)
    } else {
        let a = 1.0 / (mu - knee);
        let d = f - knee;
        (a + a * a * d + a * a * a * d * d, a * a + 2.0 * a * a * a * d)
    }
}

/// Latency and stability terms of one scenario.
pub(crate) struct ScenarioTerms<'a> {
    pub sc: &'a Scenario,
    pub megabits: &'a [f64],
    pub rates: [f64; 2],
    pub stable_load: [f64; 2],
    pub lat_req_s: Vec<f64>,
}

/// Multipliers, scales and penalty parameter of the augmented Lagrangian
/// restricted to one scenario.
pub(crate) struct ScenarioMultipliers<'a> {
    pub lat: &'a [f64],
    pub lat_scale: &'a [f64],
    pub stab: [f64; 2],
    pub stab_scale: f64,
    pub rho: f64,
}

/// `s/(2 rho) (max(0, mu + rho g)^2 - mu^2)` and the coefficient
/// `s max(0, mu + rho g)` multiplying the constraint gradient.
#[inline]
fn al_term(g: f64, mu: f64, scale: f64, rho: f64) -> (f64, f64) {
    let shifted = (mu + rho * g).max(0.0);
    (scale / (2.0 * rho) * (shifted * shifted - mu * mu), scale * shifted)
}

impl<'a> ScenarioTerms<'a> {
    pub fn new(sc: &'a Scenario, megabits: &'a [f64], cfg: &SystemConfig) -> Self {
        Self {
            sc,
            megabits,
            rates: cfg.rates_mbps(),
            stable_load: [
                cfg.stable_load_mbps(crate::model::Tier::Cold),
                cfg.stable_load_mbps(crate::model::Tier::Hot),
            ],
            lat_req_s: (0..megabits.len()).map(|i| sc.latency_req_s(i)).collect(),
        }
    }

    /// Normalized constraint values: `T_i / l_i - 1` per file and
    /// `f_j / stable_load_j - 1` per tier, with the smoothed pole.
    pub fn constraint_values(&self, h: &[f64], p: &[f64], lat_out: &mut [f64]) -> [f64; 2] {
        let (f, hh) = self.loads(h, p);
        let w = self.waits(&f, &hh);
        for i in 0..h.len() {
            let pi = [(h[i] - p[i]).max(0.0), p[i]];
            let b = self.megabits[i];
            let t: f64 = (0..2).map(|j| pi[j] * (b / self.rates[j] + w[j].0)).sum();
            lat_out[i] = t / self.lat_req_s[i] - 1.0;
        }
        [f[0] / self.stable_load[0] - 1.0, f[1] / self.stable_load[1] - 1.0]
    }

    fn loads(&self, h: &[f64], p: &[f64]) -> ([f64; 2], [f64; 2]) {
        let mut f = [0.0; 2];
        let mut hh = [0.0; 2];
        for i in 0..h.len() {
            let lam = self.sc.arrival_rate_per_s[i];
            if lam == 0.0 {
                continue;
            }
            let b = self.megabits[i];
            let pi = [(h[i] - p[i]).max(0.0), p[i]];
            for j in 0..2 {
                let r = lam * pi[j];
                f[j] += r * b;
                hh[j] += r * b * b;
            }
        }
        (f, hh)
    }

    /// Per tier: (waiting time, pole value, pole derivative).
    fn waits(&self, f: &[f64; 2], hh: &[f64; 2]) -> [(f64, f64, f64); 2] {
        let mut out = [(0.0, 0.0, 0.0); 2];
        for j in 0..2 {
            let (phi, dphi) = pole(f[j], self.rates[j]);
            out[j] = (hh[j] * phi / self.rates[j], phi, dphi);
        }
        out
    }

    /// Adds the penalty gradient to `dh`, `dp` (as a quantity to subtract
    /// from the objective) and returns the penalty value.
    pub fn penalty(&self, h: &[f64], p: &[f64], m: &ScenarioMultipliers<'_>, dh: &mut [f64], dp: &mut [f64]) -> f64 {
        let n = h.len();
        let (f, hh) = self.loads(h, p);
        let w = self.waits(&f, &hh);
        let mut value = 0.0;
        // sum_i coef_i pi_ij / l_i
        let mut weighted_share = [0.0; 2];
        let mut coef = vec![0.0; n];
        for i in 0..n {
            let pi = [(h[i] - p[i]).max(0.0), p[i]];
            let b = self.megabits[i];
            let t: f64 = (0..2).map(|j| pi[j] * (b / self.rates[j] + w[j].0)).sum();
            let g = t / self.lat_req_s[i] - 1.0;
            let (v, c) = al_term(g, m.lat[i], m.lat_scale[i], m.rho);
            value += v;
            coef[i] = c;
            if c != 0.0 {
                for j in 0..2 {
                    weighted_share[j] += c * pi[j] / self.lat_req_s[i];
                }
            }
        }
        let mut stab_coef = [0.0; 2];
        for j in 0..2 {
            let g = f[j] / self.stable_load[j] - 1.0;
            let (v, c) = al_term(g, m.stab[j], m.stab_scale, m.rho);
            value += v;
            stab_coef[j] = c;
        }
        for i in 0..n {
            let lam = self.sc.arrival_rate_per_s[i];
            let b = self.megabits[i];
            let mut d = [0.0; 2];
            for j in 0..2 {
                let mu = self.rates[j];
                let (_, phi, dphi) = w[j];
                let own = coef[i] / self.lat_req_s[i] * (b / mu + w[j].0);
                let via_wait = weighted_share[j] * lam * (b * b * phi + hh[j] * dphi * b) / mu;
                let via_stab = stab_coef[j] * lam * b / self.stable_load[j];
                d[j] = own + via_wait + via_stab;
            }
            // H feeds the cold share; P moves mass from cold to hot
            dh[i] += d[0];
            dp[i] += d[1] - d[0];
        }
        value
    }
}

pub(crate) struct Multipliers {
    pub cap: [f64; 2],
    pub stab: Vec<[f64; 2]>,
    pub lat: Vec<Vec<f64>>,
}

/// Normalized constraint values at a point.
pub(crate) struct ConstraintValues {
    pub cap: [f64; 2],
    pub stab: Vec<[f64; 2]>,
    pub lat: Vec<Vec<f64>>,
}

impl ConstraintValues {
    pub fn max_violation(&self) -> f64 {
        let mut worst = self.cap[0].max(self.cap[1]);
        for s in &self.stab {
            worst = worst.max(s[0]).max(s[1]);
        }
        for l in &self.lat {
            for &v in l {
                worst = worst.max(v);
            }
        }
        worst.max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Layout {
    /// Storage and access decisions jointly, one access block per scenario.
    StageOne,
    /// Access decisions for one scenario under a fixed storage decision.
    StageTwo,
}

pub(crate) struct Problem<'a> {
    pub files: &'a [FileSpec],
    /// Restricted configuration used for every constraint.
    pub cfg: SystemConfig,
    pub layout: Layout,
    pub scenarios: Vec<&'a Scenario>,
    /// Objective weight of each scenario's access revenue.
    pub weights: Vec<f64>,
    pub megabits: Vec<f64>,
    pub block: usize,
    /// Upper bound of each packed factor; the lower bound is 0.
    pub ub: Vec<f64>,
    /// Linear objective coefficient per packed variable.
    pub lin: Vec<f64>,
    /// Whether each offset in a block is a relaxed binary.
    pub binary: Vec<bool>,
    pub cap_scale: f64,
    pub stab_scale: Vec<f64>,
    pub lat_scale: Vec<Vec<f64>>,
    /// Typical magnitude of a binary variable's objective coefficient.
    pub obj_scale: f64,
}

/// Integrality-penalty stage parameters.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Stage {
    pub alpha: f64,
    pub weight: f64,
}

impl<'a> Problem<'a> {
    /// Stage one over `scenarios` with revenue weight `T p^k`. With no
    /// scenarios this is the storage-only problem.
    pub fn stage_one(files: &'a [FileSpec], scenarios: &'a [Scenario], cfg: &SystemConfig) -> Self {
        let k = scenarios.len();
        let block = 2 + 2 * k;
        let t = cfg.num_slots as f64;
        let weights: Vec<f64> = scenarios.iter().map(|s| t * s.probability).collect();
        let mut binary = vec![false; block];
        binary[0] = true;
        binary[1] = true;
        for s in 0..k {
            binary[2 + 2 * s] = true;
        }
        let mut lin = vec![0.0; files.len() * block];
        for (i, f) in files.iter().enumerate() {
            let base = i * block;
            lin[base] = f.storage_bid_cents - 2.0 * f.size_mb * cfg.cold_cost_cents_per_mb;
            lin[base + 1] = f.size_mb * (cfg.cold_cost_cents_per_mb - cfg.hot_cost_cents_per_mb);
            for (s, sc) in scenarios.iter().enumerate() {
                lin[base + 2 + 2 * s] = weights[s] * sc.access_bid_cents[i];
            }
        }
        let restricted = cfg.restricted();
        let cap_scale = files.iter().map(|f| f.storage_bid_cents.abs()).sum::<f64>().max(1e-9);
        let mut p = Self {
            files,
            cfg: restricted,
            layout: Layout::StageOne,
            scenarios: scenarios.iter().collect(),
            weights,
            megabits: files.iter().map(|f| f.megabits()).collect(),
            block,
            ub: vec![1.0; files.len() * block],
            lin,
            binary,
            cap_scale,
            stab_scale: Vec::new(),
            lat_scale: Vec::new(),
            obj_scale: 1.0,
        };
        p.finish_scales();
        p
    }

    /// Stage two for one scenario given a storage decision.
    pub fn stage_two(files: &'a [FileSpec], d1: &StageOneDecision, sc: &'a Scenario, cfg: &SystemConfig) -> Self {
        let block = 2;
        let ub = d1
            .accept
            .iter()
            .zip(&d1.hot_replica)
            .flat_map(|(&a, &r)| [if a { 1.0 } else { 0.0 }, if a && r { 1.0 } else { 0.0 }])
            .collect();
        let mut lin = vec![0.0; files.len() * block];
        for i in 0..files.len() {
            lin[i * block] = sc.access_bid_cents[i];
        }
        let mut p = Self {
            files,
            cfg: cfg.restricted(),
            layout: Layout::StageTwo,
            scenarios: vec![sc],
            weights: vec![1.0],
            megabits: files.iter().map(|f| f.megabits()).collect(),
            block,
            ub,
            lin,
            binary: vec![true, false],
            cap_scale: 1.0,
            stab_scale: Vec::new(),
            lat_scale: Vec::new(),
            obj_scale: 1.0,
        };
        p.finish_scales();
        p
    }

    fn finish_scales(&mut self) {
        let n = self.files.len();
        let mut lat_scale = Vec::with_capacity(self.scenarios.len());
        let mut stab_scale = Vec::with_capacity(self.scenarios.len());
        for (s, sc) in self.scenarios.iter().enumerate() {
            let vals: Vec<f64> = (0..n).map(|i| self.weights[s] * sc.access_bid_cents[i]).collect();
            let total: f64 = vals.iter().sum();
            let floor = (total / n.max(1) as f64).max(1e-6) * 1e-2;
            lat_scale.push(vals.iter().map(|v| v + floor).collect());
            stab_scale.push(total.max(1e-6));
        }
        self.lat_scale = lat_scale;
        self.stab_scale = stab_scale;
        let (mut sum, mut count) = (0.0, 0usize);
        for (v, c) in self.lin.iter().enumerate() {
            if self.binary[v % self.block] && *c != 0.0 {
                sum += c.abs();
                count += 1;
            }
        }
        self.obj_scale = if count > 0 { sum / count as f64 } else { 1.0 };
    }

    pub fn dim(&self) -> usize {
        self.files.len() * self.block
    }

    /// Variable values from box factors.
    pub fn lift(&self, z: &[f64], x: &mut [f64]) {
        let bs = self.block;
        for (zb, xb) in z.chunks_exact(bs).zip(x.chunks_exact_mut(bs)) {
            match self.layout {
                Layout::StageOne => {
                    let (a, r) = (zb[0], zb[1]);
                    xb[0] = a;
                    xb[1] = a * r;
                    for s in 0..self.scenarios.len() {
                        let (h, p) = (zb[2 + 2 * s], zb[3 + 2 * s]);
                        xb[2 + 2 * s] = a * h;
                        xb[3 + 2 * s] = a * h * r * p;
                    }
                }
                Layout::StageTwo => {
                    xb[0] = zb[0];
                    xb[1] = zb[0] * zb[1];
                }
            }
        }
    }

    /// Gradient with respect to the factors from the gradient with respect
    /// to the variables.
    pub fn pull_back(&self, z: &[f64], gx: &[f64], gz: &mut [f64]) {
        let bs = self.block;
        for ((zb, gxb), gzb) in z.chunks_exact(bs).zip(gx.chunks_exact(bs)).zip(gz.chunks_exact_mut(bs)) {
            match self.layout {
                Layout::StageOne => {
                    let (a, r) = (zb[0], zb[1]);
                    let mut ga = gxb[0] + r * gxb[1];
                    let mut gr = a * gxb[1];
                    for s in 0..self.scenarios.len() {
                        let (hv, pv) = (2 + 2 * s, 3 + 2 * s);
                        let (h, p) = (zb[hv], zb[pv]);
                        let (gh, gp) = (gxb[hv], gxb[pv]);
                        ga += h * gh + h * r * p * gp;
                        gr += a * h * p * gp;
                        gzb[hv] = a * gh + a * r * p * gp;
                        gzb[pv] = a * h * r * gp;
                    }
                    gzb[0] = ga;
                    gzb[1] = gr;
                }
                Layout::StageTwo => {
                    let (h, p) = (zb[0], zb[1]);
                    gzb[0] = gxb[0] + p * gxb[1];
                    gzb[1] = h * gxb[1];
                }
            }
        }
    }

    pub fn num_scenarios(&self) -> usize {
        self.scenarios.len()
    }

    /// Offsets of `(H, P)` for scenario `s` within a block.
    #[inline]
    pub fn access_offsets(&self, s: usize) -> (usize, usize) {
        match self.layout {
            Layout::StageOne => (2 + 2 * s, 3 + 2 * s),
            Layout::StageTwo => (0, 1),
        }
    }

    pub fn new_multipliers(&self) -> Multipliers {
        let n = self.files.len();
        Multipliers {
            cap: [0.0; 2],
            stab: vec![[0.0; 2]; self.num_scenarios()],
            lat: vec![vec![0.0; n]; self.num_scenarios()],
        }
    }

    fn gather(&self, x: &[f64], s: usize, h: &mut [f64], p: &mut [f64]) {
        let (oh, op) = self.access_offsets(s);
        for i in 0..self.files.len() {
            h[i] = x[i * self.block + oh];
            p[i] = x[i * self.block + op];
        }
    }

    fn capacity_values(&self, x: &[f64]) -> [f64; 2] {
        if self.layout != Layout::StageOne {
            return [-1.0, -1.0];
        }
        let (mut cold, mut hot) = (0.0, 0.0);
        for (i, f) in self.files.iter().enumerate() {
            let a = x[i * self.block];
            let r = x[i * self.block + 1];
            cold += f.size_mb * (2.0 * a - r);
            hot += f.size_mb * r;
        }
        [cold / self.cfg.cold_capacity_mb - 1.0, hot / self.cfg.hot_capacity_mb - 1.0]
    }

    pub fn constraint_values(&self, x: &[f64]) -> ConstraintValues {
        let n = self.files.len();
        let mut h = vec![0.0; n];
        let mut p = vec![0.0; n];
        let mut stab = Vec::with_capacity(self.num_scenarios());
        let mut lat = Vec::with_capacity(self.num_scenarios());
        for s in 0..self.num_scenarios() {
            self.gather(x, s, &mut h, &mut p);
            let terms = ScenarioTerms::new(self.scenarios[s], &self.megabits, &self.cfg);
            let mut l = vec![0.0; n];
            stab.push(terms.constraint_values(&h, &p, &mut l));
            lat.push(l);
        }
        ConstraintValues {
            cap: self.capacity_values(x),
            stab,
            lat,
        }
    }

    /// Relaxed objective to maximize (linear profit plus integrality
    /// penalty minus augmented-Lagrangian terms); fills `grad` with its
    /// gradient.
    pub fn eval(&self, x: &[f64], stage: Stage, mult: &Multipliers, rho: f64, grad: &mut [f64]) -> f64 {
        let n = self.files.len();
        let bs = self.block;
        let mut value = 0.0;
        for (v, (&xv, &c)) in x.iter().zip(&self.lin).enumerate() {
            value += c * xv;
            grad[v] = c;
            if stage.weight != 0.0 && self.binary[v % bs] {
                value += stage.weight * g1(xv, stage.alpha);
                grad[v] += stage.weight * g1_grad(xv, stage.alpha);
            }
        }

        if self.layout == Layout::StageOne {
            let cap = self.capacity_values(x);
            let (v0, c0) = al_term(cap[0], mult.cap[0], self.cap_scale, rho);
            let (v1, c1) = al_term(cap[1], mult.cap[1], self.cap_scale, rho);
            value -= v0 + v1;
            if c0 != 0.0 || c1 != 0.0 {
                for (i, f) in self.files.iter().enumerate() {
                    let cold = c0 * f.size_mb / self.cfg.cold_capacity_mb;
                    let hot = c1 * f.size_mb / self.cfg.hot_capacity_mb;
                    grad[i * bs] -= 2.0 * cold;
                    grad[i * bs + 1] -= hot - cold;
                }
            }
        }

        let mut h = vec![0.0; n];
        let mut p = vec![0.0; n];
        let mut dh = vec![0.0; n];
        let mut dp = vec![0.0; n];
        for s in 0..self.num_scenarios() {
            self.gather(x, s, &mut h, &mut p);
            dh.iter_mut().for_each(|d| *d = 0.0);
            dp.iter_mut().for_each(|d| *d = 0.0);
            let terms = ScenarioTerms::new(self.scenarios[s], &self.megabits, &self.cfg);
            let m = ScenarioMultipliers {
                lat: &mult.lat[s],
                lat_scale: &self.lat_scale[s],
                stab: mult.stab[s],
                stab_scale: self.stab_scale[s],
                rho,
            };
            value -= terms.penalty(&h, &p, &m, &mut dh, &mut dp);
            let (oh, op) = self.access_offsets(s);
            for i in 0..n {
                grad[i * bs + oh] -= dh[i];
                grad[i * bs + op] -= dp[i];
            }
        }
        value
    }

    pub fn update_multipliers(&self, mult: &mut Multipliers, cons: &ConstraintValues, rho: f64) {
        if self.layout == Layout::StageOne {
            for j in 0..2 {
                mult.cap[j] = (mult.cap[j] + rho * cons.cap[j]).max(0.0);
            }
        }
        for s in 0..self.num_scenarios() {
            for j in 0..2 {
                mult.stab[s][j] = (mult.stab[s][j] + rho * cons.stab[s][j]).max(0.0);
            }
            for (m, &g) in mult.lat[s].iter_mut().zip(&cons.lat[s]) {
                *m = (*m + rho * g).max(0.0);
            }
        }
    }

    /// Fraction of relaxed binaries within `tol` of 0 or 1.
    pub fn integrality(&self, x: &[f64], tol: f64) -> f64 {
        let (mut near, mut total) = (0usize, 0usize);
        for (v, &xv) in x.iter().enumerate() {
            if self.binary[v % self.block] {
                total += 1;
                if xv <= tol || xv >= 1.0 - tol {
                    near += 1;
                }
            }
        }
        if total == 0 {
            1.0
        } else {
            near as f64 / total as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn instance() -> (Vec<FileSpec>, Vec<Scenario>, SystemConfig) {
        let files = vec![
            FileSpec {
                id: 0,
                size_mb: 64.0,
                storage_bid_cents: 14.0,
            },
            FileSpec {
                id: 1,
                size_mb: 128.0,
                storage_bid_cents: 30.0,
            },
            FileSpec {
                id: 2,
                size_mb: 256.0,
                storage_bid_cents: 40.0,
            },
        ];
        let scenarios = vec![
            Scenario {
                index: 0,
                probability: 0.4,
                access_bid_cents: vec![3.0, 2.0, 1.0],
                latency_req_ms: vec![50.0, 70.0, 120.0],
                arrival_rate_per_s: vec![20.0, 9.0, 7.0],
            },
            Scenario {
                index: 1,
                probability: 0.6,
                access_bid_cents: vec![2.5, 1.0, 0.7],
                latency_req_ms: vec![45.0, 90.0, 150.0],
                arrival_rate_per_s: vec![17.0, 12.0, 4.0],
            },
        ];
        let cfg = SystemConfig {
            cold_capacity_mb: 500.0,
            hot_capacity_mb: 200.0,
            cold_rate_mbps: 25_000.0,
            hot_rate_mbps: 40_000.0,
            num_slots: 3,
            ..SystemConfig::default()
        };
        (files, scenarios, cfg)
    }

    fn check_gradient(p: &Problem<'_>, x: &[f64], stage: Stage, mult: &Multipliers, rho: f64) {
        let mut grad = vec![0.0; p.dim()];
        let f0 = p.eval(x, stage, mult, rho, &mut grad);
        let mut scratch = vec![0.0; p.dim()];
        for v in 0..p.dim() {
            let h = 1e-6;
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[v] += h;
            xm[v] -= h;
            let fd = (p.eval(&xp, stage, mult, rho, &mut scratch) - p.eval(&xm, stage, mult, rho, &mut scratch)) / (2.0 * h);
            // cancellation error of the difference quotient
            let noise = 1e-14 * f0.abs() / h;
            let tol = 1e-5 * (1.0 + fd.abs().max(grad[v].abs())) + noise;
            assert!((fd - grad[v]).abs() <= tol, "var {v}: analytic {} fd {fd}", grad[v]);
        }
    }

    fn interior_factors(p: &Problem<'_>, seed: u64) -> Vec<f64> {
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        (0..p.dim())
            .map(|v| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                p.ub[v] * (0.1 + 0.8 * ((state >> 11) as f64 / (1u64 << 53) as f64))
            })
            .collect()
    }

    /// Interior point in variable space; `P < H` strictly, away from the
    /// kink of `max(0, H - P)`.
    fn interior_point(p: &Problem<'_>, seed: u64) -> Vec<f64> {
        let z = interior_factors(p, seed);
        let mut x = vec![0.0; p.dim()];
        p.lift(&z, &mut x);
        x
    }

    #[test]
    fn stage_one_gradient_matches_finite_differences() {
        let (files, scenarios, cfg) = instance();
        let p = Problem::stage_one(&files, &scenarios, &cfg);
        let mut mult = p.new_multipliers();
        mult.cap = [0.3, 0.1];
        mult.stab[0] = [0.2, 0.0];
        mult.lat[1] = vec![0.5, 0.0, 0.1];
        for seed in 0..4 {
            let x = interior_point(&p, seed);
            check_gradient(&p, &x, Stage { alpha: 10.0, weight: 2.0 }, &mult, 50.0);
        }
    }

    #[test]
    fn gradient_is_correct_past_the_barrier_knee() {
        let (files, mut scenarios, cfg) = instance();
        for sc in &mut scenarios {
            for l in &mut sc.arrival_rate_per_s {
                *l *= 12.0;
            }
        }
        let p = Problem::stage_one(&files, &scenarios, &cfg);
        let mult = p.new_multipliers();
        let x = interior_point(&p, 9);
        let cons = p.constraint_values(&x);
        assert!(cons.stab.iter().any(|s| s[0] > 0.0 || s[1] > 0.0));
        check_gradient(&p, &x, Stage { alpha: 10.0, weight: 0.0 }, &mult, 20.0);
    }

    #[test]
    fn stage_two_gradient_matches_finite_differences() {
        let (files, scenarios, cfg) = instance();
        let d1 = StageOneDecision {
            accept: vec![true, true, false],
            hot_replica: vec![true, false, false],
        };
        let p = Problem::stage_two(&files, &d1, &scenarios[0], &cfg);
        let mut mult = p.new_multipliers();
        mult.lat[0] = vec![1.0, 0.4, 0.0];
        let x = interior_point(&p, 3);
        check_gradient(&p, &x, Stage { alpha: 30.0, weight: 1.0 }, &mult, 10.0);
    }

    #[test]
    fn factor_gradient_matches_finite_differences() {
        let (files, scenarios, cfg) = instance();
        let d1 = StageOneDecision {
            accept: vec![true, true, false],
            hot_replica: vec![true, false, false],
        };
        let one = Problem::stage_one(&files, &scenarios, &cfg);
        let two = Problem::stage_two(&files, &d1, &scenarios[1], &cfg);
        for p in [&one, &two] {
            let mut mult = p.new_multipliers();
            mult.lat[0][0] = 0.7;
            let stage = Stage { alpha: 8.0, weight: 1.5 };
            let z = interior_factors(p, 5);
            let composed = |z: &[f64], gz: &mut [f64]| {
                let mut x = vec![0.0; p.dim()];
                let mut gx = vec![0.0; p.dim()];
                p.lift(z, &mut x);
                let v = p.eval(&x, stage, &mult, 20.0, &mut gx);
                p.pull_back(z, &gx, gz);
                v
            };
            let mut gz = vec![0.0; p.dim()];
            composed(&z, &mut gz);
            let mut scratch = vec![0.0; p.dim()];
            for v in 0..p.dim() {
                if p.ub[v] == 0.0 {
                    continue;
                }
                let h = 1e-6;
                let mut zp = z.clone();
                let mut zm = z.clone();
                zp[v] += h;
                zm[v] -= h;
                let fd = (composed(&zp, &mut scratch) - composed(&zm, &mut scratch)) / (2.0 * h);
                assert!((fd - gz[v]).abs() <= 1e-5 * (1.0 + fd.abs()), "var {v}: {} vs {fd}", gz[v]);
            }
        }
    }

    #[test]
    fn lifted_points_satisfy_the_order_constraints() {
        let (files, scenarios, cfg) = instance();
        let p = Problem::stage_one(&files, &scenarios, &cfg);
        for seed in 0..20 {
            let x = interior_point(&p, seed);
            for b in x.chunks_exact(p.block) {
                assert!(b[1] <= b[0]);
                for s in 0..scenarios.len() {
                    let (h, pp) = (b[2 + 2 * s], b[3 + 2 * s]);
                    assert!(h <= b[0] && pp <= h && pp <= b[1] && pp >= 0.0);
                }
            }
        }
    }

    #[test]
    fn constraint_values_match_the_latency_model() {
        let (files, scenarios, cfg) = instance();
        let sc = &scenarios[0];
        let megabits: Vec<f64> = files.iter().map(|f| f.megabits()).collect();
        let terms = ScenarioTerms::new(sc, &megabits, &cfg);
        let h = [1.0, 1.0, 0.0];
        let p = [0.3, 0.0, 0.0];
        let mut lat = [0.0; 3];
        terms.constraint_values(&h, &p, &mut lat);
        let pi: Vec<[f64; 2]> = h.iter().zip(&p).map(|(&h, &p)| [h - p, p]).collect();
        for i in 0..2 {
            let t = crate::latency::expected_latency(i, &pi, sc, &files, &cfg).unwrap();
            assert!(((lat[i] + 1.0) * sc.latency_req_s(i) - t).abs() < 1e-12);
        }
    }

    #[test]
    fn pole_extension_is_continuous_and_increasing() {
        let mu = 100.0;
        let knee = BARRIER_KNEE * mu;
        let below = pole(knee - 1e-9, mu);
        let above = pole(knee + 1e-9, mu);
        assert!((below.0 - above.0).abs() < 1e-6);
        assert!((below.1 - above.1).abs() < 1e-3);
        let mut last = 0.0;
        for k in 0..300 {
            let (v, d) = pole(k as f64, mu);
            assert!(v.is_finite() && d > 0.0 && v > last);
            last = v;
        }
    }
}
