//! Sigmoid integrality penalty.
//!
//! `g(x) = 1/(1+e^(a x)) - 1/(1+e^(a (x-1)))` is close to -1 on (0, 1) and
//! close to 0 outside; `g1 = g + 1/2 - 1/(1+e^a)` is exactly zero at 0 and 1
//! and negative in between. Adding `C * g1` for every binary variable turns
//! the mixed-integer problems into smooth box-constrained ones.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{check_len, FileSpec, Scenario, SystemConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyParams {
    pub alpha: f64,
    pub weight: f64,
}

impl PenaltyParams {
    pub fn from_config(cfg: &SystemConfig) -> Self {
        Self {
            alpha: cfg.penalty_alpha,
            weight: cfg.penalty_weight,
        }
    }
}

/// `1 / (1 + e^t)` without overflow.
#[inline]
pub fn sigmoid_neg(t: f64) -> f64 {
    if t > 0.0 {
        let e = (-t).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + t.exp())
    }
}

/// `s(t) (1 - s(t))` for `s = sigmoid_neg`, the magnitude of its derivative.
#[inline]
fn sigmoid_slope(t: f64) -> f64 {
    let e = (-t.abs()).exp();
    e / ((1.0 + e) * (1.0 + e))
}

#[inline]
pub fn g(x: f64, alpha: f64) -> f64 {
    sigmoid_neg(alpha * x) - sigmoid_neg(alpha * (x - 1.0))
}

#[inline]
pub fn g1(x: f64, alpha: f64) -> f64 {
    g(x, alpha) + (0.5 - sigmoid_neg(alpha))
}

/// Derivative of `g` (and of `g1`) with respect to `x`.
#[inline]
pub fn g1_grad(x: f64, alpha: f64) -> f64 {
    alpha * (sigmoid_slope(alpha * (x - 1.0)) - sigmoid_slope(alpha * x))
}

/// Fractional first-stage variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxedStageOne {
    pub accept: Vec<f64>,
    pub hot_replica: Vec<f64>,
}

/// Fractional second-stage variables for one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxedStageTwo {
    pub accept_access: Vec<f64>,
    pub sched_prob: Vec<[f64; 2]>,
}

/// Expected profit at fractional variables plus `C * g1` over every
/// relaxed binary (acceptance, replica, per-scenario access).
pub fn relaxed_objective(
    d1: &RelaxedStageOne,
    d2: &[RelaxedStageTwo],
    scenarios: &[Scenario],
    files: &[FileSpec],
    cfg: &SystemConfig,
    pen: &PenaltyParams,
) -> Result<f64> {
    let n = files.len();
    check_len("accept", n, d1.accept.len())?;
    check_len("hot_replica", n, d1.hot_replica.len())?;
    check_len("stage_two", scenarios.len(), d2.len())?;
    let t = cfg.num_slots as f64;
    let mut obj = 0.0;
    let mut penalty = 0.0;
    for (i, f) in files.iter().enumerate() {
        let (a, r) = (d1.accept[i], d1.hot_replica[i]);
        obj += f.storage_bid_cents * a - f.size_mb * (2.0 * a - r) * cfg.cold_cost_cents_per_mb - f.size_mb * r * cfg.hot_cost_cents_per_mb;
        penalty += g1(a, pen.alpha) + g1(r, pen.alpha);
    }
    for (sc, x) in scenarios.iter().zip(d2) {
        check_len("accept_access", n, x.accept_access.len())?;
        for (i, &h) in x.accept_access.iter().enumerate() {
            obj += t * sc.probability * sc.access_bid_cents[i] * h;
            penalty += g1(h, pen.alpha);
        }
    }
    Ok(obj + pen.weight * penalty)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn saturated_midpoint() {
        assert!((g(0.5, 1e6) + 1.0).abs() < 1e-12);
        assert!((g1(0.5, 1e6) + 0.5).abs() < 1e-9);
    }

    #[test]
    fn far_outside_is_zero() {
        assert!(g(-10.0, 1e6).abs() < 1e-12);
        assert!(g(11.0, 1e6).abs() < 1e-12);
    }

    #[test]
    fn zero_at_both_ends() {
        for alpha in [1.0, 10.0, 1e3, 1e6, 1e9] {
            assert!(g1(0.0, alpha).abs() <= 1e-12, "alpha {alpha}");
            assert!(g1(1.0, alpha).abs() <= 1e-12, "alpha {alpha}");
        }
    }

    #[test]
    fn symmetric_about_half() {
        for alpha in [3.0, 10.0, 1e3, 1e6] {
            for k in 0..=200 {
                let x = -0.5 + k as f64 * 0.01;
                assert!((g(x, alpha) - g(1.0 - x, alpha)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn negative_strictly_inside() {
        for alpha in [10.0, 1e3, 1e6] {
            for k in 1..1000 {
                let x = k as f64 / 1000.0;
                assert!(g1(x, alpha) < 0.0);
            }
        }
    }

    #[test]
    fn never_nan() {
        for alpha in [1e-3, 10.0, 1e6, 1e12] {
            for k in 0..=2100 {
                let x = -10.0 + k as f64 * 0.01;
                assert!(g(x, alpha).is_finite());
                assert!(g1(x, alpha).is_finite());
                assert!(g1_grad(x, alpha).is_finite());
            }
        }
    }

    /// Central difference of `x -> sigmoid_neg(alpha (x - shift))`, taken on
    /// whichever of `s(t)` or `1 - s(t) = s(-t)` is the small tail so that
    /// the difference keeps full relative precision.
    fn fd_sigmoid_term(x: f64, shift: f64, alpha: f64) -> f64 {
        let h = 1e-4 / alpha;
        let t = alpha * (x - shift);
        let central = |f: &dyn Fn(f64) -> f64| (f(x + h) - f(x - h)) / (2.0 * h);
        if t > 0.0 {
            central(&|y| sigmoid_neg(alpha * (y - shift)))
        } else {
            -central(&|y| sigmoid_neg(-alpha * (y - shift)))
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for alpha in [2.0, 10.0, 50.0, 500.0] {
            for k in 0..=140 {
                let x = -0.2 + k as f64 * 0.01 + 0.003;
                let grad = g1_grad(x, alpha);
                if grad.abs() <= 1e-12 {
                    continue;
                }
                let fd = fd_sigmoid_term(x, 0.0, alpha) - fd_sigmoid_term(x, 1.0, alpha);
                assert!((grad - fd).abs() <= 1e-6 * grad.abs(), "alpha {alpha} x {x}: {grad} vs {fd}");
            }
        }
    }

    fn one_file() -> (Vec<FileSpec>, Vec<Scenario>) {
        (
            vec![FileSpec {
                id: 0,
                size_mb: 64.0,
                storage_bid_cents: 16.0,
            }],
            vec![Scenario {
                index: 0,
                probability: 1.0,
                access_bid_cents: vec![10.0],
                latency_req_ms: vec![50.0],
                arrival_rate_per_s: vec![1.0],
            }],
        )
    }

    fn point(a: f64, r: f64, h: f64) -> (RelaxedStageOne, Vec<RelaxedStageTwo>) {
        (
            RelaxedStageOne {
                accept: vec![a],
                hot_replica: vec![r],
            },
            vec![RelaxedStageTwo {
                accept_access: vec![h],
                sched_prob: vec![[h, 0.0]],
            }],
        )
    }

    #[test]
    fn relaxed_objective_all_zero() {
        let (files, scs) = one_file();
        let (d1, d2) = point(0.0, 0.0, 0.0);
        let cfg = SystemConfig::default();
        let pen = PenaltyParams::from_config(&cfg);
        assert_eq!(relaxed_objective(&d1, &d2, &scs, &files, &cfg, &pen).unwrap(), 0.0);
    }

    #[test]
    fn relaxed_objective_integral_point_equals_profit() {
        let (files, scs) = one_file();
        let cfg = SystemConfig {
            num_slots: 1,
            ..SystemConfig::default()
        };
        let pen = PenaltyParams::from_config(&cfg);
        let (d1, d2) = point(1.0, 0.0, 1.0);
        let v = relaxed_objective(&d1, &d2, &scs, &files, &cfg, &pen).unwrap();
        // penalties vanish to within C * 1e-16
        assert!((v - 19.6).abs() < 1e-5, "{v}");
    }

    #[test]
    fn fractional_acceptance_costs_half_the_weight() {
        let (files, scs) = one_file();
        let cfg = SystemConfig {
            num_slots: 1,
            ..SystemConfig::default()
        };
        let pen = PenaltyParams::from_config(&cfg);
        let (d1, d2) = point(0.5, 0.0, 0.0);
        let no_pen = PenaltyParams { weight: 0.0, ..pen };
        let with = relaxed_objective(&d1, &d2, &scs, &files, &cfg, &pen).unwrap();
        let without = relaxed_objective(&d1, &d2, &scs, &files, &cfg, &no_pen).unwrap();
        assert!(((without - with) - 5e8).abs() < 1.0);
    }

    #[test]
    fn larger_weight_never_raises_objective() {
        let (files, scs) = one_file();
        let cfg = SystemConfig::default();
        let (d1, d2) = point(0.3, 0.2, 0.7);
        let mut last = f64::INFINITY;
        for w in [0.0, 1.0, 10.0, 1e3, 1e9] {
            let pen = PenaltyParams { alpha: 20.0, weight: w };
            let v = relaxed_objective(&d1, &d2, &scs, &files, &cfg, &pen).unwrap();
            assert!(v <= last);
            last = v;
        }
    }
}
