//! Spectral projected gradient with a nonmonotone Armijo line search.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

/// Step-length rule for the projected-gradient iterations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepRule {
    /// Barzilai-Borwein steps safeguarded to `[min_step, max_step]`, with
    /// sufficient decrease against the worst of the last `memory` values.
    Spectral { memory: usize, min_step: f64, max_step: f64 },
    /// Fixed trial step with monotone backtracking.
    Fixed { step: f64 },
}

impl Default for StepRule {
    fn default() -> Self {
        StepRule::Spectral {
            memory: 10,
            min_step: 1e-12,
            max_step: 1e12,
        }
    }
}

/// Smooth function to minimize over a convex set with cheap projection.
pub(crate) trait Smooth {
    fn dim(&self) -> usize;
    fn value_grad(&mut self, x: &[f64], grad: &mut [f64]) -> f64;
    fn project(&mut self, x: &mut [f64]);
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct SpgOutcome {
    pub iterations: usize,
    pub converged: bool,
    pub value: f64,
    /// Infinity norm of the unit-step projected gradient at the final point.
    pub residual: f64,
}

const ARMIJO: f64 = 1e-4;

/// Minimizes from `x` (projected first) for at most `max_iters` iterations.
pub(crate) fn minimize<S: Smooth>(obj: &mut S, x: &mut [f64], rule: StepRule, max_iters: usize, tol: f64) -> SpgOutcome {
    let n = obj.dim();
    obj.project(x);
    let mut g = vec![0.0; n];
    let mut f = obj.value_grad(x, &mut g);
    let (memory, min_step, max_step, mut step) = match rule {
        StepRule::Spectral {
            memory,
            min_step,
            max_step,
        } => {
            let r = unit_residual(obj, x, &g);
            (memory.max(1), min_step, max_step, (1.0 / r.max(1e-300)).clamp(min_step, max_step))
        }
        StepRule::Fixed { step } => (1, step, step, step),
    };
    let mut history = VecDeque::with_capacity(memory);
    history.push_back(f);

    let mut trial = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut xn = vec![0.0; n];
    let mut gn = vec![0.0; n];
    let mut out = SpgOutcome::default();
    for it in 0..max_iters {
        for v in 0..n {
            trial[v] = x[v] - step * g[v];
        }
        obj.project(&mut trial);
        let mut dnorm = 0.0f64;
        let mut gtd = 0.0;
        for v in 0..n {
            d[v] = trial[v] - x[v];
            dnorm = dnorm.max(d[v].abs());
            gtd += g[v] * d[v];
        }
        out.iterations = it;
        if dnorm <= tol || gtd >= 0.0 {
            out.converged = true;
            break;
        }
        let reference = history.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut lambda = 1.0;
        let fnew = loop {
            for v in 0..n {
                xn[v] = x[v] + lambda * d[v];
            }
            let fv = obj.value_grad(&xn, &mut gn);
            if fv.is_finite() && fv <= reference + ARMIJO * lambda * gtd {
                break Some(fv);
            }
            if lambda < 1e-12 {
                break None;
            }
            let denom = fv - f - lambda * gtd;
            let cand = if fv.is_finite() && denom > 0.0 {
                -0.5 * lambda * lambda * gtd / denom
            } else {
                0.5 * lambda
            };
            lambda = if cand >= 0.1 * lambda && cand <= 0.9 * lambda {
                cand
            } else {
                0.5 * lambda
            };
        };
        let Some(fnew) = fnew else {
            // no decrease along a descent direction: numerically stationary
            out.converged = true;
            break;
        };
        let (mut sts, mut sty) = (0.0, 0.0);
        for v in 0..n {
            let s = xn[v] - x[v];
            let y = gn[v] - g[v];
            sts += s * s;
            sty += s * y;
        }
        if let StepRule::Spectral { .. } = rule {
            step = if sty > 0.0 {
                (sts / sty).clamp(min_step, max_step)
            } else {
                max_step
            };
        }
        x.copy_from_slice(&xn);
        std::mem::swap(&mut g, &mut gn);
        f = fnew;
        if history.len() == memory {
            history.pop_front();
        }
        history.push_back(f);
        out.iterations = it + 1;
    }
    out.value = f;
    out.residual = unit_residual(obj, x, &g);
    out
}

fn unit_residual<S: Smooth>(obj: &mut S, x: &[f64], g: &[f64]) -> f64 {
    let mut p: Vec<f64> = x.iter().zip(g).map(|(a, b)| a - b).collect();
    obj.project(&mut p);
    p.iter().zip(x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}
