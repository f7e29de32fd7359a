//! Dense reference solver for small instances.
//!
//! Minimizes the same smoothed dual over all `n` coordinates at once with a
//! spectral projected gradient method (Barzilai-Borwein steps, nonmonotone
//! Armijo backtracking). It shares nothing with the coordinate solver beyond
//! the problem data, so agreement between the two is a meaningful check.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::diffusion::{DiffusionProblem, DualSolution, Heights};
use crate::error::{invalid, Result};

/// Largest graph the oracle accepts.
pub const MAX_NODES: usize = 400;
const MAX_ITERATIONS: usize = 2_000_000;
const MEMORY: usize = 10;
const ARMIJO: f64 = 1e-4;

/// Result of a dense solve.
#[derive(Clone, Debug)]
pub struct OracleSolution {
    pub x: Vec<f64>,
    pub grad: Vec<f64>,
    /// `‖P(x - ∇F(x)) - x‖_∞` at the returned point.
    pub residual: f64,
    pub iterations: usize,
}

impl OracleSolution {
    pub fn heights(&self) -> Heights {
        self.x.iter().enumerate().map(|(v, &h)| (v, h)).collect()
    }

    /// Repackages the result in the coordinate solver's format.
    pub fn into_dual(self, prob: &DiffusionProblem<'_>, tol: f64) -> DualSolution {
        let grad: BTreeMap<usize, f64> = self.grad.iter().copied().enumerate().collect();
        DualSolution {
            x: self.heights(),
            grad,
            iterations: self.iterations as u64,
            pushes: 0,
            converged: self.residual <= tol,
            q: prob.q(),
            mu: prob.mu(),
            term_tol: tol,
        }
    }
}

struct Dense {
    edges: Vec<(usize, usize)>,
    linear: Vec<f64>,
    q: f64,
    mu: f64,
    mu_q: f64,
}

impl Dense {
    fn new(prob: &DiffusionProblem<'_>) -> Self {
        let g = prob.graph();
        let linear = (0..g.node_count()).map(|v| prob.source(v) - g.degree(v) as f64).collect();
        let (q, mu) = (prob.q(), prob.mu());
        Self { edges: g.edges().collect(), linear, q, mu, mu_q: libm::pow(mu, q) }
    }

    fn value(&self, x: &[f64]) -> f64 {
        let mut f = 0.0;
        for &(u, v) in &self.edges {
            let d = x[u] - x[v];
            f += if self.q == 2.0 {
                0.5 * d * d
            } else {
                (libm::pow(d * d + self.mu * self.mu, 0.5 * self.q) - self.mu_q) / self.q
            };
        }
        f - x.iter().zip(&self.linear).map(|(a, b)| a * b).sum::<f64>()
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        for (o, l) in out.iter_mut().zip(&self.linear) {
            *o = -l;
        }
        for &(u, v) in &self.edges {
            let d = x[u] - x[v];
            let f = if self.q == 2.0 { d } else { libm::pow(d * d + self.mu * self.mu, 0.5 * self.q - 1.0) * d };
            out[u] += f;
            out[v] -= f;
        }
    }
}

fn projected_residual(x: &[f64], g: &[f64]) -> f64 {
    x.iter().zip(g).map(|(&a, &b)| ((a - b).max(0.0) - a).abs()).fold(0.0, f64::max)
}

/// Runs until the projected-gradient residual drops to `tol` or progress
/// stalls; check [`OracleSolution::residual`] for the outcome.
pub fn oracle_solve(prob: &DiffusionProblem<'_>, tol: f64) -> Result<OracleSolution> {
    let n = prob.graph().node_count();
    if n > MAX_NODES {
        return Err(invalid("graph", "too large for the dense oracle"));
    }
    let dense = Dense::new(prob);
    let mut x = vec![0.0; n];
    let mut g = vec![0.0; n];
    dense.gradient(&x, &mut g);
    let mut f = dense.value(&x);
    let mut history = vec![f];
    let mut alpha = 1.0 / g.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let (mut xn, mut gn, mut d) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut stalls = 0;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        if projected_residual(&x, &g) <= tol {
            break;
        }
        iterations += 1;
        for i in 0..n {
            d[i] = (x[i] - alpha * g[i]).max(0.0) - x[i];
        }
        let gtd: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
        let fmax = history.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut lambda = 1.0;
        let mut fnew;
        loop {
            for i in 0..n {
                xn[i] = (x[i] + lambda * d[i]).max(0.0);
            }
            fnew = dense.value(&xn);
            if fnew <= fmax + ARMIJO * lambda * gtd || lambda < 1e-12 {
                break;
            }
            let trial = -0.5 * lambda * lambda * gtd / (fnew - f - lambda * gtd);
            lambda = if trial >= 0.1 * lambda && trial <= 0.9 * lambda { trial } else { 0.5 * lambda };
        }
        dense.gradient(&xn, &mut gn);
        let (mut ss, mut sy) = (0.0, 0.0);
        for i in 0..n {
            let s = xn[i] - x[i];
            ss += s * s;
            sy += s * (gn[i] - g[i]);
        }
        if ss == 0.0 {
            stalls += 1;
            if stalls > 50 {
                break;
            }
            alpha = (alpha * 0.5).max(1e-30);
            continue;
        }
        stalls = 0;
        alpha = if sy > 0.0 { (ss / sy).clamp(1e-30, 1e30) } else { 1e30f64.min(alpha * 10.0) };
        core::mem::swap(&mut x, &mut xn);
        core::mem::swap(&mut g, &mut gn);
        f = fnew;
        if history.len() == MEMORY {
            history.remove(0);
        }
        history.push(f);
    }
    // Recompute at the final point so the stored gradient carries no drift.
    dense.gradient(&x, &mut g);
    Ok(OracleSolution { residual: projected_residual(&x, &g), x, grad: g, iterations })
}
