//! Strongly local coordinate descent on the smoothed dual.
//!
//! Each epoch collects `S_k = {v : ∂_v F_μ < -term_tol}` over the touched
//! nodes, permutes it with the seeded generator and raises each node in turn.
//! Raising `x(v)` only changes the partials at `v` and its neighbours, so a
//! push costs `O(deg(v))` (times the bisection depth for the line search).
//! Heights never decrease and partials on the support stay nonpositive, which
//! keeps `vol(supp(x)) ≤ |Δ|` throughout; the engine checks that every epoch.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::problem::{DiffusionProblem, StepRule};
use super::{edge_flow, Heights};
use crate::error::{invalid, Error, Result};
use crate::graph::{Graph, NodeId};

/// Doublings allowed while bracketing the line-search root.
const MAX_BRACKET_DOUBLINGS: usize = 2100;
const ROOT_REL_WIDTH: f64 = 1e-12;
/// Enough for plain bisection from any bracket of doubles.
const MAX_ROOT_STEPS: usize = 2200;

/// Gap from `x` to the next larger double.
fn ulp(x: f64) -> f64 {
    libm::nextafter(x, f64::INFINITY) - x
}

/// Heights plus the solver state that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct DualSolution {
    pub x: Heights,
    /// `∂_v F_μ(x)` for every touched node. Untouched nodes have `x(v) = 0`,
    /// zero source and partial `deg(v)`.
    pub grad: BTreeMap<NodeId, f64>,
    /// Epochs run, counting the final empty one.
    pub iterations: u64,
    /// Coordinate updates applied.
    pub pushes: u64,
    pub converged: bool,
    pub q: f64,
    pub mu: f64,
    pub term_tol: f64,
}

impl DualSolution {
    pub fn heights(&self) -> &Heights {
        &self.x
    }

    /// Nodes whose height or partial derivative was ever changed from its
    /// initial value (seeds are touched from the start).
    pub fn touched(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.grad.keys().copied()
    }

    pub fn touched_count(&self) -> usize {
        self.grad.len()
    }

    /// Stored partial at `v`, or `deg(v)` for untouched nodes.
    pub fn gradient(&self, g: &Graph, v: NodeId) -> f64 {
        self.grad.get(&v).copied().unwrap_or(g.degree(v) as f64)
    }

    /// Largest violation of `x ≥ 0`, `∇F ≥ 0` and `∇_v F ≤ 0` on the support.
    pub fn kkt_violation(&self) -> f64 {
        let mut worst = 0.0f64;
        for (&v, &gr) in &self.grad {
            let xv = self.x.get(v);
            worst = worst.max(-xv).max(-gr);
            if xv > 0.0 {
                worst = worst.max(gr);
            }
        }
        worst
    }
}

/// Per-epoch trace record.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: u64,
    /// `|S_k|`.
    pub active: usize,
    pub max_excess: f64,
    /// Shifted smoothed objective; NaN unless the observer asked for it.
    pub objective: f64,
}

/// One coordinate update.
#[derive(Clone, Copy, Debug)]
pub struct UpdateRecord {
    pub node: NodeId,
    pub before: f64,
    pub after: f64,
}

/// Read access to the solver state during a callback.
pub struct SolverView<'s> {
    x: &'s BTreeMap<NodeId, f64>,
    grad: &'s BTreeMap<NodeId, f64>,
    graph: &'s Graph,
}

impl SolverView<'_> {
    pub fn height(&self, v: NodeId) -> f64 {
        self.x.get(&v).copied().unwrap_or(0.0)
    }

    pub fn gradient(&self, v: NodeId) -> f64 {
        self.grad.get(&v).copied().unwrap_or(self.graph.degree(v) as f64)
    }

    pub fn graph(&self) -> &Graph {
        self.graph
    }
}

/// Hooks into the solve loop. All methods default to no-ops.
pub trait Observer {
    fn wants_objective(&self) -> bool {
        false
    }

    fn on_epoch(&mut self, _record: &EpochRecord) {}

    fn on_update(&mut self, _update: &UpdateRecord, _state: &SolverView<'_>) {}
}

struct NoObserver;

impl Observer for NoObserver {}

struct EpochFn<F>(F);

impl<F: FnMut(&EpochRecord)> Observer for EpochFn<F> {
    fn wants_objective(&self) -> bool {
        true
    }

    fn on_epoch(&mut self, record: &EpochRecord) {
        (self.0)(record)
    }
}

/// Solves with the path matching the exponent: [`solve_q2`] for `p = 2`,
/// [`solve_general`] otherwise.
pub fn solve(prob: &DiffusionProblem<'_>) -> Result<DualSolution> {
    solve_observed(prob, &mut NoObserver)
}

/// Like [`solve`], reporting one [`EpochRecord`] per epoch.
pub fn solve_traced<F: FnMut(&EpochRecord)>(
    prob: &DiffusionProblem<'_>,
    trace: F,
) -> Result<DualSolution> {
    solve_observed(prob, &mut EpochFn(trace))
}

pub fn solve_observed<O: Observer>(prob: &DiffusionProblem<'_>, obs: &mut O) -> Result<DualSolution> {
    let step = if prob.is_quadratic() { Step::Exact } else { prob.options().step.into() };
    Engine::new(prob, step).run(obs)
}

/// Push loop for `p = q = 2`: each push raises `x(v)` by `ex(v)/deg(v)`,
/// settling `v` exactly and passing `ex(v)/deg(v)` to every neighbour.
pub fn solve_q2(prob: &DiffusionProblem<'_>) -> Result<DualSolution> {
    if !prob.is_quadratic() {
        return Err(invalid("p", "solve_q2 requires p = 2"));
    }
    Engine::new(prob, Step::Exact).run(&mut NoObserver)
}

/// Coordinate solver for `p ≥ 2` using the configured [`StepRule`]. At `p = 2`
/// it runs the same generic flow formula with a line search, which makes it an
/// independent route to the [`solve_q2`] answer.
pub fn solve_general(prob: &DiffusionProblem<'_>) -> Result<DualSolution> {
    Engine::new(prob, prob.options().step.into()).run(&mut NoObserver)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Step {
    /// Closed-form root for `q = 2`.
    Exact,
    LineSearch,
    Fixed,
}

impl From<StepRule> for Step {
    fn from(rule: StepRule) -> Self {
        match rule {
            StepRule::LineSearch => Step::LineSearch,
            StepRule::Fixed => Step::Fixed,
        }
    }
}

struct Engine<'a, 'g> {
    prob: &'a DiffusionProblem<'g>,
    graph: &'g Graph,
    step: Step,
    q: f64,
    mu: f64,
    tol: f64,
    x: BTreeMap<NodeId, f64>,
    grad: BTreeMap<NodeId, f64>,
    support_volume: usize,
    pushes: u64,
    epochs: u64,
    // Scratch: heights of the current node's neighbours.
    nbr: Vec<f64>,
}

impl<'a, 'g> Engine<'a, 'g> {
    fn new(prob: &'a DiffusionProblem<'g>, step: Step) -> Self {
        let graph = prob.graph();
        let grad = prob.sources().map(|(v, m)| (v, graph.degree(v) as f64 - m)).collect();
        Self {
            prob,
            graph,
            step,
            q: prob.q(),
            mu: prob.mu(),
            tol: prob.term_tol(),
            x: BTreeMap::new(),
            grad,
            support_volume: 0,
            pushes: 0,
            epochs: 0,
            nbr: Vec::new(),
        }
    }

    #[inline]
    fn height(&self, v: NodeId) -> f64 {
        self.x.get(&v).copied().unwrap_or(0.0)
    }

    #[inline]
    fn partial(&self, v: NodeId) -> f64 {
        self.grad.get(&v).copied().unwrap_or(self.graph.degree(v) as f64)
    }

    fn run<O: Observer>(mut self, obs: &mut O) -> Result<DualSolution> {
        let budget = self.prob.update_budget();
        let mut rng = ChaCha8Rng::seed_from_u64(self.prob.options().rng_seed);
        let mut active = Vec::new();
        loop {
            self.check_locality()?;
            self.collect_active(&mut active);
            if active.is_empty() {
                // Incremental updates drift; confirm termination on exact partials.
                self.refresh_gradients();
                self.collect_active(&mut active);
            }
            self.epochs += 1;
            let record = EpochRecord {
                epoch: self.epochs - 1,
                active: active.len(),
                max_excess: active.iter().map(|&v| -self.partial(v)).fold(0.0, f64::max),
                objective: if obs.wants_objective() {
                    self.prob.objective(&self.heights())
                } else {
                    f64::NAN
                },
            };
            obs.on_epoch(&record);
            if active.is_empty() {
                return Ok(self.finish(true));
            }
            active.shuffle(&mut rng);
            for &v in &active {
                // Neighbour pushes only lower a partial, so v is still active
                // unless drift says otherwise.
                if self.partial(v) >= -self.tol {
                    continue;
                }
                if self.pushes >= budget {
                    return Err(Error::BudgetExceeded { partial: Box::new(self.finish(false)) });
                }
                let (before, after) = self.update(v)?;
                self.pushes += 1;
                let view = SolverView { x: &self.x, grad: &self.grad, graph: self.graph };
                obs.on_update(&UpdateRecord { node: v, before, after }, &view);
            }
        }
    }

    fn collect_active(&self, out: &mut Vec<NodeId>) {
        out.clear();
        out.extend(self.grad.iter().filter(|(_, &g)| g < -self.tol).map(|(&v, _)| v));
    }

    fn check_locality(&self) -> Result<()> {
        let total = self.prob.total_mass();
        if self.support_volume as f64 > total * (1.0 + 1e-12) {
            return Err(Error::LocalityViolated {
                support_volume: self.support_volume,
                total_mass: total,
            });
        }
        Ok(())
    }

    fn refresh_gradients(&mut self) {
        let fresh: Vec<(NodeId, f64)> = self
            .grad
            .keys()
            .map(|&v| {
                let xv = self.height(v);
                let out: f64 = self
                    .graph
                    .neighbors(v)
                    .iter()
                    .map(|&u| edge_flow(xv - self.height(u), self.q, self.mu))
                    .sum();
                (v, out - self.prob.source(v) + self.graph.degree(v) as f64)
            })
            .collect();
        for (v, g) in fresh {
            self.grad.insert(v, g);
        }
    }

    /// Raises `x(v)` and updates the partials at `v` and its neighbours.
    fn update(&mut self, v: NodeId) -> Result<(f64, f64)> {
        let deg = self.graph.degree(v) as f64;
        let xv = self.height(v);
        let g0 = self.partial(v);
        let excess = -g0;
        let mut nbr = core::mem::take(&mut self.nbr);
        nbr.clear();
        nbr.extend(self.graph.neighbors(v).iter().map(|&u| self.height(u)));
        self.nbr = nbr;

        let t = match self.step {
            Step::Exact => excess / deg,
            Step::Fixed => crate::math::pow(self.mu, 2.0 - self.q) * excess / deg,
            Step::LineSearch => self.line_search(v, xv, excess / deg)?,
        };
        debug_assert!(t >= 0.0);
        let after = xv + t;
        if xv == 0.0 && after > 0.0 {
            self.support_volume += self.graph.degree(v);
        }
        self.x.insert(v, after);
        let mut out = 0.0;
        for (i, &u) in self.graph.neighbors(v).iter().enumerate() {
            let xu = self.nbr[i];
            let before = edge_flow(xv - xu, self.q, self.mu);
            let now = edge_flow(after - xu, self.q, self.mu);
            out += now;
            // Flow is odd in the difference, so u sees the negated change.
            let gu = self.partial(u) + before - now;
            self.grad.insert(u, gu);
        }
        let gv = out - self.prob.source(v) + deg;
        self.grad.insert(v, gv);
        Ok((xv, after))
    }

    /// `∂_v F_μ(x + t e_v)` and its derivative in `t`.
    fn partial_and_slope(&self, v: NodeId, xv: f64, t: f64) -> (f64, f64) {
        let h = xv + t;
        let (mut out, mut slope) = (0.0, 0.0);
        for &xu in &self.nbr {
            let d = h - xu;
            let r = d * d + self.mu * self.mu;
            if r == 0.0 {
                // Infinite curvature at a zero difference without smoothing.
                slope = f64::INFINITY;
                continue;
            }
            let w = crate::math::pow(r, 0.5 * self.q - 1.0);
            out += w * d;
            slope += w * ((self.q - 1.0) * d * d + self.mu * self.mu) / r;
        }
        (out - self.prob.source(v) + self.graph.degree(v) as f64, slope)
    }

    /// Root of the increasing partial `t ↦ ∂_v F_μ(x + t e_v)`, returned from
    /// below: the result `t` has a nonpositive partial and lies within a
    /// relative width of `1e-12`, or a few ulps of `x(v) + t`, of a point where
    /// the partial is nonnegative.
    /// The bracket is found by doubling; inside it Newton steps are taken when
    /// they stay in the bracket and bisection otherwise.
    fn line_search(&self, v: NodeId, xv: f64, guess: f64) -> Result<f64> {
        let mut lo = 0.0;
        let mut hi = if guess > 0.0 { guess } else { f64::MIN_POSITIVE };
        let mut doublings = 0;
        let (mut g_hi, mut s_hi);
        loop {
            (g_hi, s_hi) = self.partial_and_slope(v, xv, hi);
            if g_hi.is_nan() || !hi.is_finite() || doublings > MAX_BRACKET_DOUBLINGS {
                return Err(Error::LineSearchBracket { node: v });
            }
            if g_hi >= 0.0 {
                break;
            }
            lo = hi;
            hi *= 2.0;
            doublings += 1;
        }
        if g_hi == 0.0 {
            return Ok(hi);
        }
        // Newton from the upper end; the partial is steep there in the usual
        // case, so iterates land inside the bracket.
        let mut t = hi;
        let (mut g, mut s) = (g_hi, s_hi);
        for _ in 0..MAX_ROOT_STEPS {
            // Steps below the spacing of doubles at x(v) + t are invisible.
            if hi - lo <= (ROOT_REL_WIDTH * hi).max(4.0 * ulp(xv + hi)) {
                break;
            }
            let newton = t - g / s;
            let next = if newton > lo && newton < hi && newton.is_finite() {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if next <= lo || next >= hi {
                break;
            }
            // Close the bracket around a Newton estimate with two probes.
            let probe = (0.5 * ROOT_REL_WIDTH * next).max(2.0 * ulp(xv + next));
            if libm::fabs(next - t) <= probe {
                let (a, b) = (next - probe, next + probe);
                if a > lo {
                    if self.partial_and_slope(v, xv, a).0 < 0.0 { lo = a } else { hi = a }
                }
                if b < hi {
                    if self.partial_and_slope(v, xv, b).0 >= 0.0 { hi = b } else { lo = b }
                }
                t = 0.5 * (lo + hi);
                (g, s) = self.partial_and_slope(v, xv, t);
                if g < 0.0 { lo = t } else { hi = t }
                continue;
            }
            t = next;
            (g, s) = self.partial_and_slope(v, xv, t);
            if g < 0.0 {
                lo = t;
            } else {
                hi = t;
            }
        }
        Ok(lo)
    }

    fn heights(&self) -> Heights {
        self.x.iter().map(|(&v, &h)| (v, h)).collect()
    }

    fn finish(self, converged: bool) -> DualSolution {
        DualSolution {
            x: self.heights(),
            grad: self.grad,
            iterations: self.epochs,
            pushes: self.pushes,
            converged,
            q: self.q,
            mu: self.mu,
            term_tol: self.tol,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::SolverOptions;
    use crate::graph::NodeSet;
    use crate::synth::gen_dumbbell;

    fn single_edge() -> Graph {
        Graph::from_edges(2, [(0, 1)]).unwrap()
    }

    fn triangle() -> Graph {
        Graph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    fn problem<'g>(g: &'g Graph, seeds: &[NodeId], delta: f64, p: f64) -> DiffusionProblem<'g> {
        DiffusionProblem::new(g, NodeSet::new(g, seeds.iter().copied()).unwrap(), delta, p, 1e-6).unwrap()
    }

    #[test]
    fn q2_single_edge() {
        let g = single_edge();
        let sol = solve_q2(&problem(&g, &[0], 2.0, 2.0)).unwrap();
        assert!(sol.converged);
        assert_eq!(sol.x.get(0), 1.0);
        assert_eq!(sol.x.get(1), 0.0);
        assert_eq!(sol.pushes, 1);
        assert_eq!(sol.gradient(&g, 1), 0.0);
    }

    #[test]
    fn q2_triangle() {
        let g = triangle();
        let prob = problem(&g, &[0], 2.0, 2.0);
        let sol = solve_q2(&prob).unwrap();
        assert_eq!(prob.source(0), 4.0);
        assert!((sol.x.get(0) - 1.0).abs() < 1e-12);
        assert_eq!(sol.x.support_len(), 1);
        for v in [1, 2] {
            assert!((prob.mass(&sol.x, v) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn no_initial_excess_returns_zero() {
        let d = gen_dumbbell(3, 3).unwrap();
        for p in [2.0, 4.0] {
            let sol = solve(&problem(&d.graph, &[0, 4], 1.0, p)).unwrap();
            assert!(sol.converged);
            assert!(sol.x.is_zero());
            assert_eq!(sol.pushes, 0);
            assert_eq!(sol.iterations, 1);
        }
    }

    #[test]
    fn general_single_edge_p4() {
        let g = single_edge();
        let prob = problem(&g, &[0], 2.0, 4.0).with_mu(1e-3).unwrap();
        let sol = solve_general(&prob).unwrap();
        // Root of (t² + μ²)^{-1/3} t = 1 is 1.000000999998000007 (30-digit reference).
        assert!((sol.x.get(0) - 1.000_000_999_998).abs() < 1e-9, "{}", sol.x.get(0));
        assert_eq!(sol.x.get(1), 0.0);
        assert!(sol.kkt_violation() <= prob.term_tol());
    }

    #[test]
    fn q2_rejects_general_exponent() {
        let g = single_edge();
        assert!(solve_q2(&problem(&g, &[0], 2.0, 4.0)).is_err());
    }

    #[test]
    fn budget_exceeded_carries_partial() {
        let d = gen_dumbbell(4, 4).unwrap();
        let prob = problem(&d.graph, &[d.left_center()], 10.0, 2.0).with_options(SolverOptions {
            max_updates: Some(3),
            ..SolverOptions::default()
        });
        match solve(&prob) {
            Err(Error::BudgetExceeded { partial }) => {
                assert!(!partial.converged);
                assert_eq!(partial.pushes, 3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn fixed_step_matches_line_search() {
        let g = triangle();
        let base = problem(&g, &[0], 2.0, 4.0).with_mu(0.5).unwrap().with_term_tol(1e-9).unwrap();
        let ls = solve_general(&base).unwrap();
        let fixed = solve_general(&base.clone().with_options(SolverOptions {
            step: StepRule::Fixed,
            ..SolverOptions::default()
        }))
        .unwrap();
        assert!(ls.pushes < fixed.pushes);
        let (a, b) = (base.objective(&ls.x), base.objective(&fixed.x));
        assert!((a - b).abs() <= 1e-8 * a.abs(), "{a} vs {b}");
    }

    #[test]
    fn trace_reports_each_epoch() {
        let d = gen_dumbbell(3, 3).unwrap();
        let prob = problem(&d.graph, &[d.left_center()], 6.0, 4.0);
        let mut records = Vec::new();
        let sol = solve_traced(&prob, |r| records.push(*r)).unwrap();
        assert_eq!(records.len() as u64, sol.iterations);
        assert_eq!(records.last().unwrap().active, 0);
        assert!(records.windows(2).all(|w| w[1].objective <= w[0].objective + 1e-9));
        assert!(records.iter().enumerate().all(|(i, r)| r.epoch == i as u64));
    }

    #[test]
    fn same_seed_same_answer() {
        let d = gen_dumbbell(4, 4).unwrap();
        let prob = problem(&d.graph, &[d.left_center()], 8.0, 4.0);
        assert_eq!(solve(&prob).unwrap(), solve(&prob).unwrap());
    }
}
