use alloc::collections::BTreeMap;

use super::{edge_energy, edge_flow, Heights};
use crate::error::{invalid, Error, Result};
use crate::graph::{Graph, NodeId, NodeSet};

/// Relative slack used when comparing the source mass against `vol(G)`.
const MASS_SLACK: f64 = 1e-12;

/// How a coordinate step is sized when `q < 2`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum StepRule {
    /// Bisection to the root of the partial derivative along the coordinate.
    #[default]
    LineSearch,
    /// The fixed step `μ^{2-q} / deg(v)` times the excess (inverse coordinate
    /// Lipschitz constant).
    Fixed,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub step: StepRule,
    /// Seed for the per-epoch permutation.
    pub rng_seed: u64,
    /// Coordinate update budget; `None` means `ceil(10⁴·|Δ|)`.
    pub max_updates: Option<u64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { step: StepRule::LineSearch, rng_seed: 0, max_updates: None }
    }
}

/// A diffusion instance: source mass `Δ(v) = δ·deg(v)` on the seeds, sink
/// capacity `deg(v)` everywhere, primal norm `p ≥ 2` and its dual `q`.
#[derive(Clone, Debug)]
pub struct DiffusionProblem<'g> {
    graph: &'g Graph,
    seeds: NodeSet,
    delta: f64,
    source: BTreeMap<NodeId, f64>,
    total_mass: f64,
    p: f64,
    q: f64,
    mu: f64,
    eps: f64,
    term_tol: f64,
    options: SolverOptions,
}

impl<'g> DiffusionProblem<'g> {
    /// Builds the instance. `μ` defaults to `(eps/|Δ|)^{1/q}` and the gradient
    /// tolerance to `10⁻⁶·max(1, δ)`.
    pub fn new(graph: &'g Graph, seeds: NodeSet, delta: f64, p: f64, eps: f64) -> Result<Self> {
        if seeds.is_empty() {
            return Err(Error::EmptySet { name: "seeds" });
        }
        if let Some(bad) = seeds.iter().find(|&v| v >= graph.node_count()) {
            return Err(Error::NodeOutOfRange { node: bad, node_count: graph.node_count() });
        }
        if !(delta.is_finite() && delta > 0.0) {
            return Err(invalid("delta", "must be positive and finite"));
        }
        if p.is_nan() || p < 2.0 {
            return Err(Error::UnsupportedExponent { p });
        }
        if !p.is_finite() {
            return Err(invalid("p", "must be finite"));
        }
        if !(eps.is_finite() && eps > 0.0) {
            return Err(invalid("eps", "must be positive and finite"));
        }
        let source: BTreeMap<NodeId, f64> =
            seeds.iter().map(|v| (v, delta * graph.degree(v) as f64)).collect();
        let total_mass = delta * seeds.volume() as f64;
        let graph_volume = graph.total_volume();
        if total_mass > graph_volume as f64 * (1.0 + MASS_SLACK) {
            return Err(Error::InfeasibleMass { total_mass, graph_volume });
        }
        let q = p / (p - 1.0);
        let mu = if p == 2.0 { 0.0 } else { crate::math::pow(eps / total_mass, 1.0 / q) };
        Ok(Self {
            graph,
            seeds,
            delta,
            source,
            total_mass,
            p,
            q,
            mu,
            eps,
            term_tol: 1e-6 * delta.max(1.0),
            options: SolverOptions::default(),
        })
    }

    /// Same as [`new`](Self::new) with `δ` chosen so that `|Δ| = total_mass`.
    pub fn with_total_mass(
        graph: &'g Graph,
        seeds: NodeSet,
        total_mass: f64,
        p: f64,
        eps: f64,
    ) -> Result<Self> {
        if seeds.volume() == 0 {
            return Err(Error::EmptySet { name: "seeds" });
        }
        let delta = total_mass / seeds.volume() as f64;
        Self::new(graph, seeds, delta, p, eps)
    }

    /// Overrides the smoothing parameter. Ignored for `p = 2`.
    pub fn with_mu(mut self, mu: f64) -> Result<Self> {
        if self.p == 2.0 {
            return Ok(self);
        }
        if !(mu.is_finite() && mu > 0.0) {
            return Err(invalid("mu", "must be positive and finite for p > 2"));
        }
        self.mu = mu;
        Ok(self)
    }

    pub fn with_term_tol(mut self, term_tol: f64) -> Result<Self> {
        if !(term_tol.is_finite() && term_tol > 0.0) {
            return Err(invalid("term_tol", "must be positive and finite"));
        }
        self.term_tol = term_tol;
        Ok(self)
    }

    pub fn with_options(mut self, options: SolverOptions) -> Self {
        self.options = options;
        self
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    pub fn seeds(&self) -> &NodeSet {
        &self.seeds
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Zero for `p = 2`.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn term_tol(&self) -> f64 {
        self.term_tol
    }

    pub fn options(&self) -> &SolverOptions {
        &self.options
    }

    pub fn is_quadratic(&self) -> bool {
        self.q == 2.0
    }

    /// `Δ(v)`.
    #[inline]
    pub fn source(&self, v: NodeId) -> f64 {
        self.source.get(&v).copied().unwrap_or(0.0)
    }

    pub fn sources(&self) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        self.source.iter().map(|(&v, &m)| (v, m))
    }

    /// `|Δ| = δ·vol(seeds)`.
    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub(crate) fn update_budget(&self) -> u64 {
        self.options
            .max_updates
            .unwrap_or_else(|| libm::ceil(1e4 * self.total_mass.max(1.0)) as u64)
    }

    /// `∂F_μ/∂x(v) = Σ_{u∼v} flow(v,u) - Δ(v) + deg(v)`.
    pub fn gradient(&self, x: &Heights, v: NodeId) -> f64 {
        let xv = x.get(v);
        let out: f64 = self
            .graph
            .neighbors(v)
            .iter()
            .map(|&u| edge_flow(xv - x.get(u), self.q, self.mu))
            .sum();
        out - self.source(v) + self.graph.degree(v) as f64
    }

    /// `m(v) = Δ(v) + Σ_{u∼v} flow(u,v)`, the mass settled at `v` under `x`.
    pub fn mass(&self, x: &Heights, v: NodeId) -> f64 {
        self.graph.degree(v) as f64 - self.gradient(x, v)
    }

    /// `F_μ(x)` minus the constant `|E|·μ^q/q`, so only edges touching
    /// `supp(x)` contribute. Same minimizers as `F_μ`.
    pub fn objective(&self, x: &Heights) -> f64 {
        self.objective_with(x, self.mu)
    }

    /// `F(x) = 1/q ‖Bx‖_q^q - xᵀ(Δ - d)` without smoothing.
    pub fn objective_unsmoothed(&self, x: &Heights) -> f64 {
        self.objective_with(x, 0.0)
    }

    fn objective_with(&self, x: &Heights, mu: f64) -> f64 {
        let g = self.graph;
        let mut edges = 0.0;
        let mut linear = 0.0;
        for (v, xv) in x.iter() {
            linear += xv * (self.source(v) - g.degree(v) as f64);
            for &u in g.neighbors(v) {
                let xu = x.get(u);
                // Count an edge once: from its smaller endpoint when both are stored.
                if xu == 0.0 || u > v {
                    edges += edge_energy(xv - xu, self.q, mu);
                }
            }
        }
        edges - linear
    }
}
