//! Rounding heights to a cluster and scoring clusters.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::diffusion::{solve, DiffusionProblem, DualSolution, Heights, SolverOptions};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId, NodeSet};

/// Output of a sweep over the level cuts of a height vector.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    /// Support nodes by decreasing height, ties by increasing id.
    pub order: Vec<NodeId>,
    /// Conductance of each prefix of `order`.
    pub profile: Vec<f64>,
    pub best_cut: NodeSet,
    pub best_conductance: f64,
    /// Cut edges and `min(vol, vol of complement)` of the best prefix.
    pub best_cut_size: usize,
    pub best_denominator: usize,
}

impl SweepResult {
    /// Whether the best cut is the smaller-volume side of its partition.
    pub fn within_half_volume(&self, g: &Graph) -> bool {
        2 * self.best_cut.volume() <= g.total_volume()
    }

    fn beats(&self, other: &SweepResult) -> bool {
        ratio_cmp(self.best_cut_size, self.best_denominator, other.best_cut_size, other.best_denominator)
            == Ordering::Less
    }
}

/// Compares `a/b` with `c/d` exactly.
fn ratio_cmp(a: usize, b: usize, c: usize, d: usize) -> Ordering {
    (a as u128 * d as u128).cmp(&(c as u128 * b as u128))
}

/// Scans the prefixes of the support of `x` in decreasing-height order and
/// returns the one of minimum conductance; ties keep the shorter prefix. Runs
/// in `O(vol(supp(x)) log |supp(x)|)`.
pub fn sweep_cut(g: &Graph, x: &Heights) -> Result<SweepResult> {
    let mut order: Vec<(NodeId, f64)> = x.iter().filter(|&(_, h)| h > 0.0).collect();
    if order.is_empty() {
        return Err(Error::EmptySupport);
    }
    if order.len() == g.node_count() {
        return Err(Error::DegenerateSupport);
    }
    order.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0)));
    let order: Vec<NodeId> = order.into_iter().map(|(v, _)| v).collect();
    let rank: BTreeMap<NodeId, usize> = order.iter().enumerate().map(|(i, &v)| (v, i)).collect();

    let total = g.total_volume();
    let mut profile = Vec::with_capacity(order.len());
    let (mut cut, mut vol) = (0usize, 0usize);
    let mut best = (0usize, usize::MAX, 1usize); // (prefix length, cut, denominator)
    for (i, &v) in order.iter().enumerate() {
        let inside = g.neighbors(v).iter().filter(|u| rank.get(u).is_some_and(|&r| r < i)).count();
        cut = cut + g.degree(v) - 2 * inside;
        vol += g.degree(v);
        let denom = vol.min(total - vol);
        if denom == 0 {
            return Err(Error::UndefinedConductance);
        }
        profile.push(cut as f64 / denom as f64);
        if best.1 == usize::MAX || ratio_cmp(cut, denom, best.1, best.2) == Ordering::Less {
            best = (i + 1, cut, denom);
        }
    }
    let best_cut = NodeSet::new(g, order[..best.0].iter().copied())?;
    Ok(SweepResult {
        best_conductance: best.1 as f64 / best.2 as f64,
        best_cut,
        best_cut_size: best.1,
        best_denominator: best.2,
        order,
        profile,
    })
}

/// Set-overlap scores of a found cluster against a reference set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClusterMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub jaccard: f64,
    pub conductance: f64,
}

pub fn evaluate(g: &Graph, found: &NodeSet, truth: &NodeSet) -> Result<ClusterMetrics> {
    if found.is_empty() {
        return Err(Error::EmptySet { name: "found" });
    }
    if truth.is_empty() {
        return Err(Error::EmptySet { name: "truth" });
    }
    let common = found.intersection_len(truth) as f64;
    let precision = common / found.len() as f64;
    let recall = common / truth.len() as f64;
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    let union = (found.len() + truth.len()) as f64 - common;
    Ok(ClusterMetrics {
        precision,
        recall,
        f1,
        jaccard: common / union,
        conductance: g.conductance(found)?,
    })
}

/// Solver parameters shared by every run of a pipeline.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PipelineConfig {
    pub p: f64,
    pub eps: f64,
    pub mu: Option<f64>,
    pub term_tol: Option<f64>,
    pub options: SolverOptions,
}

impl PipelineConfig {
    pub fn new(p: f64, eps: f64) -> Self {
        Self { p, eps, mu: None, term_tol: None, options: SolverOptions::default() }
    }

    pub fn problem<'g>(&self, g: &'g Graph, seeds: &NodeSet, delta: f64) -> Result<DiffusionProblem<'g>> {
        let mut prob = DiffusionProblem::new(g, seeds.clone(), delta, self.p, self.eps)?;
        if let Some(mu) = self.mu {
            prob = prob.with_mu(mu)?;
        }
        if let Some(tol) = self.term_tol {
            prob = prob.with_term_tol(tol)?;
        }
        Ok(prob.with_options(self.options))
    }
}

#[derive(Clone, Debug)]
pub struct PipelineOutcome {
    pub delta: f64,
    pub solution: DualSolution,
    pub sweep: SweepResult,
}

/// Builds the problem, solves it and sweeps the heights.
pub fn run_pipeline(
    g: &Graph,
    seeds: &NodeSet,
    delta: f64,
    config: &PipelineConfig,
) -> Result<PipelineOutcome> {
    let prob = config.problem(g, seeds, delta)?;
    let solution = solve(&prob)?;
    let sweep = sweep_cut(g, &solution.x)?;
    Ok(PipelineOutcome { delta, solution, sweep })
}

/// Why a grid point produced no candidate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SkipReason {
    InfeasibleMass,
    EmptySupport,
    DegenerateSupport,
}

#[derive(Clone, Debug)]
pub struct DeltaSearchOutcome {
    pub best: PipelineOutcome,
    pub skipped: Vec<(f64, SkipReason)>,
}

/// `{1, 2, 4, 8, 16}·baseline`.
pub fn default_delta_grid(baseline: f64) -> Vec<f64> {
    vec![1.0, 2.0, 4.0, 8.0, 16.0].into_iter().map(|c| c * baseline).collect()
}

/// Runs the pipeline for every `δ` in `grid` and keeps the lowest-conductance
/// cut; ties go to the smaller `δ`. Infeasible or empty grid points are
/// skipped and reported; any other failure aborts the search.
pub fn delta_search(
    g: &Graph,
    seeds: &NodeSet,
    config: &PipelineConfig,
    grid: &[f64],
) -> Result<DeltaSearchOutcome> {
    let mut deltas = grid.to_vec();
    deltas.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let mut best: Option<PipelineOutcome> = None;
    let mut skipped = Vec::new();
    for delta in deltas {
        let outcome = match run_pipeline(g, seeds, delta, config) {
            Ok(o) => o,
            Err(Error::InfeasibleMass { .. }) => {
                skipped.push((delta, SkipReason::InfeasibleMass));
                continue;
            }
            Err(Error::EmptySupport) => {
                skipped.push((delta, SkipReason::EmptySupport));
                continue;
            }
            Err(Error::DegenerateSupport) => {
                skipped.push((delta, SkipReason::DegenerateSupport));
                continue;
            }
            Err(e) => return Err(e),
        };
        if best.as_ref().is_none_or(|b| outcome.sweep.beats(&b.sweep)) {
            best = Some(outcome);
        }
    }
    best.map(|best| DeltaSearchOutcome { best, skipped }).ok_or(Error::NoFeasibleDelta)
}
