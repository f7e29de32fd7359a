#![allow(dead_code)]

use flowdiff_core::{DiffusionProblem, DualSolution, Error, Graph, Result, SolverOptions};
use proptest::prelude::*;

/// Connected graph on `min..=max` nodes: a random tree plus random extra edges.
pub fn connected_graph(min: usize, max: usize) -> impl Strategy<Value = Graph> {
    (min..=max).prop_flat_map(|n| {
        let parents = (1..n).map(|v| 0..v).collect::<Vec<_>>();
        let extra = proptest::collection::vec((0..n, 0..n), 0..2 * n);
        (Just(n), parents, extra).prop_map(|(n, parents, extra)| {
            let mut edges: Vec<(usize, usize)> =
                parents.into_iter().enumerate().map(|(i, p)| (i + 1, p)).collect();
            edges.extend(extra.into_iter().filter(|(a, b)| a != b));
            Graph::from_edges(n, edges).unwrap()
        })
    })
}

/// Relative distance with an absolute floor of 1.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Update budget for random instances. It is above the default, but a few
/// p = 8 instances with a narrow bottleneck need far more; those are skipped
/// through [`finished`].
pub const BUDGET: u64 = 1_000_000;

/// The solution if the solve converged, `None` if it ran out of budget.
pub fn finished(r: Result<DualSolution>) -> Option<DualSolution> {
    match r {
        Ok(sol) => Some(sol),
        Err(Error::BudgetExceeded { .. }) => None,
        Err(e) => panic!("{e}"),
    }
}

/// Keeps instances with `|Δ| ≤ vol(G)/4` and sets the test budget. Near
/// `|Δ| = vol(G)` the heights grow without bound as p rises.
pub fn roomy(prob: DiffusionProblem<'_>) -> Option<DiffusionProblem<'_>> {
    let vol = prob.graph().total_volume() as f64;
    let opts = SolverOptions { max_updates: Some(BUDGET), ..*prob.options() };
    (4.0 * prob.total_mass() <= vol).then(|| prob.with_options(opts))
}
