use alloc::collections::BTreeMap;

use super::{edge_flow, DiffusionProblem, DualSolution};
use crate::error::{Error, Result};
use crate::graph::NodeId;

/// Edge flows recovered from converged heights. Stored per oriented edge
/// `(u, v)` with `u < v`; positive values move mass from `u` to `v`. Edges with
/// no entry carry no flow.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FlowAssignment {
    flow: BTreeMap<(NodeId, NodeId), f64>,
}

impl FlowAssignment {
    /// Signed flow from `u` to `v`; `flow(v, u) == -flow(u, v)`.
    pub fn flow(&self, u: NodeId, v: NodeId) -> f64 {
        if u < v {
            self.flow.get(&(u, v)).copied().unwrap_or(0.0)
        } else {
            -self.flow.get(&(v, u)).copied().unwrap_or(0.0)
        }
    }

    /// Nonzero entries in orientation order.
    pub fn iter(&self) -> impl Iterator<Item = ((NodeId, NodeId), f64)> + '_ {
        self.flow.iter().map(|(&e, &f)| (e, f))
    }

    pub fn len(&self) -> usize {
        self.flow.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flow.is_empty()
    }

    /// `m = Bᵀf + Δ` on every node holding source mass or incident to a flow.
    pub fn mass(&self, prob: &DiffusionProblem<'_>) -> BTreeMap<NodeId, f64> {
        let mut m: BTreeMap<NodeId, f64> = prob.sources().collect();
        for (&(u, v), &f) in &self.flow {
            *m.entry(u).or_insert(0.0) -= f;
            *m.entry(v).or_insert(0.0) += f;
        }
        m
    }

    /// `max_v (m(v) - deg(v))`, clamped below at zero.
    pub fn feasibility_residual(&self, prob: &DiffusionProblem<'_>) -> f64 {
        let g = prob.graph();
        self.mass(prob)
            .into_iter()
            .map(|(v, m)| m - g.degree(v) as f64)
            .fold(0.0, f64::max)
    }

    /// `1/p ‖f‖_p^p`, the primal cost paired with the regularized dual.
    pub fn cost(&self, p: f64) -> f64 {
        self.flow.values().map(|f| crate::math::pow(libm::fabs(*f), p)).sum::<f64>() / p
    }
}

/// Edge flows `((x(u)-x(v))² + μ²)^{q/2-1}(x(u)-x(v))` for every edge with an
/// endpoint in `supp(x)`.
pub fn recover_flow(prob: &DiffusionProblem<'_>, sol: &DualSolution) -> Result<FlowAssignment> {
    if !sol.converged {
        return Err(Error::StaleSolution);
    }
    let g = prob.graph();
    let x = &sol.x;
    let mut flow = BTreeMap::new();
    for v in x.support() {
        for &u in g.neighbors(v) {
            let (a, b) = if u < v { (u, v) } else { (v, u) };
            let f = edge_flow(x.get(a) - x.get(b), prob.q(), prob.mu());
            if f != 0.0 {
                flow.insert((a, b), f);
            }
        }
    }
    Ok(FlowAssignment { flow })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::{solve, Heights};
    use crate::graph::{Graph, NodeSet};

    fn converged(x: Heights) -> DualSolution {
        DualSolution {
            x,
            grad: BTreeMap::new(),
            iterations: 1,
            pushes: 0,
            converged: true,
            q: 2.0,
            mu: 0.0,
            term_tol: 1e-6,
        }
    }

    #[test]
    fn single_edge_q2() {
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        let prob = DiffusionProblem::new(&g, NodeSet::new(&g, [0]).unwrap(), 2.0, 2.0, 1e-6).unwrap();
        let sol = solve(&prob).unwrap();
        let f = recover_flow(&prob, &sol).unwrap();
        assert_eq!(f.flow(0, 1), 1.0);
        assert_eq!(f.flow(1, 0), -1.0);
        let m = f.mass(&prob);
        assert_eq!(m[&1], 1.0);
        assert_eq!(m[&0], 1.0);
        assert_eq!(f.feasibility_residual(&prob), 0.0);
    }

    #[test]
    fn zero_heights_zero_flow() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let prob = DiffusionProblem::new(&g, NodeSet::new(&g, [1]).unwrap(), 1.0, 2.0, 1e-6).unwrap();
        let f = recover_flow(&prob, &converged(Heights::new())).unwrap();
        assert!(f.is_empty());
        let m = f.mass(&prob);
        assert_eq!(m.len(), 1);
        assert_eq!(m[&1], 2.0);
    }

    #[test]
    fn q15_unit_difference() {
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        let prob = DiffusionProblem::new(&g, NodeSet::new(&g, [0]).unwrap(), 2.0, 3.0, 1e-6)
            .unwrap()
            .with_mu(0.1)
            .unwrap();
        let f = recover_flow(&prob, &converged([(0, 1.0)].into_iter().collect())).unwrap();
        assert!((f.flow(0, 1) - 0.997_515_508_756_625_4).abs() < 1e-15);
    }

    #[test]
    fn unconverged_is_stale() {
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        let prob = DiffusionProblem::new(&g, NodeSet::new(&g, [0]).unwrap(), 2.0, 2.0, 1e-6).unwrap();
        let mut sol = converged(Heights::new());
        sol.converged = false;
        assert!(matches!(recover_flow(&prob, &sol), Err(Error::StaleSolution)));
    }
}
