//! p-norm flow diffusion: problem setup, the strongly local coordinate solver
//! and primal flow recovery.
//!
//! The solver minimizes the smoothed q-norm dual
//!
//! ```text
//! F_μ(x) = 1/q Σ_{(i,j)∈E} ((x(i)-x(j))² + μ²)^{q/2} - xᵀ(Δ - d),   x ≥ 0
//! ```
//!
//! whose partial derivative at `i` is `deg(i) - m(i)`, the negated excess of
//! mass at `i` when every edge carries `((x(u)-x(v))² + μ²)^{q/2-1}(x(u)-x(v))`
//! units from `u` to `v`. For `q = 2` the smoothing has no effect.

mod flow;
mod problem;
mod solver;

pub use flow::{recover_flow, FlowAssignment};
pub use problem::{DiffusionProblem, SolverOptions, StepRule};
pub use solver::{
    solve, solve_general, solve_observed, solve_q2, solve_traced, DualSolution, EpochRecord,
    Observer, SolverView, UpdateRecord,
};

use alloc::collections::btree_map;
use alloc::collections::BTreeMap;

use crate::graph::{Graph, NodeId};

/// Flow along `(u, v)` for the height difference `diff = x(u) - x(v)`.
#[inline]
pub fn edge_flow(diff: f64, q: f64, mu: f64) -> f64 {
    if q == 2.0 || diff == 0.0 {
        diff
    } else {
        crate::math::pow(diff * diff + mu * mu, 0.5 * q - 1.0) * diff
    }
}

/// `((diff² + μ²)^{q/2} - μ^q) / q`: the smoothed edge term shifted to vanish
/// at `diff = 0`, so objectives only involve edges touching the support.
#[inline]
pub fn edge_energy(diff: f64, q: f64, mu: f64) -> f64 {
    if q == 2.0 {
        0.5 * diff * diff
    } else if mu == 0.0 {
        crate::math::pow(libm::fabs(diff), q) / q
    } else {
        (crate::math::pow(diff * diff + mu * mu, 0.5 * q) - crate::math::pow(mu, q)) / q
    }
}

/// Sparse nonnegative node heights; absent nodes have height zero.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Heights(BTreeMap<NodeId, f64>);

impl Heights {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn get(&self, v: NodeId) -> f64 {
        self.0.get(&v).copied().unwrap_or(0.0)
    }

    /// Stores `h`; zero removes the entry.
    pub fn set(&mut self, v: NodeId, h: f64) {
        if h == 0.0 {
            self.0.remove(&v);
        } else {
            self.0.insert(v, h);
        }
    }

    /// Entries in increasing node order (includes only stored, nonzero heights).
    pub fn iter(&self) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        self.0.iter().map(|(&v, &h)| (v, h))
    }

    /// Nodes with strictly positive height.
    pub fn support(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.0.iter().filter(|(_, &h)| h > 0.0).map(|(&v, _)| v)
    }

    pub fn support_len(&self) -> usize {
        self.support().count()
    }

    pub fn support_volume(&self, g: &Graph) -> usize {
        self.support().map(|v| g.degree(v)).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.support().next().is_none()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(self.0.iter().map(|(&v, &h)| (v, h * c)).collect())
    }

    pub fn into_inner(self) -> BTreeMap<NodeId, f64> {
        self.0
    }
}

impl FromIterator<(NodeId, f64)> for Heights {
    fn from_iter<I: IntoIterator<Item = (NodeId, f64)>>(iter: I) -> Self {
        Self(iter.into_iter().filter(|&(_, h)| h != 0.0).collect())
    }
}

impl<'a> IntoIterator for &'a Heights {
    type Item = (&'a NodeId, &'a f64);
    type IntoIter = btree_map::Iter<'a, NodeId, f64>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flow_q15_unit_difference() {
        // (1 + 0.01)^{-1/4} = 0.997515508756625365... (30-digit reference)
        let f = edge_flow(1.0, 1.5, 0.1);
        assert!((f - 0.997_515_508_756_625_4).abs() < 1e-15, "{f}");
        assert_eq!(edge_flow(-1.0, 1.5, 0.1), -f);
    }

    #[test]
    fn flow_q2_is_difference() {
        assert_eq!(edge_flow(0.75, 2.0, 0.3), 0.75);
        assert_eq!(edge_flow(0.0, 1.25, 0.0), 0.0);
    }

    #[test]
    fn energy_vanishes_at_zero() {
        assert_eq!(edge_energy(0.0, 1.5, 0.1), 0.0);
        assert_eq!(edge_energy(0.0, 2.0, 0.1), 0.0);
        assert!((edge_energy(2.0, 2.0, 0.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn heights_drop_zeros() {
        let mut h: Heights = [(3, 0.0), (1, 2.0)].into_iter().collect();
        assert_eq!(h.support_len(), 1);
        h.set(1, 0.0);
        assert!(h.is_zero());
    }
}
