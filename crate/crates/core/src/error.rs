use alloc::boxed::Box;
use alloc::string::String;
use core::fmt;

use crate::diffusion::DualSolution;
use crate::graph::NodeId;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug)]
pub enum Error {
    /// Graph construction saw an edge `(v, v)`.
    SelfLoop { node: NodeId },
    NodeOutOfRange { node: NodeId, node_count: usize },
    EmptyGraph,
    Disconnected { components: usize },
    /// Conductance is only defined for `S` with `∅ ≠ S ≠ V`.
    UndefinedConductance,
    /// A numeric or structural parameter is outside its domain.
    InvalidParameter { name: &'static str, reason: String },
    /// `δ·vol(S)` exceeds `vol(G)`, so no feasible routing exists.
    InfeasibleMass { total_mass: f64, graph_volume: usize },
    UnsupportedExponent { p: f64 },
    /// The update budget ran out; the partial solution is returned unconverged.
    BudgetExceeded { partial: Box<DualSolution> },
    /// The partial gradient never became nonnegative while bracketing.
    LineSearchBracket { node: NodeId },
    /// `vol(supp(x))` exceeded the total source mass.
    LocalityViolated { support_volume: usize, total_mass: f64 },
    StaleSolution,
    EmptySupport,
    DegenerateSupport,
    EmptySet { name: &'static str },
    GeneratorRetries { attempts: usize },
    NoFeasibleDelta,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::SelfLoop { node } => write!(f, "self-loop at node {node}"),
            Error::NodeOutOfRange { node, node_count } => {
                write!(f, "node {node} out of range for graph with {node_count} nodes")
            }
            Error::EmptyGraph => write!(f, "graph has no nodes"),
            Error::Disconnected { components } => {
                write!(f, "graph is disconnected ({components} components)")
            }
            Error::UndefinedConductance => {
                write!(f, "conductance undefined for the empty set or the whole node set")
            }
            Error::InvalidParameter { name, reason } => write!(f, "invalid {name}: {reason}"),
            Error::InfeasibleMass { total_mass, graph_volume } => write!(
                f,
                "delta: source mass {total_mass} exceeds graph volume {graph_volume}"
            ),
            Error::UnsupportedExponent { p } => {
                write!(f, "p: exponent {p} unsupported (need p >= 2)")
            }
            Error::BudgetExceeded { partial } => write!(
                f,
                "max_updates: budget exhausted after {} coordinate updates",
                partial.pushes
            ),
            Error::LineSearchBracket { node } => {
                write!(f, "line search failed to bracket a root at node {node}")
            }
            Error::LocalityViolated { support_volume, total_mass } => write!(
                f,
                "support volume {support_volume} exceeds source mass {total_mass}"
            ),
            Error::StaleSolution => write!(f, "solution has not converged"),
            Error::EmptySupport => write!(f, "heights have empty support; no cluster"),
            Error::DegenerateSupport => write!(f, "heights are positive on every node"),
            Error::EmptySet { name } => write!(f, "{name}: set is empty"),
            Error::GeneratorRetries { attempts } => {
                write!(f, "generator produced no connected graph in {attempts} attempts")
            }
            Error::NoFeasibleDelta => write!(f, "delta grid: no feasible value"),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
