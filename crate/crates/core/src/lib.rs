//! Strongly local p-norm flow diffusion.
//!
//! Given an undirected graph and a set of seed nodes, the seeds receive source
//! mass proportional to their degree and every node can absorb mass up to its
//! degree. The diffusion routes the excess with minimum p-norm cost; its dual is
//! a nonnegative height per node. The heights are computed by coordinate descent
//! on the smoothed q-norm dual (`1/p + 1/q = 1`), touching only nodes close to the
//! seeds, and are rounded to a low-conductance cluster with a sweep cut.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command line
//! front end and the experiment harness live in the `flowdiff` crate.

#![no_std]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod clustering;
pub mod diffusion;
mod error;
pub mod graph;
mod math;
#[cfg(any(test, feature = "oracle"))]
pub mod oracle;
pub mod synth;

pub use clustering::{
    default_delta_grid, delta_search, evaluate, run_pipeline, sweep_cut, ClusterMetrics,
    DeltaSearchOutcome, PipelineConfig, PipelineOutcome, SkipReason, SweepResult,
};
pub use diffusion::{
    recover_flow, solve, solve_general, solve_observed, solve_q2, solve_traced, DiffusionProblem,
    DualSolution, EpochRecord, FlowAssignment, Heights, Observer, SolverOptions, SolverView,
    StepRule, UpdateRecord,
};
pub use error::{Error, Result};
pub use graph::{Graph, GraphBuilder, NodeId, NodeSet};
