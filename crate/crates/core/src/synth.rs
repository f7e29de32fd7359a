//! Seeded generators for small test graphs.
//!
//! Random generators draw from `ChaCha8Rng::seed_from_u64(seed)` (the
//! `rand_chacha` 0.3 stream); pairs `(i, j)` with `i < j` are visited in
//! lexicographic order and each consumes exactly one `f64` sample. Any
//! reimplementation using the same stream reproduces the graphs bit for bit.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::graph::{Graph, GraphBuilder, NodeId, NodeSet};

/// Attempts made by [`gen_planted_partition`] before giving up on connectivity.
pub const MAX_ATTEMPTS: usize = 32;

#[derive(Clone, Debug, PartialEq)]
pub enum GeneratorSpec {
    Grid { rows: usize, cols: usize },
    Dumbbell { rows: usize, cols: usize },
    PlantedPartition { block_sizes: Vec<usize>, p_in: f64, p_out: f64, seed: u64 },
}

/// A generated graph with its planted groups (empty for plain grids).
#[derive(Clone, Debug)]
pub struct Generated {
    pub graph: Graph,
    pub blocks: Vec<NodeSet>,
}

impl GeneratorSpec {
    pub fn generate(&self) -> Result<Generated> {
        match *self {
            GeneratorSpec::Grid { rows, cols } => {
                Ok(Generated { graph: gen_grid(rows, cols)?, blocks: Vec::new() })
            }
            GeneratorSpec::Dumbbell { rows, cols } => {
                let d = gen_dumbbell(rows, cols)?;
                Ok(Generated { blocks: alloc::vec![d.left, d.right], graph: d.graph })
            }
            GeneratorSpec::PlantedPartition { ref block_sizes, p_in, p_out, seed } => {
                let pp = gen_planted_partition(block_sizes, p_in, p_out, seed)?;
                Ok(Generated { graph: pp.graph, blocks: pp.blocks })
            }
        }
    }
}

fn grid_edges(rows: usize, cols: usize, offset: usize) -> impl Iterator<Item = (NodeId, NodeId)> {
    let id = move |r: usize, c: usize| offset + r * cols + c;
    let horizontal = (0..rows).flat_map(move |r| (1..cols).map(move |c| (id(r, c - 1), id(r, c))));
    let vertical = (1..rows).flat_map(move |r| (0..cols).map(move |c| (id(r - 1, c), id(r, c))));
    horizontal.chain(vertical)
}

fn check_dims(rows: usize, cols: usize) -> Result<()> {
    if rows == 0 {
        return Err(invalid("rows", "must be at least 1"));
    }
    if cols == 0 {
        return Err(invalid("cols", "must be at least 1"));
    }
    Ok(())
}

/// 4-neighbour lattice; node `(r, c)` has id `r * cols + c`.
pub fn gen_grid(rows: usize, cols: usize) -> Result<Graph> {
    check_dims(rows, cols)?;
    Graph::from_edges(rows * cols, grid_edges(rows, cols, 0))
}

/// Two `rows × cols` grids joined by a single bridge edge.
#[derive(Clone, Debug)]
pub struct Dumbbell {
    pub graph: Graph,
    pub rows: usize,
    pub cols: usize,
    /// Ids `0 .. rows*cols`.
    pub left: NodeSet,
    /// Ids `rows*cols .. 2*rows*cols`.
    pub right: NodeSet,
    /// `(left end, right end)`.
    pub bridge: (NodeId, NodeId),
}

impl Dumbbell {
    /// Central node of the left grid.
    pub fn left_center(&self) -> NodeId {
        (self.rows / 2) * self.cols + self.cols / 2
    }

    /// Left-grid corner farthest from the bridge.
    pub fn left_far_corner(&self) -> NodeId {
        0
    }

    /// Right-grid corner farthest from the bridge.
    pub fn right_far_corner(&self) -> NodeId {
        2 * self.rows * self.cols - 1
    }
}

/// The bridge joins the middle of the left grid's last column to the middle of
/// the right grid's first column.
pub fn gen_dumbbell(rows: usize, cols: usize) -> Result<Dumbbell> {
    check_dims(rows, cols)?;
    let side = rows * cols;
    let mid = rows / 2;
    let bridge = (mid * cols + cols - 1, side + mid * cols);
    let mut b = GraphBuilder::with_capacity(2 * side, 2 * side * 2 + 1);
    b.extend(grid_edges(rows, cols, 0));
    b.extend(grid_edges(rows, cols, side));
    b.add_edge(bridge.0, bridge.1);
    let graph = b.build()?;
    let left = NodeSet::new(&graph, 0..side)?;
    let right = NodeSet::new(&graph, side..2 * side)?;
    Ok(Dumbbell { graph, rows, cols, left, right, bridge })
}

#[derive(Clone, Debug)]
pub struct PlantedPartition {
    pub graph: Graph,
    /// Consecutive id ranges, one per block.
    pub blocks: Vec<NodeSet>,
    /// Number of generation attempts used (1 if the first draw was connected).
    pub attempts: usize,
}

/// Planted partition: each intra-block pair is an edge with probability `p_in`,
/// each inter-block pair with `p_out`. Redraws (continuing the same stream)
/// until the graph is connected, at most [`MAX_ATTEMPTS`] times.
pub fn gen_planted_partition(
    block_sizes: &[usize],
    p_in: f64,
    p_out: f64,
    seed: u64,
) -> Result<PlantedPartition> {
    if block_sizes.is_empty() {
        return Err(invalid("block_sizes", "need at least one block"));
    }
    if block_sizes.contains(&0) {
        return Err(invalid("block_sizes", "every block needs at least one node"));
    }
    if !(0.0..=1.0).contains(&p_in) {
        return Err(invalid("p_in", "must lie in [0, 1]"));
    }
    if !(0.0..=1.0).contains(&p_out) {
        return Err(invalid("p_out", "must lie in [0, 1]"));
    }
    if p_in <= p_out {
        return Err(invalid("p_in", "must exceed p_out"));
    }
    let n: usize = block_sizes.iter().sum();
    let mut label = Vec::with_capacity(n);
    for (b, &size) in block_sizes.iter().enumerate() {
        label.extend(core::iter::repeat_n(b, size));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 1..=MAX_ATTEMPTS {
        let mut b = GraphBuilder::new(n);
        for i in 0..n {
            for j in i + 1..n {
                let p = if label[i] == label[j] { p_in } else { p_out };
                if rng.gen::<f64>() < p {
                    b.add_edge(i, j);
                }
            }
        }
        let graph = b.build_allow_disconnected()?;
        if graph.component_count() == 1 {
            let mut blocks = Vec::with_capacity(block_sizes.len());
            let mut start = 0;
            for &size in block_sizes {
                blocks.push(NodeSet::new(&graph, start..start + size)?);
                start += size;
            }
            return Ok(PlantedPartition { graph, blocks, attempts: attempt });
        }
    }
    Err(Error::GeneratorRetries { attempts: MAX_ATTEMPTS })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_counts() {
        let g = gen_grid(7, 7).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (49, 84));
        let g = gen_grid(1, 2).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (2, 1));
        let g = gen_grid(2, 2).unwrap();
        assert_eq!(g.edge_count(), 4);
        assert!((0..4).all(|v| g.degree(v) == 2));
        assert!(gen_grid(0, 3).is_err());
        assert!(gen_grid(3, 0).is_err());
    }

    #[test]
    fn dumbbell_three_by_three() {
        let d = gen_dumbbell(3, 3).unwrap();
        assert_eq!((d.graph.node_count(), d.graph.edge_count()), (18, 25));
        assert_eq!(d.graph.cut_size(&d.left), 1);
        assert_eq!(d.left.volume(), 25);
        assert!((d.graph.conductance(&d.left).unwrap() - 1.0 / 25.0).abs() < 1e-15);
        assert_eq!(d.left_center(), 4);
    }

    #[test]
    fn dumbbell_one_by_one() {
        let d = gen_dumbbell(1, 1).unwrap();
        assert_eq!((d.graph.node_count(), d.graph.edge_count()), (2, 1));
        assert_eq!(d.bridge, (0, 1));
    }

    #[test]
    fn planted_partition_edge_counts_near_mean() {
        let pp = gen_planted_partition(&[30, 30], 0.5, 0.02, 1).unwrap();
        let g = &pp.graph;
        let (mut intra, mut inter) = ([0usize; 2], 0usize);
        for (u, v) in g.edges() {
            let (bu, bv) = (u / 30, v / 30);
            if bu == bv {
                intra[bu] += 1;
            } else {
                inter += 1;
            }
        }
        // Binomial(435, 0.5): mean 217.5, sd ≈ 10.43. Binomial(900, 0.02): mean 18, sd ≈ 4.2.
        let sd_in = libm::sqrt(435.0 * 0.25);
        let sd_out = libm::sqrt(900.0 * 0.02 * 0.98);
        for c in intra {
            assert!((c as f64 - 217.5).abs() <= 4.0 * sd_in, "intra {c}");
        }
        assert!((inter as f64 - 18.0).abs() <= 4.0 * sd_out, "inter {inter}");
    }

    #[test]
    fn planted_partition_is_deterministic() {
        let a = gen_planted_partition(&[10, 12, 8], 0.6, 0.05, 99).unwrap();
        let b = gen_planted_partition(&[10, 12, 8], 0.6, 0.05, 99).unwrap();
        assert_eq!(a.graph, b.graph);
        assert_eq!(a.blocks, b.blocks);
    }

    #[test]
    fn zero_inter_probability_never_connects() {
        let err = gen_planted_partition(&[5, 5], 0.9, 0.0, 3).unwrap_err();
        assert!(matches!(err, Error::GeneratorRetries { attempts: MAX_ATTEMPTS }));
    }

    #[test]
    fn planted_partition_validates() {
        assert!(gen_planted_partition(&[5, 5], 0.1, 0.2, 0).is_err());
        assert!(gen_planted_partition(&[5, 0], 0.5, 0.2, 0).is_err());
        assert!(gen_planted_partition(&[], 0.5, 0.2, 0).is_err());
        assert!(gen_planted_partition(&[5], 1.5, 0.2, 0).is_err());
    }
}
