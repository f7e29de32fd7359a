//! Text formats.
//!
//! * Edge list: one `u v` pair per line, `#` starts a comment, blank lines are
//!   ignored. Ids are arbitrary nonnegative integers; they are mapped to dense
//!   ids in increasing order and mapped back on output.
//! * Node list: one id per line (seeds, clusters, ground truth).
//! * Heights: `id<TAB>height` per line, positive heights only.
//! * Blocks: one block per line, ids separated by whitespace.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use flowdiff_core::{Graph, GraphBuilder, Heights, NodeId, NodeSet};

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default)]
pub struct LoadOptions {
    /// Reject id 0.
    pub one_based: bool,
    /// On a disconnected graph, keep the component holding these ids instead
    /// of failing.
    pub component_of: Option<Vec<u64>>,
}

/// A graph together with the external id of every dense node.
#[derive(Clone, Debug)]
pub struct LoadedGraph {
    pub graph: Graph,
    labels: Vec<u64>,
    index: HashMap<u64, NodeId>,
}

impl LoadedGraph {
    /// Uses the dense ids as external ids.
    pub fn identity(graph: Graph) -> Self {
        Self::with_labels(graph, Vec::new())
    }

    /// An empty `labels` means identity.
    fn with_labels(graph: Graph, labels: Vec<u64>) -> Self {
        let labels = if labels.is_empty() {
            (0..graph.node_count() as u64).collect()
        } else {
            labels
        };
        let index = labels.iter().enumerate().map(|(v, &l)| (l, v)).collect();
        Self { graph, labels, index }
    }

    pub fn label(&self, v: NodeId) -> u64 {
        self.labels[v]
    }

    pub fn node(&self, label: u64) -> Option<NodeId> {
        self.index.get(&label).copied()
    }

    /// True when every external id equals its dense id.
    pub fn is_identity(&self) -> bool {
        self.labels.iter().enumerate().all(|(v, &l)| l == v as u64)
    }

    /// Maps external ids to a node set of this graph.
    pub fn node_set(&self, labels: &[u64], what: &'static str) -> Result<NodeSet> {
        let ids = labels
            .iter()
            .map(|&l| self.node(l).ok_or_else(|| Error::config(what, format!("unknown node id {l}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(NodeSet::new(&self.graph, ids)?)
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_id(tok: &str, name: &str, line: usize, one_based: bool) -> Result<u64> {
    let id: u64 = tok.parse().map_err(|_| Error::Parse {
        path: name.to_string(),
        line,
        reason: format!("expected a nonnegative integer node id, found {tok:?}"),
    })?;
    if one_based && id == 0 {
        return Err(Error::Parse {
            path: name.to_string(),
            line,
            reason: "node id 0 in a 1-based file".to_string(),
        });
    }
    Ok(id)
}

/// Non-comment, non-blank lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}

/// Parses an edge list. `name` labels error messages.
pub fn parse_edge_list(text: &str, name: &str, opts: &LoadOptions) -> Result<LoadedGraph> {
    let mut raw = Vec::new();
    for (line, content) in content_lines(text) {
        let toks: Vec<&str> = content.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(Error::Parse {
                path: name.to_string(),
                line,
                reason: format!("expected two node ids, found {} fields", toks.len()),
            });
        }
        let u = parse_id(toks[0], name, line, opts.one_based)?;
        let v = parse_id(toks[1], name, line, opts.one_based)?;
        if u == v {
            return Err(Error::Parse { path: name.to_string(), line, reason: format!("self-loop at node {u}") });
        }
        raw.push((u, v));
    }
    if raw.is_empty() {
        return Err(flowdiff_core::Error::EmptyGraph.into());
    }

    let mut labels: Vec<u64> = raw.iter().flat_map(|&(u, v)| [u, v]).collect();
    labels.sort_unstable();
    labels.dedup();
    let dense: HashMap<u64, NodeId> = labels.iter().enumerate().map(|(i, &l)| (l, i)).collect();
    let mut b = GraphBuilder::with_capacity(labels.len(), raw.len());
    b.extend(raw.iter().map(|(u, v)| (dense[u], dense[v])));
    let graph = b.build_allow_disconnected()?;

    let components = graph.component_count();
    if components == 1 {
        return Ok(LoadedGraph::with_labels(graph, labels));
    }
    let Some(keep) = &opts.component_of else {
        return Err(flowdiff_core::Error::Disconnected { components }.into());
    };
    let seeds = keep
        .iter()
        .map(|l| dense.get(l).copied().ok_or_else(|| Error::config("seeds", format!("unknown node id {l}"))))
        .collect::<Result<Vec<_>>>()?;
    let Some(&first) = seeds.first() else {
        return Err(Error::config("seeds", "component selection needs at least one seed"));
    };
    let nodes = graph.component_of(first);
    if let Some(&stray) = seeds.iter().find(|s| nodes.binary_search(s).is_err()) {
        return Err(Error::config(
            "seeds",
            format!("seeds {} and {} lie in different components", labels[first], labels[stray]),
        ));
    }
    let sub = graph.induced_subgraph(&nodes)?;
    let sub_labels = nodes.iter().map(|&v| labels[v]).collect();
    Ok(LoadedGraph::with_labels(sub, sub_labels))
}

pub fn read_edge_list(path: &Path, opts: &LoadOptions) -> Result<LoadedGraph> {
    parse_edge_list(&read_text(path)?, &path.display().to_string(), opts)
}

/// Edges as `u v` with `u < v` in dense order, using external ids.
pub fn format_edge_list(g: &LoadedGraph) -> String {
    let mut out = String::new();
    for (u, v) in g.graph.edges() {
        let _ = writeln!(out, "{} {}", g.label(u), g.label(v));
    }
    out
}

/// Parses one id per line, keeping the file order.
pub fn parse_id_list(text: &str, name: &str) -> Result<Vec<u64>> {
    let mut ids = Vec::new();
    for (line, content) in content_lines(text) {
        let mut toks = content.split_whitespace();
        let tok = toks.next().unwrap_or_default();
        if toks.next().is_some() {
            return Err(Error::Parse { path: name.to_string(), line, reason: "expected one node id per line".into() });
        }
        ids.push(parse_id(tok, name, line, false)?);
    }
    Ok(ids)
}

pub fn parse_node_set(text: &str, name: &str, g: &LoadedGraph) -> Result<NodeSet> {
    let mut ids = Vec::new();
    for (line, content) in content_lines(text) {
        let tok = content.split_whitespace().next().unwrap_or_default();
        let label = parse_id(tok, name, line, false)?;
        let v = g.node(label).ok_or_else(|| Error::Parse {
            path: name.to_string(),
            line,
            reason: format!("node {label} is not in the graph"),
        })?;
        ids.push(v);
    }
    Ok(NodeSet::new(&g.graph, ids)?)
}

pub fn format_node_set(set: &NodeSet, g: &LoadedGraph) -> String {
    let mut labels: Vec<u64> = set.iter().map(|v| g.label(v)).collect();
    labels.sort_unstable();
    labels.iter().fold(String::new(), |mut out, l| {
        let _ = writeln!(out, "{l}");
        out
    })
}

/// Heights sorted by external id. `{}` prints the shortest string that parses
/// back to the same double.
pub fn format_heights(x: &Heights, g: &LoadedGraph) -> String {
    let mut rows: Vec<(u64, f64)> = x.iter().map(|(v, h)| (g.label(v), h)).collect();
    rows.sort_unstable_by_key(|r| r.0);
    rows.iter().fold(String::new(), |mut out, (l, h)| {
        let _ = writeln!(out, "{l}\t{h}");
        out
    })
}

pub fn parse_heights(text: &str, name: &str, g: &LoadedGraph) -> Result<Heights> {
    let mut x = Heights::new();
    for (line, content) in content_lines(text) {
        let bad = |reason: String| Error::Parse { path: name.to_string(), line, reason };
        let toks: Vec<&str> = content.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(bad(format!("expected `id height`, found {} fields", toks.len())));
        }
        let label = parse_id(toks[0], name, line, false)?;
        let v = g.node(label).ok_or_else(|| bad(format!("node {label} is not in the graph")))?;
        let h: f64 = toks[1].parse().map_err(|_| bad(format!("bad height {:?}", toks[1])))?;
        if !h.is_finite() || h < 0.0 {
            return Err(bad(format!("height must be finite and nonnegative, found {h}")));
        }
        x.set(v, h);
    }
    Ok(x)
}

pub fn parse_blocks(text: &str, name: &str, g: &LoadedGraph) -> Result<Vec<NodeSet>> {
    let mut blocks = Vec::new();
    for (line, content) in content_lines(text) {
        let mut ids = Vec::new();
        for tok in content.split_whitespace() {
            let label = parse_id(tok, name, line, false)?;
            ids.push(g.node(label).ok_or_else(|| Error::Parse {
                path: name.to_string(),
                line,
                reason: format!("node {label} is not in the graph"),
            })?);
        }
        blocks.push(NodeSet::new(&g.graph, ids)?);
    }
    Ok(blocks)
}

pub fn format_blocks(blocks: &[NodeSet], g: &LoadedGraph) -> String {
    let mut out = String::new();
    for b in blocks {
        let mut labels: Vec<u64> = b.iter().map(|v| g.label(v)).collect();
        labels.sort_unstable();
        let row: Vec<String> = labels.iter().map(u64::to_string).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}
