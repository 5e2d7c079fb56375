use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{CellId, TissueState};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopologyNode<S> {
    /// Cell id when extracted from a tissue; arbitrary label otherwise.
    pub id: CellId,
    pub position: [S; 2],
}

/// Undirected cell graph. Edges are stored once as `(i, j)` with `i < j`,
/// indexing into `nodes`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TopologyGraph<S> {
    pub nodes: Vec<TopologyNode<S>>,
    pub edges: BTreeSet<(usize, usize)>,
}

impl<S: Scalar> TopologyGraph<S> {
    pub fn new(nodes: Vec<TopologyNode<S>>, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let edges = edges
            .into_iter()
            .filter(|(a, b)| a != b)
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        TopologyGraph { nodes, edges }
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    pub fn positions(&self) -> Vec<[S; 2]> {
        self.nodes.iter().map(|n| n.position).collect()
    }

    /// Text form: `nodes N`, then `index x y` rows, then `edges M`, then
    /// one `i j` pair per line.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "nodes {}", self.nodes.len());
        for (k, n) in self.nodes.iter().enumerate() {
            let _ = writeln!(out, "{k} {} {}", n.position[0], n.position[1]);
        }
        let _ = writeln!(out, "edges {}", self.edges.len());
        for (a, b) in &self.edges {
            let _ = writeln!(out, "{a} {b}");
        }
        out
    }
}

/// Parses the format written by [`TopologyGraph::to_edge_list`].
pub fn parse_edge_list<S: Scalar>(text: &str) -> Result<TopologyGraph<S>, String> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .enumerate();
    let mut header = |word: &str| -> Result<usize, String> {
        let (n, line) = lines.next().ok_or_else(|| format!("missing `{word}` header"))?;
        let rest = line
            .strip_prefix(word)
            .ok_or_else(|| format!("line {}: expected `{word} <count>`", n + 1))?;
        rest.trim().parse().map_err(|e| format!("line {}: {e}", n + 1))
    };
    let n_nodes = header("nodes")?;
    let mut nodes = Vec::with_capacity(n_nodes);
    let mut rows: Vec<(usize, String)> = Vec::new();
    for _ in 0..n_nodes {
        let (n, line) = lines.next().ok_or("truncated node table")?;
        rows.push((n, line.to_string()));
    }
    for (k, (n, line)) in rows.iter().enumerate() {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 {
            return Err(format!("line {}: expected `index x y`", n + 1));
        }
        let idx: usize = f[0].parse().map_err(|e| format!("line {}: {e}", n + 1))?;
        if idx != k {
            return Err(format!("line {}: node indices must be consecutive", n + 1));
        }
        let x: f64 = f[1].parse().map_err(|e| format!("line {}: {e}", n + 1))?;
        let y: f64 = f[2].parse().map_err(|e| format!("line {}: {e}", n + 1))?;
        nodes.push(TopologyNode {
            id: k as CellId,
            position: [S::lit(x), S::lit(y)],
        });
    }
    let mut header = |word: &str| -> Result<usize, String> {
        let (n, line) = lines.next().ok_or_else(|| format!("missing `{word}` header"))?;
        let rest = line
            .strip_prefix(word)
            .ok_or_else(|| format!("line {}: expected `{word} <count>`", n + 1))?;
        rest.trim().parse().map_err(|e| format!("line {}: {e}", n + 1))
    };
    let n_edges = header("edges")?;
    let mut edges = Vec::with_capacity(n_edges);
    for (n, line) in lines {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 2 {
            return Err(format!("line {}: expected `i j`", n + 1));
        }
        let a: usize = f[0].parse().map_err(|e| format!("line {}: {e}", n + 1))?;
        let b: usize = f[1].parse().map_err(|e| format!("line {}: {e}", n + 1))?;
        if a >= nodes.len() || b >= nodes.len() {
            return Err(format!("line {}: edge references unknown node", n + 1));
        }
        edges.push((a, b));
    }
    if edges.len() != n_edges {
        return Err(format!("expected {n_edges} edges, found {}", edges.len()));
    }
    Ok(TopologyGraph::new(nodes, edges))
}

impl<S: Scalar> TissueState<S> {
    /// Live cells as nodes ordered by lattice site (row-major position),
    /// junctions as edges.
    pub fn extract_topology(&self) -> TopologyGraph<S> {
        let mut live: Vec<_> = self.live_cells().collect();
        live.sort_by_key(|c| c.site);
        let index: BTreeMap<CellId, usize> = live.iter().enumerate().map(|(k, c)| (c.id, k)).collect();
        let nodes = live
            .iter()
            .map(|c| TopologyNode {
                id: c.id,
                position: c.position,
            })
            .collect();
        let edges = self
            .edges
            .keys()
            .filter_map(|(a, b)| Some((*index.get(a)?, *index.get(b)?)));
        TopologyGraph::new(nodes, edges)
    }
}
