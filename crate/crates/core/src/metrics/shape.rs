use std::cmp::Ordering;

use super::{dist2, hausdorff, MetricsError, TargetSpec};
use crate::scalar::Scalar;
use crate::tissue::{TissueState, TopologyGraph};

/// Hausdorff distance between live cell positions and the target shape.
/// An all-dead tissue scores `target.max_morphology_error`.
pub fn morphology_error<S: Scalar>(tissue: &TissueState<S>, target: &TargetSpec<S>) -> Result<S, MetricsError> {
    if target.positions.is_empty() {
        return Err(MetricsError::EmptySet);
    }
    let live = tissue.positions();
    if live.is_empty() {
        return Ok(target.max_morphology_error);
    }
    hausdorff(&live, &target.positions)
}

/// Greedy one-to-one matching of tissue nodes onto target nodes, closest
/// pairs first; ties resolved by tissue index, then target index. Returns
/// the tissue node matched to each target node.
pub(crate) fn match_nodes<S: Scalar>(tissue: &TopologyGraph<S>, target: &TopologyGraph<S>) -> Vec<Option<usize>> {
    let mut pairs: Vec<(S, usize, usize)> = Vec::with_capacity(tissue.nodes.len() * target.nodes.len());
    for (i, a) in tissue.nodes.iter().enumerate() {
        for (j, b) in target.nodes.iter().enumerate() {
            pairs.push((dist2(a.position, b.position), i, j));
        }
    }
    pairs.sort_by(|x, y| {
        x.0.partial_cmp(&y.0)
            .unwrap_or(Ordering::Equal)
            .then(x.1.cmp(&y.1))
            .then(x.2.cmp(&y.2))
    });
    let mut used = vec![false; tissue.nodes.len()];
    let mut matched = vec![None; target.nodes.len()];
    let mut left = tissue.nodes.len().min(target.nodes.len());
    for (_, i, j) in pairs {
        if left == 0 {
            break;
        }
        if !used[i] && matched[j].is_none() {
            used[i] = true;
            matched[j] = Some(i);
            left -= 1;
        }
    }
    matched
}

/// Fraction of target structure missing from the tissue: unmatched target
/// nodes plus target edges whose matched endpoints are not joined, over the
/// target's node and edge count. Lies in `[0, 1]`.
pub fn topology_error<S: Scalar>(tissue: &TopologyGraph<S>, target: &TopologyGraph<S>) -> Result<S, MetricsError> {
    if target.is_empty() {
        return Err(MetricsError::EmptySet);
    }
    let matched = match_nodes(tissue, target);
    let node_misses = matched.iter().filter(|m| m.is_none()).count();
    let edge_misses = target
        .edges
        .iter()
        .filter(|&&(u, v)| match (matched[u], matched[v]) {
            (Some(a), Some(b)) => !tissue.has_edge(a, b),
            _ => true,
        })
        .count();
    let total = target.nodes.len() + target.edges.len();
    Ok(S::from_usize_lossy(node_misses + edge_misses) / S::from_usize_lossy(total))
}
