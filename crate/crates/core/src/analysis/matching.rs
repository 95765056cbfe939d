//! Matching extraction and maximality verdicts.
//!
//! [`is_maximal_matching`] is the fast edge-scan check. The `brute_force`
//! submodule enumerates every matching of the induced subgraph and serves as
//! an independent oracle for it.

use std::collections::BTreeSet;

use crate::protocol::{pref_node, Configuration};
use crate::topology::{NodeId, NodeSet, Topology};

/// Undirected edge, normalized so that `.0 < .1`.
pub type Edge = (NodeId, NodeId);

pub fn normalize(u: NodeId, v: NodeId) -> Edge {
    (u.min(v), u.max(v))
}

/// The honest-radius set plus every outside node mutually married to a
/// member of it.
pub fn marriage_subset(t: &Topology, cfg: &Configuration, byz: &NodeSet, radius: u32) -> NodeSet {
    let core = t.c_honest_set(byz, radius);
    let mut subset = core.clone();
    for v in t.nodes().filter(|&v| !core.contains(v)) {
        if let Some(u) = pref_node(t, cfg, v) {
            if core.contains(u) && pref_node(t, cfg, u) == Some(v) {
                subset.insert(v);
            }
        }
    }
    subset
}

/// Mutually preferring pairs with both endpoints in `subset`.
pub fn extract_matching(t: &Topology, cfg: &Configuration, subset: &NodeSet) -> Vec<Edge> {
    let edges: BTreeSet<Edge> = subset
        .iter()
        .filter_map(|v| {
            let u = pref_node(t, cfg, v)?;
            (subset.contains(u) && pref_node(t, cfg, u) == Some(v)).then(|| normalize(u, v))
        })
        .collect();
    edges.into_iter().collect()
}

/// Edges of the subgraph induced by `subset`.
pub fn induced_edges(t: &Topology, subset: &NodeSet) -> Vec<Edge> {
    t.edges()
        .into_iter()
        .filter(|&(u, v)| subset.contains(u) && subset.contains(v))
        .collect()
}

/// `edges` is a matching of the subgraph induced by `subset` and no induced
/// edge has both endpoints unmatched.
pub fn is_maximal_matching(t: &Topology, subset: &NodeSet, edges: &[Edge]) -> bool {
    let mut matched = vec![false; t.node_count()];
    for &(u, v) in edges {
        if u >= t.node_count() || v >= t.node_count() {
            return false;
        }
        if !subset.contains(u) || !subset.contains(v) || !t.is_edge(u, v) {
            return false;
        }
        if matched[u] || matched[v] {
            return false;
        }
        matched[u] = true;
        matched[v] = true;
    }
    induced_edges(t, subset)
        .into_iter()
        .all(|(u, v)| matched[u] || matched[v])
}

pub mod brute_force {
    //! Exhaustive matching enumeration. Exponential; intended for small
    //! subgraphs only.

    use super::*;

    /// Largest induced subgraph the enumerator accepts.
    pub const MAX_NODES: usize = 12;

    /// Every matching (including the empty one) of the given edge list, each
    /// as a bitmask over the indices of `edges`.
    pub fn all_matchings(edges: &[Edge]) -> Vec<u128> {
        assert!(edges.len() <= 128, "too many edges for brute-force enumeration");
        let mut out = Vec::new();
        let mut used = BTreeSet::new();
        extend(edges, 0, 0, &mut used, &mut out);
        out
    }

    fn extend(edges: &[Edge], from: usize, mask: u128, used: &mut BTreeSet<NodeId>, out: &mut Vec<u128>) {
        out.push(mask);
        for i in from..edges.len() {
            let (u, v) = edges[i];
            if used.contains(&u) || used.contains(&v) {
                continue;
            }
            used.insert(u);
            used.insert(v);
            extend(edges, i + 1, mask | (1u128 << i), used, out);
            used.remove(&u);
            used.remove(&v);
        }
    }

    /// Maximality by exhaustion: `edges` must be one of the enumerated
    /// matchings of the induced subgraph and no enumerated matching may be a
    /// strict superset of it. `None` when the subset exceeds [`MAX_NODES`].
    pub fn is_maximal_matching(t: &Topology, subset: &NodeSet, edges: &[Edge]) -> Option<bool> {
        if subset.len() > MAX_NODES {
            return None;
        }
        let induced = induced_edges(t, subset);
        let mut target = 0u128;
        for &(u, v) in edges {
            match induced.iter().position(|&e| e == normalize(u, v)) {
                Some(i) if target & (1 << i) == 0 => target |= 1 << i,
                _ => return Some(false),
            }
        }
        Some(is_maximal_mask(&all_matchings(&induced), target))
    }

    /// `target` is one of `all` and no member of `all` strictly contains it.
    pub fn is_maximal_mask(all: &[u128], target: u128) -> bool {
        all.contains(&target) && !all.iter().any(|&m| m != target && m & target == target)
    }
}
