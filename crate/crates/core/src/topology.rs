//! Network topology with anonymous local port labels.
//!
//! Nodes carry global indices only as simulation bookkeeping. Protocol code
//! addresses neighbors exclusively through [`Port`]s, which are positions in a
//! node's adjacency list.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Global node index (bookkeeping only).
pub type NodeId = usize;

/// A local neighbor label at one node: `0..deg(v)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Port(pub usize);

impl fmt::Display for Port {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TopologyError {
    #[error("graph needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("node {node} out of range for a graph with {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {{{0}, {1}}}")]
    DuplicateEdge(usize, usize),
    #[error("graph is disconnected: node {0} is unreachable from node 0")]
    Disconnected(usize),
    #[error("adjacency of node {u} lists {v} but not the reverse")]
    Asymmetric { u: usize, v: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct GraphParseError {
    pub line: usize,
    pub message: String,
}

/// A set of node indices, kept sorted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeSet(BTreeSet<NodeId>);

impl NodeSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.0.contains(&v)
    }

    pub fn insert(&mut self, v: NodeId) -> bool {
        self.0.insert(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.0.iter().copied()
    }

    pub fn is_subset(&self, other: &NodeSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn difference(&self, other: &NodeSet) -> NodeSet {
        NodeSet(self.0.difference(&other.0).copied().collect())
    }

    /// Dense membership mask of length `n`.
    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut mask = vec![false; n];
        for v in self.iter().filter(|&v| v < n) {
            mask[v] = true;
        }
        mask
    }

    pub fn to_vec(&self) -> Vec<NodeId> {
        self.0.iter().copied().collect()
    }
}

impl FromIterator<NodeId> for NodeSet {
    fn from_iter<I: IntoIterator<Item = NodeId>>(iter: I) -> Self {
        NodeSet(iter.into_iter().collect())
    }
}

impl<const N: usize> From<[NodeId; N]> for NodeSet {
    fn from(nodes: [NodeId; N]) -> Self {
        nodes.into_iter().collect()
    }
}

/// Simple, connected, undirected graph with per-node port labels and cached
/// all-pairs distances.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    adjacency: Vec<Vec<NodeId>>,
    edge_count: usize,
    distances: Vec<Vec<u32>>,
}

impl Topology {
    /// Builds a topology from an edge list. Ports are assigned in ascending
    /// neighbor-index order.
    pub fn build(n: usize, edges: &[(NodeId, NodeId)]) -> Result<Self, TopologyError> {
        if n < 2 {
            return Err(TopologyError::TooFewNodes(n));
        }
        let mut adjacency = vec![Vec::new(); n];
        let mut seen = BTreeSet::new();
        for &(u, v) in edges {
            for node in [u, v] {
                if node >= n {
                    return Err(TopologyError::NodeOutOfRange { node, n });
                }
            }
            if u == v {
                return Err(TopologyError::SelfLoop(u));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(TopologyError::DuplicateEdge(u.min(v), u.max(v)));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Self::from_adjacency(adjacency)
    }

    /// Builds a topology from explicit adjacency lists. The order of each list
    /// defines that node's port labels, so this constructor admits any local
    /// labeling, not only the ascending one.
    pub fn from_adjacency(adjacency: Vec<Vec<NodeId>>) -> Result<Self, TopologyError> {
        let n = adjacency.len();
        if n < 2 {
            return Err(TopologyError::TooFewNodes(n));
        }
        let mut edge_ends = 0;
        for (u, list) in adjacency.iter().enumerate() {
            let mut distinct = BTreeSet::new();
            for &v in list {
                if v >= n {
                    return Err(TopologyError::NodeOutOfRange { node: v, n });
                }
                if v == u {
                    return Err(TopologyError::SelfLoop(u));
                }
                if !distinct.insert(v) {
                    return Err(TopologyError::DuplicateEdge(u.min(v), u.max(v)));
                }
                if !adjacency[v].contains(&u) {
                    return Err(TopologyError::Asymmetric { u, v });
                }
            }
            edge_ends += list.len();
        }
        let distances: Vec<Vec<u32>> = (0..n).map(|s| bfs(&adjacency, s)).collect();
        if let Some(unreachable) = distances[0].iter().position(|&d| d == u32::MAX) {
            return Err(TopologyError::Disconnected(unreachable));
        }
        Ok(Self {
            adjacency,
            edge_count: edge_ends / 2,
            distances,
        })
    }

    pub fn path(n: usize) -> Result<Self, TopologyError> {
        let edges: Vec<_> = (1..n).map(|v| (v - 1, v)).collect();
        Self::build(n, &edges)
    }

    /// Cycle on `n >= 3` nodes.
    pub fn ring(n: usize) -> Result<Self, TopologyError> {
        if n < 3 {
            return Err(TopologyError::TooFewNodes(n));
        }
        let edges: Vec<_> = (0..n).map(|v| (v, (v + 1) % n)).collect();
        Self::build(n, &edges)
    }

    /// Star with center 0 and `n - 1` leaves.
    pub fn star(n: usize) -> Result<Self, TopologyError> {
        let edges: Vec<_> = (1..n).map(|v| (0, v)).collect();
        Self::build(n, &edges)
    }

    pub fn complete(n: usize) -> Result<Self, TopologyError> {
        let edges: Vec<_> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .collect();
        Self::build(n, &edges)
    }

    /// Parses the text format: a header `n m` followed by `m` lines `u v`.
    /// Blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self, GraphParseError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let err = |line, message: String| GraphParseError { line, message };

        let (header_line, header) = lines.next().ok_or_else(|| err(1, "missing header `n m`".into()))?;
        let (n, m) = parse_pair(header).map_err(|m| err(header_line, m))?;

        let mut edges = Vec::with_capacity(m);
        let mut seen = BTreeSet::new();
        let mut last_line = header_line;
        for (line, body) in lines {
            last_line = line;
            if edges.len() == m {
                return Err(err(line, format!("more than the declared {m} edges")));
            }
            let (u, v) = parse_pair(body).map_err(|m| err(line, m))?;
            if u >= n || v >= n {
                return Err(err(line, format!("node index out of range for n = {n}")));
            }
            if u == v {
                return Err(err(line, format!("self-loop at node {u}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(err(line, format!("duplicate edge {{{u}, {v}}}")));
            }
            edges.push((u, v));
        }
        if edges.len() != m {
            return Err(err(
                last_line,
                format!("declared {m} edges but found {}", edges.len()),
            ));
        }
        Self::build(n, &edges).map_err(|e| err(header_line, e.to_string()))
    }

    /// Renders the graph in the text format accepted by [`Topology::parse`].
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.node_count(), self.edge_count);
        for (u, v) in self.edges() {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn nodes(&self) -> std::ops::Range<NodeId> {
        0..self.node_count()
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adjacency[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Neighbors of `v` in port order.
    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adjacency[v]
    }

    pub fn neighbor_at(&self, v: NodeId, port: Port) -> NodeId {
        self.adjacency[v][port.0]
    }

    /// The port under which `v` sees `u`, if they are adjacent.
    pub fn port_of(&self, v: NodeId, u: NodeId) -> Option<Port> {
        self.adjacency[v].iter().position(|&w| w == u).map(Port)
    }

    pub fn is_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.distances[u][v] == 1
    }

    /// Edges as `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut edges: Vec<_> = self
            .adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
            .collect();
        edges.sort_unstable();
        edges
    }

    /// Hop distance between two nodes.
    pub fn distance(&self, u: NodeId, v: NodeId) -> u32 {
        self.distances[u][v]
    }

    /// Distance from `v` to the closest member of `set`, or `None` when the
    /// set is empty.
    pub fn distance_to_set(&self, v: NodeId, set: &NodeSet) -> Option<u32> {
        set.iter().map(|b| self.distances[v][b]).min()
    }

    /// Nodes outside `byz` at distance strictly greater than `radius` from
    /// every member of `byz`.
    pub fn c_honest_set(&self, byz: &NodeSet, radius: u32) -> NodeSet {
        self.nodes()
            .filter(|&v| !byz.contains(v))
            .filter(|&v| byz.iter().all(|b| self.distances[v][b] > radius))
            .collect()
    }

    pub fn validate_node_set(&self, set: &NodeSet) -> Result<(), TopologyError> {
        match set.iter().find(|&v| v >= self.node_count()) {
            Some(node) => Err(TopologyError::NodeOutOfRange {
                node,
                n: self.node_count(),
            }),
            None => Ok(()),
        }
    }
}

fn bfs(adjacency: &[Vec<NodeId>], source: NodeId) -> Vec<u32> {
    let mut dist = vec![u32::MAX; adjacency.len()];
    dist[source] = 0;
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        for &v in &adjacency[u] {
            if dist[v] == u32::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

fn parse_pair(line: &str) -> Result<(usize, usize), String> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 2 {
        return Err(format!("expected two integers, got `{line}`"));
    }
    let num = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| format!("`{s}` is not a non-negative integer"))
    };
    Ok((num(fields[0])?, num(fields[1])?))
}
