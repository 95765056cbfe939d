//! The matching protocol: node state, local predicates, guards and rules.
//!
//! Each node holds a preference pointer (`pref`, the output variable) and a
//! memory of its last abandoned proposal (`old_pref`). Rules read only the
//! node's own ports and the current state of its neighbors.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::{NodeId, NodeSet, Port, Topology};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("rule {rule} is not enabled at node {node}")]
    RuleNotEnabled { node: NodeId, rule: Rule },
    #[error("configuration has {got} node states, topology has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },
    #[error("node {node}: {field} = {port} is not a port (degree {degree})")]
    PortOutOfRange {
        node: NodeId,
        field: &'static str,
        port: usize,
        degree: usize,
    },
}

/// Memory of one node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeState {
    pub pref: Option<Port>,
    pub old_pref: Port,
}

impl NodeState {
    pub const fn null() -> Self {
        Self {
            pref: None,
            old_pref: Port(0),
        }
    }

    pub const fn preferring(pref: usize, old_pref: usize) -> Self {
        Self {
            pref: Some(Port(pref)),
            old_pref: Port(old_pref),
        }
    }

    pub fn validate(&self, node: NodeId, degree: usize) -> Result<(), ProtocolError> {
        let check = |field, port: Port| {
            if port.0 < degree {
                Ok(())
            } else {
                Err(ProtocolError::PortOutOfRange {
                    node,
                    field,
                    port: port.0,
                    degree,
                })
            }
        };
        if let Some(p) = self.pref {
            check("pref", p)?;
        }
        check("old_pref", self.old_pref)
    }

    /// Every valid state of a node with the given degree, in enumeration
    /// order: `pref` null first, then ports ascending; `old_pref` innermost.
    pub fn all(degree: usize) -> impl Iterator<Item = NodeState> {
        (0..=degree).flat_map(move |p| {
            (0..degree).map(move |o| NodeState {
                pref: (p > 0).then(|| Port(p - 1)),
                old_pref: Port(o),
            })
        })
    }

    /// Number of valid states for a node of the given degree.
    pub fn domain_size(degree: usize) -> usize {
        (degree + 1) * degree
    }

    /// Uniformly random valid state for a node of the given degree.
    pub fn random<R: Rng + ?Sized>(degree: usize, rng: &mut R) -> Self {
        let pick = rng.random_range(0..=degree);
        Self {
            pref: (pick < degree).then_some(Port(pick)),
            old_pref: Port(rng.random_range(0..degree)),
        }
    }
}

impl fmt::Display for NodeState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.pref {
            Some(p) => write!(f, "pref={} old={}", p, self.old_pref),
            None => write!(f, "pref=null old={}", self.old_pref),
        }
    }
}

/// Global state: one [`NodeState`] per node.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Configuration(pub Vec<NodeState>);

impl Configuration {
    /// Every `pref` null, every `old_pref` at port 0.
    pub fn all_null(t: &Topology) -> Self {
        Self(vec![NodeState::null(); t.node_count()])
    }

    pub fn random<R: Rng + ?Sized>(t: &Topology, rng: &mut R) -> Self {
        Self(t.nodes().map(|v| NodeState::random(t.degree(v), rng)).collect())
    }

    /// Builds a configuration from neighbor pointers given as global node
    /// indices; `old_pref` defaults to port 0. Convenient in tests.
    pub fn from_targets(t: &Topology, targets: &[Option<NodeId>]) -> Self {
        Self(
            targets
                .iter()
                .enumerate()
                .map(|(v, target)| NodeState {
                    pref: target.map(|u| t.port_of(v, u).expect("target is not a neighbor")),
                    old_pref: Port(0),
                })
                .collect(),
        )
    }

    pub fn validate(&self, t: &Topology) -> Result<(), ProtocolError> {
        if self.0.len() != t.node_count() {
            return Err(ProtocolError::LengthMismatch {
                expected: t.node_count(),
                got: self.0.len(),
            });
        }
        self.0
            .iter()
            .enumerate()
            .try_for_each(|(v, s)| s.validate(v, t.degree(v)))
    }

    pub fn state(&self, v: NodeId) -> NodeState {
        self.0[v]
    }

    pub fn set(&mut self, v: NodeId, state: NodeState) {
        self.0[v] = state;
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// The five mutually exclusive local predicates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Predicate {
    Proposing,
    Married,
    Doomed,
    Dead,
    Single,
}

impl Predicate {
    pub const ALL: [Predicate; 5] = [
        Predicate::Proposing,
        Predicate::Married,
        Predicate::Doomed,
        Predicate::Dead,
        Predicate::Single,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rule {
    /// Accept a proposal.
    M,
    /// Propose to a free neighbor.
    S,
    /// Abandon a doomed proposal.
    A,
}

impl Rule {
    pub const ALL: [Rule; 3] = [Rule::M, Rule::S, Rule::A];

    fn bit(self) -> u8 {
        match self {
            Rule::M => 1,
            Rule::S => 2,
            Rule::A => 4,
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Rule::M => "M",
            Rule::S => "S",
            Rule::A => "A",
        };
        f.write_str(name)
    }
}

/// Set of rules enabled at a node.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct RuleSet(u8);

impl RuleSet {
    pub fn insert(&mut self, rule: Rule) {
        self.0 |= rule.bit();
    }

    pub fn contains(self, rule: Rule) -> bool {
        self.0 & rule.bit() != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = Rule> {
        Rule::ALL.into_iter().filter(move |r| self.contains(*r))
    }

    /// The enabled rule when exactly one is enabled.
    pub fn single(self) -> Option<Rule> {
        let mut it = self.iter();
        match (it.next(), it.next()) {
            (Some(r), None) => Some(r),
            _ => None,
        }
    }
}

impl FromIterator<Rule> for RuleSet {
    fn from_iter<I: IntoIterator<Item = Rule>>(iter: I) -> Self {
        let mut set = RuleSet::default();
        for r in iter {
            set.insert(r);
        }
        set
    }
}

/// Which neighbor preference `next_v` looks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NextTarget {
    /// Neighbors whose `pref` is null.
    Null,
    /// Neighbors whose `pref` points back at the scanning node.
    SelfNode,
}

/// Protocol variant.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    /// Round-robin scan resuming after `old_pref`, which rule A records.
    #[default]
    Ssmm,
    /// Memory-less variant: always scans from port 0 and never writes `old_pref`.
    Baseline,
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::Ssmm => "ssmm",
            Protocol::Baseline => "baseline",
        })
    }
}

/// The node `v` points at, if any.
#[inline]
pub fn pref_node(t: &Topology, cfg: &Configuration, v: NodeId) -> Option<NodeId> {
    cfg.0[v].pref.map(|p| t.neighbor_at(v, p))
}

/// Does `u`'s preference point at `v`?
#[inline]
pub fn points_at(t: &Topology, cfg: &Configuration, u: NodeId, v: NodeId) -> bool {
    pref_node(t, cfg, u) == Some(v)
}

#[inline]
pub fn is_married(t: &Topology, cfg: &Configuration, v: NodeId) -> bool {
    match pref_node(t, cfg, v) {
        Some(u) => points_at(t, cfg, u, v),
        None => false,
    }
}

pub fn classify(t: &Topology, cfg: &Configuration, v: NodeId) -> Predicate {
    match pref_node(t, cfg, v) {
        Some(u) => match pref_node(t, cfg, u) {
            None => Predicate::Proposing,
            Some(w) if w == v => Predicate::Married,
            Some(_) => Predicate::Doomed,
        },
        None => {
            if t.neighbors(v).iter().all(|&u| is_married(t, cfg, u)) {
                Predicate::Dead
            } else {
                Predicate::Single
            }
        }
    }
}

/// Local legitimacy: married or dead.
pub fn spec(t: &Topology, cfg: &Configuration, v: NodeId) -> bool {
    matches!(classify(t, cfg, v), Predicate::Married | Predicate::Dead)
}

pub fn classify_all(t: &Topology, cfg: &Configuration) -> Vec<Predicate> {
    t.nodes().map(|v| classify(t, cfg, v)).collect()
}

fn matches_target(t: &Topology, cfg: &Configuration, v: NodeId, u: NodeId, target: NextTarget) -> bool {
    match target {
        NextTarget::Null => cfg.0[u].pref.is_none(),
        NextTarget::SelfNode => points_at(t, cfg, u, v),
    }
}

/// Cyclic scan of `v`'s ports beginning at `start`, returning the first whose
/// neighbor matches `target`.
fn scan_from(t: &Topology, cfg: &Configuration, v: NodeId, start: usize, target: NextTarget) -> Option<Port> {
    let deg = t.degree(v);
    (0..deg)
        .map(|i| (start + i) % deg)
        .find(|&p| matches_target(t, cfg, v, t.neighbor_at(v, Port(p)), target))
        .map(Port)
}

/// First matching neighbor strictly after `old_pref` in round-robin order;
/// `old_pref` itself is examined last.
pub fn next_v(t: &Topology, cfg: &Configuration, v: NodeId, target: NextTarget) -> Option<Port> {
    scan_from(t, cfg, v, cfg.0[v].old_pref.0 + 1, target)
}

/// Memory-less counterpart of [`next_v`]: lowest matching port.
pub fn next_v_baseline(t: &Topology, cfg: &Configuration, v: NodeId, target: NextTarget) -> Option<Port> {
    scan_from(t, cfg, v, 0, target)
}

/// Guards, each evaluated independently.
pub fn enabled_rules(t: &Topology, cfg: &Configuration, v: NodeId) -> RuleSet {
    let mut rules = RuleSet::default();
    let neighbors = t.neighbors(v);
    match pref_node(t, cfg, v) {
        None => {
            let proposed_to = neighbors.iter().any(|&u| points_at(t, cfg, u, v));
            if proposed_to {
                rules.insert(Rule::M);
            }
            if !proposed_to && neighbors.iter().any(|&u| cfg.0[u].pref.is_none()) {
                rules.insert(Rule::S);
            }
        }
        Some(u) => {
            if let Some(w) = pref_node(t, cfg, u) {
                if w != v {
                    rules.insert(Rule::A);
                }
            }
        }
    }
    rules
}

pub fn is_enabled(t: &Topology, cfg: &Configuration, v: NodeId) -> bool {
    !enabled_rules(t, cfg, v).is_empty()
}

impl Protocol {
    /// The state `v` moves to when firing `rule`.
    pub fn fire(self, t: &Topology, cfg: &Configuration, v: NodeId, rule: Rule) -> Result<NodeState, ProtocolError> {
        if !enabled_rules(t, cfg, v).contains(rule) {
            return Err(ProtocolError::RuleNotEnabled { node: v, rule });
        }
        let next = match self {
            Protocol::Ssmm => next_v,
            Protocol::Baseline => next_v_baseline,
        };
        let mut state = cfg.0[v];
        match rule {
            Rule::M => state.pref = next(t, cfg, v, NextTarget::SelfNode),
            Rule::S => state.pref = next(t, cfg, v, NextTarget::Null),
            Rule::A => {
                if self == Protocol::Ssmm {
                    state.old_pref = state.pref.expect("rule A requires a preference");
                }
                state.pref = None;
            }
        }
        debug_assert!(rule == Rule::A || state.pref.is_some());
        Ok(state)
    }

    /// Successor configuration after `v` fires `rule`.
    pub fn apply(self, t: &Topology, cfg: &Configuration, v: NodeId, rule: Rule) -> Result<Configuration, ProtocolError> {
        let state = self.fire(t, cfg, v, rule)?;
        let mut next = cfg.clone();
        next.0[v] = state;
        Ok(next)
    }
}

pub fn apply_rule(t: &Topology, cfg: &Configuration, v: NodeId, rule: Rule) -> Result<Configuration, ProtocolError> {
    Protocol::Ssmm.apply(t, cfg, v, rule)
}

pub fn baseline_apply_rule(
    t: &Topology,
    cfg: &Configuration,
    v: NodeId,
    rule: Rule,
) -> Result<Configuration, ProtocolError> {
    Protocol::Baseline.apply(t, cfg, v, rule)
}

/// Every node of the `radius`-honest set satisfies [`spec`].
pub fn in_lc(t: &Topology, cfg: &Configuration, byz: &NodeSet, radius: u32) -> bool {
    t.c_honest_set(byz, radius).iter().all(|v| spec(t, cfg, v))
}
