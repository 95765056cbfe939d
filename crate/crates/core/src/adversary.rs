//! Byzantine behaviors. A faulty node may rewrite its own state arbitrarily
//! whenever the daemon offers it a turn; it never writes anyone else's.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::{is_married, points_at, Configuration, NodeState, ProtocolError};
use crate::topology::{NodeId, NodeSet, Port, Topology};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AdversaryError {
    #[error("scripted entry {index}: node {node} is not Byzantine")]
    ScriptedNodeNotByzantine { index: usize, node: NodeId },
    #[error("scripted entry {index}: {source}")]
    ScriptedState {
        index: usize,
        #[source]
        source: ProtocolError,
    },
    #[error("scripted entry {index} names no node but the Byzantine set has {count} members")]
    ScriptedNodeAmbiguous { index: usize, count: usize },
    #[error("oscillator period must be at least 1")]
    ZeroPeriod,
}

/// One scripted rewrite: at the first Byzantine turn at or after `step`, the
/// node adopts `state`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptEntry {
    pub step: u64,
    /// Required when more than one node is Byzantine.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node: Option<NodeId>,
    pub state: NodeState,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AdversaryStrategy {
    /// Never changes state.
    Dormant,
    /// Breaks any marriage it is part of; otherwise accepts the lowest-port
    /// pending proposal so that it can break it on its next turn.
    Divorcer,
    /// Cycles `pref` through every port and then null, advancing once every
    /// `period` turns.
    Oscillator {
        #[serde(default = "one")]
        period: u32,
    },
    /// Alternates between proposing to the neighbor closest to the 2-honest
    /// region (lowest port on ties) and retracting.
    Seducer,
    /// Uniformly random valid state every turn.
    RandomState { seed: u64 },
    Scripted { entries: Vec<ScriptEntry> },
}

fn one() -> u32 {
    1
}

impl AdversaryStrategy {
    /// Short label used in sweep tables.
    pub fn label(&self) -> String {
        match self {
            AdversaryStrategy::Dormant => "dormant".into(),
            AdversaryStrategy::Divorcer => "divorcer".into(),
            AdversaryStrategy::Oscillator { period } => format!("oscillator({period})"),
            AdversaryStrategy::Seducer => "seducer".into(),
            AdversaryStrategy::RandomState { seed } => format!("random-state({seed})"),
            AdversaryStrategy::Scripted { entries } => format!("scripted({})", entries.len()),
        }
    }

    pub fn validate(&self, t: &Topology, byz: &NodeSet) -> Result<(), AdversaryError> {
        match self {
            AdversaryStrategy::Oscillator { period: 0 } => Err(AdversaryError::ZeroPeriod),
            AdversaryStrategy::Scripted { entries } => {
                for (index, entry) in entries.iter().enumerate() {
                    let nodes: Vec<NodeId> = match entry.node {
                        Some(node) if !byz.contains(node) => {
                            return Err(AdversaryError::ScriptedNodeNotByzantine { index, node })
                        }
                        Some(node) => vec![node],
                        None if byz.len() > 1 => {
                            return Err(AdversaryError::ScriptedNodeAmbiguous {
                                index,
                                count: byz.len(),
                            })
                        }
                        None => byz.to_vec(),
                    };
                    for node in nodes {
                        entry
                            .state
                            .validate(node, t.degree(node))
                            .map_err(|source| AdversaryError::ScriptedState { index, source })?;
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Per-run adversary: a strategy plus whatever memory it needs.
#[derive(Debug, Clone)]
pub struct Adversary {
    strategy: AdversaryStrategy,
    turns: BTreeMap<NodeId, u64>,
    rng: Option<ChaCha8Rng>,
    script_cursor: BTreeMap<NodeId, usize>,
    seduce_port: BTreeMap<NodeId, Port>,
}

impl Adversary {
    pub fn new(strategy: AdversaryStrategy, t: &Topology, byz: &NodeSet) -> Self {
        let rng = match &strategy {
            AdversaryStrategy::RandomState { seed } => Some(ChaCha8Rng::seed_from_u64(*seed)),
            _ => None,
        };
        let honest2 = t.c_honest_set(byz, 2);
        let seduce_port = byz
            .iter()
            .map(|b| {
                let port = t
                    .neighbors(b)
                    .iter()
                    .enumerate()
                    .min_by_key(|&(p, &u)| (t.distance_to_set(u, &honest2).unwrap_or(0), p))
                    .map_or(0, |(p, _)| p);
                (b, Port(port))
            })
            .collect();
        Self {
            strategy,
            turns: BTreeMap::new(),
            rng,
            script_cursor: BTreeMap::new(),
            seduce_port,
        }
    }

    pub fn strategy(&self) -> &AdversaryStrategy {
        &self.strategy
    }

    /// Next full state of Byzantine node `v` on its turn at `step`.
    pub fn act(&mut self, t: &Topology, cfg: &Configuration, v: NodeId, step: u64) -> NodeState {
        let current = cfg.state(v);
        let turn = {
            let counter = self.turns.entry(v).or_insert(0);
            let turn = *counter;
            *counter += 1;
            turn
        };
        let deg = t.degree(v);
        match &self.strategy {
            AdversaryStrategy::Dormant => current,
            AdversaryStrategy::Divorcer => {
                if is_married(t, cfg, v) {
                    NodeState { pref: None, ..current }
                } else if current.pref.is_none() {
                    let suitor = t.neighbors(v).iter().position(|&u| points_at(t, cfg, u, v));
                    NodeState {
                        pref: suitor.map(Port).or(current.pref),
                        ..current
                    }
                } else {
                    current
                }
            }
            AdversaryStrategy::Oscillator { period } => {
                let phase = (turn / u64::from(*period)) % (deg as u64 + 1);
                let phase = phase as usize;
                NodeState {
                    pref: (phase < deg).then_some(Port(phase)),
                    ..current
                }
            }
            AdversaryStrategy::Seducer => {
                let target = self.seduce_port[&v];
                NodeState {
                    pref: if current.pref == Some(target) { None } else { Some(target) },
                    ..current
                }
            }
            AdversaryStrategy::RandomState { .. } => {
                let rng = self.rng.as_mut().expect("random adversary has an rng");
                NodeState::random(deg, rng)
            }
            AdversaryStrategy::Scripted { entries } => {
                let cursor = self.script_cursor.entry(v).or_insert(0);
                let mut next = current;
                while let Some(entry) = entries.get(*cursor) {
                    if entry.step > step {
                        break;
                    }
                    if entry.node.is_none_or(|n| n == v) {
                        next = entry.state;
                    }
                    *cursor += 1;
                }
                next
            }
        }
    }
}

/// Stateless convenience wrapper: the action of a fresh adversary.
pub fn byz_action(
    strategy: &AdversaryStrategy,
    t: &Topology,
    cfg: &Configuration,
    byz: &NodeSet,
    v: NodeId,
    step: u64,
) -> NodeState {
    Adversary::new(strategy.clone(), t, byz).act(t, cfg, v, step)
}
