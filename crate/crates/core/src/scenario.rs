//! Scenario files: a versioned JSON document describing a graph, an initial
//! configuration, the Byzantine set and its strategy, the daemon, and run
//! limits.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::AdversaryStrategy;
use crate::protocol::{Configuration, NodeState, Protocol};
use crate::schedulers::{DaemonPolicy, DaemonSpec};
use crate::topology::{NodeId, NodeSet, Topology};

pub const FORMAT_VERSION: u32 = 1;
pub const DEFAULT_MAX_STEPS: u64 = 1000;
pub const DEFAULT_RADIUS: u32 = 2;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("malformed scenario: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("field `{field}`: {message}")]
    Field { field: &'static str, message: String },
    #[error("reading {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown built-in scenario `{0}`")]
    UnknownBuiltin(String),
}

fn field(field: &'static str, message: impl ToString) -> ScenarioError {
    ScenarioError::Field {
        field,
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GraphSpec {
    Path { n: usize },
    Ring { n: usize },
    Star { n: usize },
    Complete { n: usize },
    Inline { n: usize, edges: Vec<[NodeId; 2]> },
    /// Text graph file, resolved relative to the scenario file.
    File { path: PathBuf },
}

impl GraphSpec {
    pub fn inline(t: &Topology) -> Self {
        GraphSpec::Inline {
            n: t.node_count(),
            edges: t.edges().into_iter().map(|(u, v)| [u, v]).collect(),
        }
    }

    pub fn build(&self, base: Option<&Path>) -> Result<Topology, ScenarioError> {
        let built = match self {
            GraphSpec::Path { n } => Topology::path(*n),
            GraphSpec::Ring { n } => Topology::ring(*n),
            GraphSpec::Star { n } => Topology::star(*n),
            GraphSpec::Complete { n } => Topology::complete(*n),
            GraphSpec::Inline { n, edges } => {
                let edges: Vec<_> = edges.iter().map(|&[u, v]| (u, v)).collect();
                Topology::build(*n, &edges)
            }
            GraphSpec::File { path } => {
                let full = match base {
                    Some(dir) if path.is_relative() => dir.join(path),
                    _ => path.clone(),
                };
                let text = std::fs::read_to_string(&full).map_err(|source| ScenarioError::Io {
                    path: full.clone(),
                    source,
                })?;
                return Topology::parse(&text).map_err(|e| field("graph", format!("{}: {e}", full.display())));
            }
        };
        built.map_err(|e| field("graph", e))
    }

    pub fn label(&self) -> String {
        match self {
            GraphSpec::Path { n } => format!("path{n}"),
            GraphSpec::Ring { n } => format!("ring{n}"),
            GraphSpec::Star { n } => format!("star{n}"),
            GraphSpec::Complete { n } => format!("complete{n}"),
            GraphSpec::Inline { n, edges } => format!("inline{n}m{}", edges.len()),
            GraphSpec::File { path } => path.display().to_string(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialSpec {
    #[default]
    AllNull,
    /// Every configuration of the state space; only meaningful for sweeps.
    Enumerate,
    Random(u64),
    Explicit(Vec<NodeState>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ByzantineSpec {
    #[serde(default)]
    pub nodes: Vec<NodeId>,
    #[serde(default = "dormant")]
    pub strategy: AdversaryStrategy,
}

fn dormant() -> AdversaryStrategy {
    AdversaryStrategy::Dormant
}

impl Default for ByzantineSpec {
    fn default() -> Self {
        Self {
            nodes: Vec::new(),
            strategy: AdversaryStrategy::Dormant,
        }
    }
}

fn default_max_steps() -> u64 {
    DEFAULT_MAX_STEPS
}

fn default_radius() -> u32 {
    DEFAULT_RADIUS
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub format: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub graph: GraphSpec,
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default)]
    pub byzantine: ByzantineSpec,
    #[serde(default)]
    pub daemon: DaemonSpec,
    #[serde(default)]
    pub protocol: Protocol,
    #[serde(default = "default_max_steps")]
    pub max_steps: u64,
    #[serde(default = "default_radius")]
    pub radius: u32,
}

/// A scenario with its graph built and every field checked.
#[derive(Debug, Clone)]
pub struct Instance {
    pub name: Option<String>,
    pub topology: Topology,
    pub byzantine: NodeSet,
    pub strategy: AdversaryStrategy,
    pub daemon: DaemonSpec,
    pub protocol: Protocol,
    pub initial: Configuration,
    pub max_steps: u64,
    pub radius: u32,
}

pub const BUILTIN_NAMES: [&str; 3] = ["theorem2", "edge-smoke", "p5-all-null"];

impl Scenario {
    pub fn new(graph: GraphSpec) -> Self {
        Self {
            format: FORMAT_VERSION,
            name: None,
            graph,
            initial: InitialSpec::AllNull,
            byzantine: ByzantineSpec::default(),
            daemon: DaemonSpec::default(),
            protocol: Protocol::Ssmm,
            max_steps: DEFAULT_MAX_STEPS,
            radius: DEFAULT_RADIUS,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Built-in scenarios compiled into the binary.
    pub fn builtin(name: &str) -> Result<Self, ScenarioError> {
        let mut s = match name {
            "theorem2" => {
                // Path 0-1-2-3-4 with 0 = 1 and 3 = 4 married and 2 dead;
                // node 0 is Byzantine and divorces on its first turn.
                let mut s = Scenario::new(GraphSpec::Path { n: 5 });
                s.initial = InitialSpec::Explicit(vec![
                    NodeState::preferring(0, 0),
                    NodeState::preferring(0, 0),
                    NodeState::null(),
                    NodeState::preferring(1, 0),
                    NodeState::preferring(0, 0),
                ]);
                s.byzantine = ByzantineSpec {
                    nodes: vec![0],
                    strategy: AdversaryStrategy::Divorcer,
                };
                s
            }
            "edge-smoke" => {
                let mut s = Scenario::new(GraphSpec::Path { n: 2 });
                s.max_steps = 100;
                s
            }
            "p5-all-null" => Scenario::new(GraphSpec::Path { n: 5 }),
            other => return Err(ScenarioError::UnknownBuiltin(other.to_owned())),
        };
        s.name = Some(name.to_owned());
        s.daemon = DaemonSpec::new(DaemonPolicy::RoundRobinAge, 2);
        Ok(s)
    }

    pub fn resolve(&self, base: Option<&Path>) -> Result<Instance, ScenarioError> {
        if self.format != FORMAT_VERSION {
            return Err(field(
                "format",
                format!("unsupported version {} (expected {FORMAT_VERSION})", self.format),
            ));
        }
        let topology = self.graph.build(base)?;
        let byzantine: NodeSet = self.byzantine.nodes.iter().copied().collect();
        topology
            .validate_node_set(&byzantine)
            .map_err(|e| field("byzantine.nodes", e))?;
        self.byzantine
            .strategy
            .validate(&topology, &byzantine)
            .map_err(|e| field("byzantine.strategy", e))?;
        self.daemon.validate().map_err(|e| field("daemon.byz_period", e))?;
        let initial = match &self.initial {
            InitialSpec::AllNull => Configuration::all_null(&topology),
            InitialSpec::Random(seed) => Configuration::random(&topology, &mut ChaCha8Rng::seed_from_u64(*seed)),
            InitialSpec::Explicit(states) => {
                let cfg = Configuration(states.clone());
                cfg.validate(&topology).map_err(|e| field("initial", e))?;
                cfg
            }
            InitialSpec::Enumerate => {
                return Err(field("initial", "`enumerate` is only valid in sweeps"));
            }
        };
        Ok(Instance {
            name: self.name.clone(),
            topology,
            byzantine,
            strategy: self.byzantine.strategy.clone(),
            daemon: self.daemon.clone(),
            protocol: self.protocol,
            initial,
            max_steps: self.max_steps,
            radius: self.radius,
        })
    }
}
