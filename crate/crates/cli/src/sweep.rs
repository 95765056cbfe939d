//! Parameter sweeps over the cartesian product of scenario axes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use byzmatch_core::analysis::run_instance;
use byzmatch_core::scenario::{ByzantineSpec, GraphSpec, InitialSpec, DEFAULT_MAX_STEPS, DEFAULT_RADIUS, FORMAT_VERSION};
use byzmatch_core::{AdversaryStrategy, DaemonPolicy, DaemonSpec, NodeId, Protocol, RunSummary, Scenario};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::output::{write_atomic, write_json};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepInitial {
    /// Random configuration seeded by the cell's seed.
    #[default]
    Random,
    AllNull,
}

fn default_strategies() -> Vec<AdversaryStrategy> {
    vec![AdversaryStrategy::Dormant]
}
fn default_byzantine() -> Vec<Vec<NodeId>> {
    vec![Vec::new()]
}
fn default_seeds() -> Vec<u64> {
    vec![0]
}
fn default_periods() -> Vec<u64> {
    vec![2]
}
fn default_protocols() -> Vec<Protocol> {
    vec![Protocol::Ssmm]
}
fn default_daemons() -> Vec<DaemonPolicy> {
    vec![DaemonPolicy::RoundRobinAge]
}
fn default_max_steps() -> u64 {
    DEFAULT_MAX_STEPS
}
fn default_radius() -> u32 {
    DEFAULT_RADIUS
}

/// Sweep file: every axis is a list, and cells are their cartesian product.
/// A cell's seed replaces the seed of a random initial configuration, a
/// `seeded-random-fair` daemon and a `random-state` adversary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub format: u32,
    pub graphs: Vec<GraphSpec>,
    #[serde(default = "default_byzantine")]
    pub byzantine: Vec<Vec<NodeId>>,
    #[serde(default = "default_strategies")]
    pub strategies: Vec<AdversaryStrategy>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_periods")]
    pub byz_periods: Vec<u64>,
    #[serde(default = "default_protocols")]
    pub protocols: Vec<Protocol>,
    #[serde(default = "default_daemons")]
    pub daemons: Vec<DaemonPolicy>,
    #[serde(default)]
    pub initial: SweepInitial,
    #[serde(default = "default_max_steps")]
    pub max_steps: u64,
    #[serde(default = "default_radius")]
    pub radius: u32,
}

impl SweepSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let spec: SweepSpec =
            serde_json::from_str(&text).with_context(|| format!("malformed sweep spec {}", path.display()))?;
        if spec.format != FORMAT_VERSION {
            bail!("field `format`: unsupported version {} (expected {FORMAT_VERSION})", spec.format);
        }
        Ok(spec)
    }

    /// Every cell in a fixed order: graph, byzantine set, strategy, seed,
    /// period, protocol, daemon.
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for graph in &self.graphs {
            for byz in &self.byzantine {
                for strategy in &self.strategies {
                    for &seed in &self.seeds {
                        for &byz_period in &self.byz_periods {
                            for &protocol in &self.protocols {
                                for daemon in &self.daemons {
                                    cells.push(Cell {
                                        id: cells.len(),
                                        graph: graph.clone(),
                                        byzantine: byz.clone(),
                                        strategy: strategy.clone(),
                                        seed,
                                        byz_period,
                                        protocol,
                                        daemon: daemon.clone(),
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        cells
    }

    fn scenario(&self, cell: &Cell, base: Option<&Path>) -> Scenario {
        let mut graph = cell.graph.clone();
        if let (GraphSpec::File { path }, Some(dir)) = (&mut graph, base) {
            if path.is_relative() {
                *path = dir.join(&*path);
            }
        }
        let mut s = Scenario::new(graph);
        s.name = Some(format!("cell-{}", cell.id));
        s.initial = match self.initial {
            SweepInitial::Random => InitialSpec::Random(cell.seed),
            SweepInitial::AllNull => InitialSpec::AllNull,
        };
        let mut strategy = cell.strategy.clone();
        if let AdversaryStrategy::RandomState { seed } = &mut strategy {
            *seed = cell.seed;
        }
        s.byzantine = ByzantineSpec {
            nodes: cell.byzantine.clone(),
            strategy,
        };
        let mut policy = cell.daemon.clone();
        if let DaemonPolicy::SeededRandomFair { seed } = &mut policy {
            *seed = cell.seed;
        }
        s.daemon = DaemonSpec::new(policy, cell.byz_period);
        s.protocol = cell.protocol;
        s.max_steps = self.max_steps;
        s.radius = self.radius;
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    pub id: usize,
    pub graph: GraphSpec,
    pub byzantine: Vec<NodeId>,
    pub strategy: AdversaryStrategy,
    pub seed: u64,
    pub byz_period: u64,
    pub protocol: Protocol,
    pub daemon: DaemonPolicy,
}

/// One CSV row per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub cell: usize,
    pub graph: String,
    pub byzantine: String,
    pub strategy: String,
    pub seed: u64,
    pub byz_period: u64,
    pub protocol: String,
    pub daemon: String,
    pub status: String,
    pub converged: Option<bool>,
    pub convergence_step: Option<u64>,
    pub steps: Option<u64>,
    pub potential_primary: Option<u32>,
    pub potential_secondary: Option<u32>,
    pub potential_increases: Option<usize>,
    pub matching_size: Option<usize>,
    pub maximal: Option<bool>,
    pub contained_r2: Option<bool>,
    pub rule_m: Option<u64>,
    pub rule_s: Option<u64>,
    pub rule_a: Option<u64>,
    pub byz_actions: Option<u64>,
    pub error: String,
}

impl Row {
    fn new(cell: &Cell) -> Self {
        Row {
            cell: cell.id,
            graph: cell.graph.label(),
            byzantine: cell.byzantine.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "),
            strategy: cell.strategy.label(),
            seed: cell.seed,
            byz_period: cell.byz_period,
            protocol: cell.protocol.to_string(),
            daemon: cell.daemon.label(),
            status: "error".into(),
            converged: None,
            convergence_step: None,
            steps: None,
            potential_primary: None,
            potential_secondary: None,
            potential_increases: None,
            matching_size: None,
            maximal: None,
            contained_r2: None,
            rule_m: None,
            rule_s: None,
            rule_a: None,
            byz_actions: None,
            error: String::new(),
        }
    }

    fn fill(&mut self, s: &RunSummary) {
        self.status = "ok".into();
        self.converged = Some(s.convergence_step.is_some());
        self.convergence_step = s.convergence_step;
        self.steps = Some(s.steps);
        self.potential_primary = Some(s.final_potential.primary);
        self.potential_secondary = Some(s.final_potential.secondary);
        self.potential_increases = Some(s.potential_increases);
        self.matching_size = Some(s.matching.len());
        self.maximal = Some(s.maximal);
        self.contained_r2 = s.containment_at(2).map(|c| c.contained_from_step.is_some());
        self.rule_m = Some(s.rule_fires.m);
        self.rule_s = Some(s.rule_fires.s);
        self.rule_a = Some(s.rule_fires.a);
        self.byz_actions = Some(s.byz_actions);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub cells: usize,
    pub errors: usize,
    pub converged: usize,
    pub max_convergence_step: Option<u64>,
    pub median_convergence_step: Option<f64>,
}

impl GroupStats {
    fn of<'a>(rows: impl Iterator<Item = &'a Row>) -> Self {
        let rows: Vec<&Row> = rows.collect();
        let mut steps: Vec<u64> = rows.iter().filter_map(|r| r.convergence_step).collect();
        steps.sort_unstable();
        let median = match steps.len() {
            0 => None,
            n if n % 2 == 1 => Some(steps[n / 2] as f64),
            n => Some((steps[n / 2 - 1] + steps[n / 2]) as f64 / 2.0),
        };
        GroupStats {
            cells: rows.len(),
            errors: rows.iter().filter(|r| r.status != "ok").count(),
            converged: steps.len(),
            max_convergence_step: steps.last().copied(),
            median_convergence_step: median,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub overall: GroupStats,
    /// Keyed by `graph/protocol/strategy/daemon`.
    pub groups: BTreeMap<String, GroupStats>,
}

impl Aggregate {
    pub fn of(rows: &[Row]) -> Self {
        let mut keys: BTreeMap<String, Vec<&Row>> = BTreeMap::new();
        for r in rows {
            keys.entry(format!("{}/{}/{}/{}", r.graph, r.protocol, r.strategy, r.daemon))
                .or_default()
                .push(r);
        }
        Aggregate {
            overall: GroupStats::of(rows.iter()),
            groups: keys.into_iter().map(|(k, v)| (k, GroupStats::of(v.into_iter()))).collect(),
        }
    }
}

fn run_cell(spec: &SweepSpec, cell: &Cell, base: Option<&Path>, out: &Path) -> Row {
    let mut row = Row::new(cell);
    let scenario = spec.scenario(cell, base);
    let result = scenario
        .resolve(None)
        .map_err(anyhow::Error::from)
        .and_then(|inst| Ok(run_instance(&inst)?));
    match result {
        Ok((_, summary)) => {
            row.fill(&summary);
            let record = serde_json::json!({ "scenario": scenario, "summary": summary });
            if let Err(e) = write_json(&out.join("cells").join(format!("{:05}.json", cell.id)), &record) {
                row.status = "error".into();
                row.error = format!("{e:#}");
            }
        }
        Err(e) => row.error = format!("{e:#}"),
    }
    row
}

pub struct SweepResult {
    pub rows: Vec<Row>,
    pub aggregate: Aggregate,
    pub out: PathBuf,
}

/// Runs every cell, in parallel on `jobs` threads, and writes `sweep.csv`,
/// `sweep.jsonl`, `aggregate.json` and one `cells/NNNNN.json` per cell.
/// A failing cell is recorded as an error row and does not stop the sweep.
pub fn cmd_sweep(spec_path: &Path, out: &Path, jobs: Option<usize>) -> Result<SweepResult> {
    let spec = SweepSpec::load(spec_path)?;
    let base = spec_path.parent().map(Path::to_path_buf);
    let cells = spec.cells();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder.build()?;
    let rows: Vec<Row> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| run_cell(&spec, cell, base.as_deref(), out))
            .collect()
    });

    let mut csv_out = csv::Writer::from_writer(Vec::new());
    let mut jsonl = String::new();
    for row in &rows {
        csv_out.serialize(row)?;
        jsonl.push_str(&serde_json::to_string(row)?);
        jsonl.push('\n');
    }
    write_atomic(&out.join("sweep.csv"), &csv_out.into_inner()?)?;
    write_atomic(&out.join("sweep.jsonl"), jsonl.as_bytes())?;
    let aggregate = Aggregate::of(&rows);
    write_json(&out.join("aggregate.json"), &aggregate)?;
    Ok(SweepResult {
        rows,
        aggregate,
        out: out.to_path_buf(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_count_is_the_axis_product() {
        let spec: SweepSpec = serde_json::from_str(
            r#"{"format":1,"graphs":[{"kind":"path","n":5}],"byzantine":[[0]],
                "strategies":[{"kind":"dormant"},{"kind":"divorcer"},{"kind":"oscillator"}],
                "seeds":[0,1,2,3,4,5,6,7,8,9]}"#,
        )
        .unwrap();
        assert_eq!(spec.cells().len(), 30);
    }

    #[test]
    fn median_of_even_count() {
        let mut rows = Vec::new();
        for (i, step) in [4u64, 1, 3, 2].into_iter().enumerate() {
            let cell = Cell {
                id: i,
                graph: GraphSpec::Path { n: 2 },
                byzantine: vec![],
                strategy: AdversaryStrategy::Dormant,
                seed: 0,
                byz_period: 2,
                protocol: Protocol::Ssmm,
                daemon: DaemonPolicy::RoundRobinAge,
            };
            let mut r = Row::new(&cell);
            r.status = "ok".into();
            r.convergence_step = Some(step);
            rows.push(r);
        }
        let agg = Aggregate::of(&rows);
        assert_eq!(agg.overall.max_convergence_step, Some(4));
        assert_eq!(agg.overall.median_convergence_step, Some(2.5));
    }
}
