//! Bounded exhaustive verification on small graphs.
//!
//! Every check enumerates the complete configuration space of a topology
//! (the product of per-node state domains) and is parallelized over
//! configuration indices. Partial results merge associatively and
//! counterexamples are ordered by configuration index, so reports do not
//! depend on how the work was split.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::AdversaryStrategy;
use crate::analysis::matching::{brute_force, extract_matching, marriage_subset};
use crate::analysis::potential::{potential_over, VARIANT_RADIUS};
use crate::analysis::simulation::{run_simulation, RunOptions, SimulationError};
use crate::protocol::{
    classify, enabled_rules, is_married, pref_node, spec, Configuration, NodeState, Predicate, Protocol, Rule,
};
use crate::scenario::{ByzantineSpec, GraphSpec, InitialSpec, Instance, Scenario};
use crate::schedulers::{fairness_audit, DaemonSpec};
use crate::topology::{NodeId, NodeSet, Topology};
use crate::trace::{StepKind, TraceEvent};

/// Largest configuration space the checker will enumerate by default.
pub const DEFAULT_BUDGET: u64 = 10_000_000;
/// Counterexamples kept per report.
pub const MAX_COUNTEREXAMPLES: usize = 5;

#[derive(Debug, Error)]
pub enum ModelCheckError {
    #[error("state space has {count} configurations, over the budget of {budget}")]
    OverBudget { count: u128, budget: u64 },
    #[error(transparent)]
    Simulation(#[from] SimulationError),
}

/// The full configuration space of a topology, indexed in mixed radix with
/// node 0 most significant.
#[derive(Debug, Clone)]
pub struct StateSpace {
    topology: Topology,
    domains: Vec<usize>,
    total: u64,
}

impl StateSpace {
    /// Closed-form size: the product over nodes of `(deg + 1) · deg`.
    pub fn size(t: &Topology) -> u128 {
        t.nodes()
            .map(|v| NodeState::domain_size(t.degree(v)) as u128)
            .fold(1u128, |acc, d| acc.saturating_mul(d))
    }

    pub fn new(t: &Topology, budget: u64) -> Result<Self, ModelCheckError> {
        let count = Self::size(t);
        if count > u128::from(budget) {
            return Err(ModelCheckError::OverBudget { count, budget });
        }
        Ok(Self {
            topology: t.clone(),
            domains: t.nodes().map(|v| NodeState::domain_size(t.degree(v))).collect(),
            total: count as u64,
        })
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn len(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    fn decode_state(&self, v: NodeId, s: usize) -> NodeState {
        let deg = self.topology.degree(v);
        let p = s / deg;
        NodeState {
            pref: (p > 0).then(|| crate::topology::Port(p - 1)),
            old_pref: crate::topology::Port(s % deg),
        }
    }

    fn encode_state(&self, v: NodeId, state: NodeState) -> usize {
        let deg = self.topology.degree(v);
        state.pref.map_or(0, |p| p.0 + 1) * deg + state.old_pref.0
    }

    pub fn config_at(&self, mut index: u64) -> Configuration {
        let mut states = vec![NodeState::null(); self.domains.len()];
        for v in (0..self.domains.len()).rev() {
            let d = self.domains[v] as u64;
            states[v] = self.decode_state(v, (index % d) as usize);
            index /= d;
        }
        Configuration(states)
    }

    pub fn index_of(&self, cfg: &Configuration) -> u64 {
        cfg.0
            .iter()
            .enumerate()
            .fold(0u64, |acc, (v, &s)| acc * self.domains[v] as u64 + self.encode_state(v, s) as u64)
    }

    /// All configurations in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = Configuration> + '_ {
        (0..self.total).map(|i| self.config_at(i))
    }
}

/// Lexicographic enumeration of every valid configuration.
pub fn enumerate_configs(t: &Topology, budget: u64) -> Result<impl Iterator<Item = Configuration>, ModelCheckError> {
    let space = StateSpace::new(t, budget)?;
    Ok((0..space.len()).map(move |i| space.config_at(i)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_index: Option<u64>,
    pub configuration: Configuration,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node: Option<NodeId>,
    pub detail: String,
    /// Scenario reproducing the failure under `run`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Scenario>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace_prefix: Vec<TraceEvent>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckReport {
    pub property: String,
    pub graph: String,
    pub byzantine: NodeSet,
    /// Configurations in the enumerated universe.
    pub universe: u64,
    /// Individual obligations discharged (transitions, runs, …).
    pub checked: u64,
    pub failures: u64,
    pub passed: bool,
    pub counterexamples: Vec<Counterexample>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_convergence_steps: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl CheckReport {
    fn from_tally(property: &str, t: &Topology, byz: &NodeSet, universe: u64, tally: Tally) -> Self {
        Self {
            property: property.to_owned(),
            graph: graph_label(t),
            byzantine: byz.clone(),
            universe,
            checked: tally.checked,
            failures: tally.failures,
            passed: tally.failures == 0,
            counterexamples: tally.examples,
            max_convergence_steps: None,
            notes: Vec::new(),
        }
    }

    /// One-line human-readable rendering.
    pub fn line(&self) -> String {
        let byz = if self.byzantine.is_empty() {
            "none".to_owned()
        } else {
            format!("{:?}", self.byzantine.to_vec())
        };
        let mut s = format!(
            "{:<12} {:<5} graph={} byz={} universe={} checked={} failures={}",
            self.property,
            if self.passed { "PASS" } else { "FAIL" },
            self.graph,
            byz,
            self.universe,
            self.checked,
            self.failures
        );
        if let Some(m) = self.max_convergence_steps {
            s.push_str(&format!(" max_steps={m}"));
        }
        s
    }
}

fn graph_label(t: &Topology) -> String {
    format!("n{}m{}", t.node_count(), t.edge_count())
}

/// Mergeable partial result.
#[derive(Debug, Default)]
struct Tally {
    checked: u64,
    failures: u64,
    examples: Vec<Counterexample>,
}

impl Tally {
    fn fail(&mut self, example: Counterexample) {
        self.failures += 1;
        if self.examples.len() < MAX_COUNTEREXAMPLES {
            self.examples.push(example);
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.checked += other.checked;
        self.failures += other.failures;
        self.examples.extend(other.examples);
        self.examples.sort_by_key(|e| e.config_index);
        self.examples.truncate(MAX_COUNTEREXAMPLES);
        self
    }
}

fn par_tally<F>(space: &StateSpace, check: F) -> Tally
where
    F: Fn(u64, &Configuration, &mut Tally) + Sync,
{
    (0..space.len())
        .into_par_iter()
        .fold(Tally::default, |mut acc, i| {
            let cfg = space.config_at(i);
            check(i, &cfg, &mut acc);
            acc
        })
        .reduce(Tally::default, Tally::merge)
}

/// Shared per-check precomputation.
struct Frame<'a> {
    t: &'a Topology,
    honest2: Vec<NodeId>,
    honest: Vec<NodeId>,
}

impl<'a> Frame<'a> {
    fn new(t: &'a Topology, byz: &NodeSet) -> Self {
        Self {
            t,
            honest2: t.c_honest_set(byz, VARIANT_RADIUS).to_vec(),
            honest: t.nodes().filter(|&v| !byz.contains(v)).collect(),
        }
    }

    fn lc2(&self, cfg: &Configuration) -> bool {
        self.honest2.iter().all(|&v| spec(self.t, cfg, v))
    }

    fn potential(&self, cfg: &Configuration) -> crate::analysis::Potential {
        potential_over(self.t, cfg, self.honest2.iter().copied())
    }

    fn step_event(&self, step: u64, v: NodeId, kind: StepKind, rule: Option<Rule>, next: &Configuration) -> TraceEvent {
        TraceEvent {
            step,
            actor: Some(v),
            kind,
            rule,
            new_state: Some(next.state(v)),
            predicates: crate::protocol::classify_all(self.t, next),
            potential: self.potential(next),
            in_lc2: self.lc2(next),
        }
    }
}

/// Exactly one of the five local predicates holds at every node, with each
/// predicate evaluated straight from its definition rather than through
/// [`classify`], and the winner agrees with `classify`.
pub fn check_partition(t: &Topology, budget: u64) -> Result<CheckReport, ModelCheckError> {
    let space = StateSpace::new(t, budget)?;
    let tally = par_tally(&space, |i, cfg, acc| {
        for v in t.nodes() {
            acc.checked += 1;
            if let Err(detail) = partition_holds(t, cfg, v) {
                acc.fail(Counterexample {
                    config_index: Some(i),
                    configuration: cfg.clone(),
                    node: Some(v),
                    detail,
                    scenario: None,
                    trace_prefix: Vec::new(),
                });
            }
        }
    });
    Ok(CheckReport::from_tally("partition", t, &NodeSet::new(), space.len(), tally))
}

/// Evaluates the five defining formulas independently and checks that exactly
/// one holds and that it matches [`classify`].
pub fn partition_holds(t: &Topology, cfg: &Configuration, v: NodeId) -> Result<(), String> {
    let pref = pref_node(t, cfg, v);
    let partner_pref = pref.map(|u| pref_node(t, cfg, u));
    let proposing = matches!(partner_pref, Some(None));
    let married = matches!(partner_pref, Some(Some(w)) if w == v);
    let doomed = matches!(partner_pref, Some(Some(w)) if w != v);
    let all_married = t.neighbors(v).iter().all(|&u| is_married(t, cfg, u));
    let dead = pref.is_none() && all_married;
    let single = pref.is_none() && t.neighbors(v).iter().any(|&u| !is_married(t, cfg, u));
    let holding: Vec<Predicate> = [
        (proposing, Predicate::Proposing),
        (married, Predicate::Married),
        (doomed, Predicate::Doomed),
        (dead, Predicate::Dead),
        (single, Predicate::Single),
    ]
    .into_iter()
    .filter_map(|(h, p)| h.then_some(p))
    .collect();
    match holding.as_slice() {
        [p] if *p == classify(t, cfg, v) => Ok(()),
        [p] => Err(format!("definitions give {p:?}, classify gives {:?}", classify(t, cfg, v))),
        other => Err(format!("{} predicates hold: {other:?}", other.len())),
    }
}

/// From every configuration outside LC₂, every enabled move of a 2-honest
/// node strictly decreases the potential.
pub fn check_lemma6(t: &Topology, byz: &NodeSet, protocol: Protocol, budget: u64) -> Result<CheckReport, ModelCheckError> {
    let space = StateSpace::new(t, budget)?;
    let frame = Frame::new(t, byz);
    let tally = par_tally(&space, |i, cfg, acc| {
        if frame.lc2(cfg) {
            return;
        }
        let before = frame.potential(cfg);
        for &v in &frame.honest2 {
            for rule in enabled_rules(t, cfg, v).iter() {
                acc.checked += 1;
                let next = protocol.apply(t, cfg, v, rule).expect("rule is enabled");
                let after = frame.potential(&next);
                if after >= before {
                    acc.fail(Counterexample {
                        config_index: Some(i),
                        configuration: cfg.clone(),
                        node: Some(v),
                        detail: format!("rule {rule} at node {v}: potential {before} -> {after}"),
                        scenario: None,
                        trace_prefix: vec![frame.step_event(0, v, StepKind::Rule, Some(rule), &next)],
                    });
                }
            }
        }
    });
    let mut report = CheckReport::from_tally("lemma6", t, byz, space.len(), tally);
    report.notes.push(format!("protocol={protocol}"));
    Ok(report)
}

/// Closure of LC₂. In every LC₂ configuration: no 2-honest node is enabled;
/// every state a Byzantine node could adopt keeps every 2-honest node
/// legitimate with unchanged `pref`; and so does every enabled honest move
/// outside the 2-honest set.
pub fn check_closure(t: &Topology, byz: &NodeSet, protocol: Protocol, budget: u64) -> Result<CheckReport, ModelCheckError> {
    let space = StateSpace::new(t, budget)?;
    let frame = Frame::new(t, byz);
    let in_v2 = NodeSet::from_iter(frame.honest2.iter().copied()).mask(t.node_count());

    let preserved = |before: &Configuration, after: &Configuration| -> Option<NodeId> {
        frame
            .honest2
            .iter()
            .copied()
            .find(|&v| !spec(t, after, v) || after.state(v).pref != before.state(v).pref)
    };

    let tally = par_tally(&space, |i, cfg, acc| {
        if !frame.lc2(cfg) {
            return;
        }
        let cx = |node, detail: String, prefix: Vec<TraceEvent>| Counterexample {
            config_index: Some(i),
            configuration: cfg.clone(),
            node: Some(node),
            detail,
            scenario: None,
            trace_prefix: prefix,
        };
        for &v in &frame.honest2 {
            acc.checked += 1;
            let rules = enabled_rules(t, cfg, v);
            if !rules.is_empty() {
                acc.fail(cx(v, format!("2-honest node {v} enabled ({:?}) in LC2", rules.single()), Vec::new()));
            }
        }
        for b in byz.iter() {
            for state in NodeState::all(t.degree(b)) {
                acc.checked += 1;
                let mut next = cfg.clone();
                next.set(b, state);
                if let Some(v) = preserved(cfg, &next) {
                    let event = frame.step_event(0, b, StepKind::Byz, None, &next);
                    acc.fail(cx(v, format!("byzantine {b} -> {state} breaks node {v}"), vec![event]));
                }
            }
        }
        for &v in frame.honest.iter().filter(|&&v| !in_v2[v]) {
            for rule in enabled_rules(t, cfg, v).iter() {
                acc.checked += 1;
                let next = protocol.apply(t, cfg, v, rule).expect("rule is enabled");
                if let Some(w) = preserved(cfg, &next) {
                    let event = frame.step_event(0, v, StepKind::Rule, Some(rule), &next);
                    acc.fail(cx(w, format!("rule {rule} at node {v} breaks node {w}"), vec![event]));
                }
            }
        }
    });
    let lc2 = (0..space.len())
        .into_par_iter()
        .filter(|&i| frame.lc2(&space.config_at(i)))
        .count();
    let mut report = CheckReport::from_tally("closure", t, byz, space.len(), tally);
    report.notes.push(format!("lc2_configurations={lc2}"));
    report.notes.push(format!("protocol={protocol}"));
    Ok(report)
}

/// The potential is zero exactly on LC₂.
pub fn check_lemma5(t: &Topology, byz: &NodeSet, budget: u64) -> Result<CheckReport, ModelCheckError> {
    let space = StateSpace::new(t, budget)?;
    let frame = Frame::new(t, byz);
    let tally = par_tally(&space, |i, cfg, acc| {
        acc.checked += 1;
        let zero = frame.potential(cfg).is_zero();
        let legit = frame.lc2(cfg);
        if zero != legit {
            acc.fail(Counterexample {
                config_index: Some(i),
                configuration: cfg.clone(),
                node: None,
                detail: format!("potential zero = {zero}, in LC2 = {legit}"),
                scenario: None,
                trace_prefix: Vec::new(),
            });
        }
    });
    Ok(CheckReport::from_tally("lemma5", t, byz, space.len(), tally))
}

/// Outcome of one convergence run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvergenceRun {
    pub config_index: u64,
    pub strategy: usize,
    pub convergence_step: Option<u64>,
    pub potential_increases: usize,
    pub final_configuration: Configuration,
    pub fairness_violations: usize,
}

/// Every run of a daemon policy from every initial configuration against
/// every adversary strategy.
#[derive(Debug, Clone)]
pub struct ConvergenceSweep {
    pub topology: Topology,
    pub byzantine: NodeSet,
    pub daemon: DaemonSpec,
    pub strategies: Vec<AdversaryStrategy>,
    pub protocol: Protocol,
    pub step_budget: u64,
    pub universe: u64,
    pub runs: Vec<ConvergenceRun>,
}

impl ConvergenceSweep {
    /// Runs the sweep, stopping each run at LC₂ entry. With no Byzantine node
    /// the strategy list collapses to `Dormant`; otherwise `Dormant` is always
    /// included.
    pub fn run(
        t: &Topology,
        byz: &NodeSet,
        daemon: &DaemonSpec,
        strategies: &[AdversaryStrategy],
        protocol: Protocol,
        step_budget: u64,
        budget: u64,
    ) -> Result<Self, ModelCheckError> {
        Self::run_with(t, byz, daemon, strategies, protocol, step_budget, true, budget)
    }

    /// As [`ConvergenceSweep::run`]; with `stop_at_lc2` false every run lasts
    /// the full step budget.
    #[allow(clippy::too_many_arguments)]
    pub fn run_with(
        t: &Topology,
        byz: &NodeSet,
        daemon: &DaemonSpec,
        strategies: &[AdversaryStrategy],
        protocol: Protocol,
        step_budget: u64,
        stop_at_lc2: bool,
        budget: u64,
    ) -> Result<Self, ModelCheckError> {
        let space = StateSpace::new(t, budget)?;
        let mut strategies_used = vec![AdversaryStrategy::Dormant];
        if !byz.is_empty() {
            for s in strategies {
                if !strategies_used.contains(s) {
                    strategies_used.push(s.clone());
                }
            }
        }
        let mut sweep = Self {
            topology: t.clone(),
            byzantine: byz.clone(),
            daemon: daemon.clone(),
            strategies: strategies_used,
            protocol,
            step_budget,
            universe: space.len(),
            runs: Vec::new(),
        };
        let jobs: Vec<(u64, usize)> = (0..space.len())
            .flat_map(|i| (0..sweep.strategies.len()).map(move |s| (i, s)))
            .collect();
        let runs: Result<Vec<_>, SimulationError> = jobs
            .into_par_iter()
            .map(|(i, s)| {
                let inst = sweep.instance(space.config_at(i), s);
                let (trace, summary) = run_simulation(
                    &inst,
                    RunOptions {
                        max_steps: step_budget,
                        stop_at_lc2,
                    },
                )?;
                Ok(ConvergenceRun {
                    config_index: i,
                    strategy: s,
                    convergence_step: summary.convergence_step,
                    potential_increases: summary.potential_increases,
                    final_configuration: trace.final_configuration(),
                    fairness_violations: fairness_audit(&trace, t, byz).violations.len(),
                })
            })
            .collect();
        sweep.runs = runs?;
        Ok(sweep)
    }

    fn instance(&self, initial: Configuration, strategy: usize) -> Instance {
        Instance {
            name: None,
            topology: self.topology.clone(),
            byzantine: self.byzantine.clone(),
            strategy: self.strategies[strategy].clone(),
            daemon: self.daemon.clone(),
            protocol: self.protocol,
            initial,
            max_steps: self.step_budget,
            radius: VARIANT_RADIUS,
        }
    }

    /// A scenario file that replays `run` bit-exactly.
    pub fn scenario_for(&self, run: &ConvergenceRun) -> Scenario {
        let space = StateSpace::new(&self.topology, u64::MAX).expect("space was enumerable");
        let mut s = Scenario::new(GraphSpec::inline(&self.topology));
        s.initial = InitialSpec::Explicit(space.config_at(run.config_index).0);
        s.byzantine = ByzantineSpec {
            nodes: self.byzantine.to_vec(),
            strategy: self.strategies[run.strategy].clone(),
        };
        s.daemon = self.daemon.clone();
        s.protocol = self.protocol;
        s.max_steps = self.step_budget;
        s
    }

    fn report(&self, property: &str, checked: u64, failing: Vec<(&ConvergenceRun, String)>) -> CheckReport {
        let space = StateSpace::new(&self.topology, u64::MAX).expect("space was enumerable");
        let failures = failing.len() as u64;
        let counterexamples = failing
            .into_iter()
            .take(MAX_COUNTEREXAMPLES)
            .map(|(run, detail)| Counterexample {
                config_index: Some(run.config_index),
                configuration: space.config_at(run.config_index),
                node: None,
                detail: format!("{detail} [{}]", self.strategies[run.strategy].label()),
                scenario: Some(self.scenario_for(run)),
                trace_prefix: Vec::new(),
            })
            .collect();
        CheckReport {
            property: property.to_owned(),
            graph: graph_label(&self.topology),
            byzantine: self.byzantine.clone(),
            universe: self.universe,
            checked,
            failures,
            passed: failures == 0,
            counterexamples,
            max_convergence_steps: None,
            notes: vec![
                format!("daemon={}", self.daemon.policy.label()),
                format!("byz_period={}", self.daemon.byz_period),
                format!(
                    "strategies={}",
                    self.strategies.iter().map(|s| s.label()).collect::<Vec<_>>().join(",")
                ),
                format!("step_budget={}", self.step_budget),
            ],
        }
    }

    /// Every run reached LC₂ within the step budget.
    pub fn convergence_report(&self) -> CheckReport {
        let failing = self
            .runs
            .iter()
            .filter(|r| r.convergence_step.is_none())
            .map(|r| (r, format!("no LC2 entry within {} steps", self.step_budget)))
            .collect();
        let mut report = self.report("convergence", self.runs.len() as u64, failing);
        report.max_convergence_steps = self.runs.iter().filter_map(|r| r.convergence_step).max();
        report
    }

    /// At every reached LC₂ configuration, the pairs extracted from the
    /// radius-2 marriage subset form a maximal matching of that subset
    /// according to the brute-force enumerator.
    pub fn lemma1_report(&self) -> CheckReport {
        let t = &self.topology;
        let converged: Vec<&ConvergenceRun> = self.runs.iter().filter(|r| r.convergence_step.is_some()).collect();
        let failing = converged
            .iter()
            .filter_map(|r| {
                let cfg = &r.final_configuration;
                let subset = marriage_subset(t, cfg, &self.byzantine, VARIANT_RADIUS);
                let matching = extract_matching(t, cfg, &subset);
                match brute_force::is_maximal_matching(t, &subset, &matching) {
                    Some(true) => None,
                    Some(false) => Some((*r, format!("matching {matching:?} not maximal on {:?}", subset.to_vec()))),
                    None => Some((*r, "subset too large for the brute-force oracle".to_owned())),
                }
            })
            .collect();
        self.report("lemma1", converged.len() as u64, failing)
    }

    /// Strict potential increases per run never exceed `|V₁ \ V₂|`.
    pub fn lemma7_report(&self) -> CheckReport {
        let bound = self
            .topology
            .c_honest_set(&self.byzantine, 1)
            .difference(&self.topology.c_honest_set(&self.byzantine, 2))
            .len();
        let failing = self
            .runs
            .iter()
            .filter(|r| r.potential_increases > bound)
            .map(|r| (r, format!("{} increases, bound {bound}", r.potential_increases)))
            .collect();
        let mut report = self.report("lemma7", self.runs.len() as u64, failing);
        report.notes.push(format!("bound={bound}"));
        report.notes.push(format!(
            "max_increases={}",
            self.runs.iter().map(|r| r.potential_increases).max().unwrap_or(0)
        ));
        report
    }

    /// Every run passed the post-hoc fairness audit.
    pub fn fairness_report(&self) -> CheckReport {
        let failing = self
            .runs
            .iter()
            .filter(|r| r.fairness_violations > 0)
            .map(|r| (r, format!("{} starved nodes", r.fairness_violations)))
            .collect();
        self.report("fairness", self.runs.len() as u64, failing)
    }
}

/// Runs `daemon` from every initial configuration against Dormant plus each
/// given strategy, requiring LC₂ entry within `step_budget` steps.
pub fn check_convergence_all(
    t: &Topology,
    byz: &NodeSet,
    daemon: &DaemonSpec,
    strategies: &[AdversaryStrategy],
    protocol: Protocol,
    step_budget: u64,
    budget: u64,
) -> Result<CheckReport, ModelCheckError> {
    Ok(ConvergenceSweep::run(t, byz, daemon, strategies, protocol, step_budget, budget)?.convergence_report())
}

/// Replays the radius-1 impossibility scenario against `protocol`: a path of
/// five nodes with 0 = 1 and 3 = 4 married, node 2 dead, and a divorcing
/// Byzantine node 0. Passes when the demonstration goes through: the start is
/// legitimate at radius 1, node 2 becomes single after the first Byzantine
/// step, and nodes 3 and 4 stay legitimate with unchanged prefs for the whole
/// run.
pub fn theorem2_replay_with(protocol: Protocol) -> CheckReport {
    let mut scenario = Scenario::builtin("theorem2").expect("built-in exists");
    scenario.protocol = protocol;
    let inst = scenario.resolve(None).expect("built-in resolves");
    let t = &inst.topology;
    let byz = &inst.byzantine;
    let (trace, summary) = crate::analysis::run_instance(&inst).expect("built-in runs");

    let mut notes = Vec::new();
    let mut failures = Vec::new();
    let mut expect = |ok: bool, what: String| {
        notes.push(format!("{} {what}", if ok { "ok:" } else { "FAILED:" }));
        if !ok {
            failures.push(what);
        }
    };

    let initial_lc1 = crate::protocol::in_lc(t, &inst.initial, byz, 1);
    expect(initial_lc1, "initial configuration in LC1".into());
    let c2 = classify(t, &inst.initial, 2);
    expect(c2 == Predicate::Dead, format!("node 2 initially {c2:?} (expected Dead)"));

    match trace.events.iter().position(|e| e.kind == StepKind::Byz) {
        Some(i) => {
            let after = &trace.events[i].predicates;
            expect(
                after[1] == Predicate::Proposing,
                format!("after first byzantine step node 1 is {:?} (expected Proposing)", after[1]),
            );
            expect(
                after[2] == Predicate::Single,
                format!("after first byzantine step node 2 is {:?} (expected Single)", after[2]),
            );
        }
        None => expect(false, "no byzantine step in trace".into()),
    }
    let r1 = summary.containment_at(1).expect("radius 1 monitored");
    expect(
        r1.violations.iter().any(|v| v.node == 2),
        "radius-1 containment violated at node 2".into(),
    );
    let r2 = summary.containment_at(2).expect("radius 2 monitored");
    expect(
        r2.nodes == NodeSet::from([3, 4]) && r2.contained_throughout(),
        format!(
            "radius-2 nodes {:?} contained for all {} configurations",
            r2.nodes.to_vec(),
            r2.horizon
        ),
    );

    let counterexamples = failures
        .iter()
        .map(|detail| Counterexample {
            config_index: None,
            configuration: inst.initial.clone(),
            node: None,
            detail: detail.clone(),
            scenario: Some(scenario.clone()),
            trace_prefix: trace.events.iter().take(4).cloned().collect(),
        })
        .collect();
    notes.push(format!("protocol={protocol}"));
    CheckReport {
        property: "theorem2".into(),
        graph: graph_label(t),
        byzantine: byz.clone(),
        universe: 1,
        checked: 6,
        failures: failures.len() as u64,
        passed: failures.is_empty(),
        counterexamples,
        max_convergence_steps: None,
        notes,
    }
}

pub fn theorem2_replay() -> CheckReport {
    theorem2_replay_with(Protocol::Ssmm)
}
