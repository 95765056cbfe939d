//! The daemon / protocol / adversary loop.

use serde::{Deserialize, Serialize};

use super::containment::{containment_monitor, ContainmentVerdict};
use super::matching::{extract_matching, is_maximal_matching, marriage_subset, Edge};
use super::potential::{count_increases, potential_over, Potential, VARIANT_RADIUS};
use crate::adversary::{Adversary, AdversaryError};
use crate::protocol::{classify_all, enabled_rules, in_lc, spec, Predicate, Rule};
use crate::scenario::Instance;
use crate::schedulers::{Actor, Daemon, DaemonError, StepContext};
use crate::topology::{NodeId, NodeSet};
use crate::trace::{StepKind, Trace, TraceEvent};

#[derive(Debug, thiserror::Error)]
pub enum SimulationError {
    #[error(transparent)]
    Daemon(#[from] DaemonError),
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub max_steps: u64,
    /// Stop as soon as the 2-honest nodes are all legitimate.
    pub stop_at_lc2: bool,
}

impl RunOptions {
    pub fn steps(max_steps: u64) -> Self {
        Self {
            max_steps,
            stop_at_lc2: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleCounts {
    #[serde(rename = "M")]
    pub m: u64,
    #[serde(rename = "S")]
    pub s: u64,
    #[serde(rename = "A")]
    pub a: u64,
}

impl RuleCounts {
    fn record(&mut self, rule: Rule) {
        match rule {
            Rule::M => self.m += 1,
            Rule::S => self.s += 1,
            Rule::A => self.a += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.m + self.s + self.a
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Legitimacy {
    pub radius: u32,
    pub initial: bool,
    #[serde(rename = "final")]
    pub final_: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSummary {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    pub steps: u64,
    /// Nothing was enabled and there is no adversary.
    pub terminated: bool,
    /// Configuration index of the first entry into LC₂.
    pub convergence_step: Option<u64>,
    pub final_potential: Potential,
    pub potential_series: Vec<Potential>,
    pub potential_increases: usize,
    pub initial_predicates: Vec<Predicate>,
    pub final_predicates: Vec<Predicate>,
    pub legitimacy: Vec<Legitimacy>,
    pub matching_subset: NodeSet,
    pub matching: Vec<Edge>,
    pub maximal: bool,
    pub containment: Vec<ContainmentVerdict>,
    pub rule_fires: RuleCounts,
    pub byz_actions: u64,
}

impl RunSummary {
    pub fn containment_at(&self, radius: u32) -> Option<&ContainmentVerdict> {
        self.containment.iter().find(|c| c.radius == radius)
    }
}

/// Runs an instance for `opts.max_steps` steps (or until termination) and
/// returns the full trace and its summary. Running out of steps before
/// reaching LC₂ is reported through `convergence_step == None`.
pub fn run_simulation(inst: &Instance, opts: RunOptions) -> Result<(Trace, RunSummary), SimulationError> {
    let t = &inst.topology;
    let byz = &inst.byzantine;
    inst.strategy.validate(t, byz)?;
    let mut daemon = Daemon::new(inst.daemon.clone(), t.node_count(), byz)?;
    let mut adversary = Adversary::new(inst.strategy.clone(), t, byz);

    let honest: Vec<NodeId> = t.nodes().filter(|&v| !byz.contains(v)).collect();
    let honest2: Vec<NodeId> = t.c_honest_set(byz, VARIANT_RADIUS).to_vec();
    let lc2 = |cfg: &_| honest2.iter().all(|&v| spec(t, cfg, v));

    let mut cfg = inst.initial.clone();
    let mut trace = Trace::new(cfg.clone());
    let mut series = vec![potential_over(t, &cfg, honest2.iter().copied())];
    let mut convergence_step = lc2(&cfg).then_some(0);
    let mut rule_fires = RuleCounts::default();
    let mut byz_actions = 0;
    let mut terminated = false;
    let mut enabled = Vec::with_capacity(honest.len());

    for step in 0..opts.max_steps {
        if opts.stop_at_lc2 && convergence_step.is_some() {
            break;
        }
        enabled.clear();
        enabled.extend(honest.iter().copied().filter(|&v| !enabled_rules(t, &cfg, v).is_empty()));
        let actor = daemon.next_actor(&StepContext {
            topology: t,
            configuration: &cfg,
            byzantine: byz,
            enabled_honest: &enabled,
            honest2: &honest2,
            protocol: inst.protocol,
        });
        let (kind, actor_node, rule, new_state) = match actor {
            Actor::Honest(v) => {
                let rule = enabled_rules(t, &cfg, v).single().expect("guards are exclusive");
                let state = inst.protocol.fire(t, &cfg, v, rule).expect("daemon picked an enabled node");
                rule_fires.record(rule);
                (StepKind::Rule, Some(v), Some(rule), Some(state))
            }
            Actor::Byzantine(b) => {
                byz_actions += 1;
                (StepKind::Byz, Some(b), None, Some(adversary.act(t, &cfg, b, step)))
            }
            Actor::Quiescent => (StepKind::Quiescent, None, None, None),
        };
        if let (Some(v), Some(s)) = (actor_node, new_state) {
            cfg.set(v, s);
        }
        let potential = potential_over(t, &cfg, honest2.iter().copied());
        let legit = lc2(&cfg);
        series.push(potential);
        trace.events.push(TraceEvent {
            step,
            actor: actor_node,
            kind,
            rule,
            new_state,
            predicates: classify_all(t, &cfg),
            potential,
            in_lc2: legit,
        });
        if legit && convergence_step.is_none() {
            convergence_step = Some(step + 1);
        }
        if kind == StepKind::Quiescent && byz.is_empty() {
            terminated = true;
            break;
        }
    }

    let mut radii = vec![1, VARIANT_RADIUS, inst.radius];
    radii.sort_unstable();
    radii.dedup();
    let legitimacy = radii
        .iter()
        .map(|&radius| Legitimacy {
            radius,
            initial: in_lc(t, &trace.initial, byz, radius),
            final_: in_lc(t, &cfg, byz, radius),
        })
        .collect();
    let containment = radii
        .iter()
        .map(|&r| containment_monitor(&trace, t, byz, r))
        .collect();
    let matching_subset = marriage_subset(t, &cfg, byz, inst.radius);
    let matching = extract_matching(t, &cfg, &matching_subset);
    let maximal = is_maximal_matching(t, &matching_subset, &matching);

    let summary = RunSummary {
        scenario: inst.name.clone(),
        steps: trace.events.len() as u64,
        terminated,
        convergence_step,
        final_potential: *series.last().expect("series is non-empty"),
        potential_increases: count_increases(&series),
        potential_series: series,
        initial_predicates: classify_all(t, &trace.initial),
        final_predicates: classify_all(t, &cfg),
        legitimacy,
        matching_subset,
        matching,
        maximal,
        containment,
        rule_fires,
        byz_actions,
    };
    Ok((trace, summary))
}

/// [`run_simulation`] with the instance's own step limit.
pub fn run_instance(inst: &Instance) -> Result<(Trace, RunSummary), SimulationError> {
    run_simulation(inst, RunOptions::steps(inst.max_steps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Scenario;

    #[test]
    fn edge_converges_in_two_steps() {
        let inst = Scenario::builtin("edge-smoke").unwrap().resolve(None).unwrap();
        let (trace, summary) = run_instance(&inst).unwrap();
        assert!(summary.convergence_step.unwrap() <= 2);
        assert_eq!(summary.matching, vec![(0, 1)]);
        assert!(summary.maximal);
        assert!(summary.terminated);
        assert_eq!(summary.final_potential, Potential::ZERO);
        // S by node 0, M by node 1, then the terminal quiescent record.
        assert_eq!(trace.activations(), 2);
    }

    #[test]
    fn legitimate_start_without_byzantine_is_terminal() {
        let mut s = Scenario::builtin("theorem2").unwrap();
        s.byzantine.nodes.clear();
        let (trace, summary) = run_instance(&s.resolve(None).unwrap()).unwrap();
        assert_eq!(trace.activations(), 0);
        assert_eq!(summary.convergence_step, Some(0));
        assert!(summary.terminated);
    }

    #[test]
    fn theorem2_contains_radius_two_only() {
        let inst = Scenario::builtin("theorem2").unwrap().resolve(None).unwrap();
        let (trace, summary) = run_instance(&inst).unwrap();
        assert_eq!(trace.events.len(), 1000);
        assert_eq!(trace.events[0].kind, StepKind::Byz);
        assert_eq!(trace.events[0].predicates[2], Predicate::Single);
        let r1 = summary.containment_at(1).unwrap();
        assert!(r1.violations.iter().any(|v| v.node == 2));
        let r2 = summary.containment_at(2).unwrap();
        assert!(r2.contained_throughout());
        assert_eq!(r2.nodes, NodeSet::from([3, 4]));
    }

    #[test]
    fn stop_at_lc2_truncates() {
        let inst = Scenario::builtin("p5-all-null").unwrap().resolve(None).unwrap();
        let (full, summary) = run_instance(&inst).unwrap();
        let (short, early) = run_simulation(
            &inst,
            RunOptions {
                max_steps: 1000,
                stop_at_lc2: true,
            },
        )
        .unwrap();
        assert_eq!(summary.convergence_step, early.convergence_step);
        assert_eq!(short.events.len() as u64, early.convergence_step.unwrap());
        assert!(full.events.len() >= short.events.len());
    }
}
