//! Central daemons.
//!
//! Every step activates exactly one actor. Byzantine nodes are offered a turn
//! on every `byz_period`-th step; all other steps go to an enabled honest
//! node chosen by the policy. Honest-node ages advance only on honest steps,
//! so Byzantine turns never count against honest fairness.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::potential::potential_over;
use crate::protocol::{enabled_rules, Configuration, NodeState, Protocol};
use crate::topology::{NodeId, NodeSet, Topology};
use crate::trace::{StepKind, Trace};

pub const DEFAULT_BYZ_PERIOD: u64 = 2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DaemonError {
    #[error("byz_period must be at least 2, got {0}")]
    ByzPeriodTooSmall(u64),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DaemonPolicy {
    /// Enabled honest node with the largest age; lowest index on ties.
    #[default]
    RoundRobinAge,
    /// Uniform choice among enabled honest nodes, with an age cap.
    SeededRandomFair { seed: u64 },
    /// Enabled honest node whose move leaves the largest potential; lowest
    /// index on ties. Subject to the same age cap.
    AdversarialGreedy,
}

impl DaemonPolicy {
    pub fn label(&self) -> String {
        match self {
            DaemonPolicy::RoundRobinAge => "round-robin-age".into(),
            DaemonPolicy::SeededRandomFair { seed } => format!("seeded-random-fair({seed})"),
            DaemonPolicy::AdversarialGreedy => "adversarial-greedy".into(),
        }
    }
}

/// Scenario-level daemon selection: `{kind, seed?, byz_period?}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DaemonSpec {
    #[serde(flatten)]
    pub policy: DaemonPolicy,
    #[serde(default = "default_byz_period")]
    pub byz_period: u64,
}

fn default_byz_period() -> u64 {
    DEFAULT_BYZ_PERIOD
}

impl Default for DaemonSpec {
    fn default() -> Self {
        Self {
            policy: DaemonPolicy::RoundRobinAge,
            byz_period: DEFAULT_BYZ_PERIOD,
        }
    }
}

impl DaemonSpec {
    pub fn new(policy: DaemonPolicy, byz_period: u64) -> Self {
        Self { policy, byz_period }
    }

    pub fn validate(&self) -> Result<(), DaemonError> {
        if self.byz_period < 2 {
            return Err(DaemonError::ByzPeriodTooSmall(self.byz_period));
        }
        Ok(())
    }
}

/// Who acts in a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Actor {
    Honest(NodeId),
    Byzantine(NodeId),
    Quiescent,
}

/// Read-only view handed to the daemon each step.
pub struct StepContext<'a> {
    pub topology: &'a Topology,
    pub configuration: &'a Configuration,
    pub byzantine: &'a NodeSet,
    /// Enabled honest nodes, ascending.
    pub enabled_honest: &'a [NodeId],
    /// Nodes over which the variant function is counted.
    pub honest2: &'a [NodeId],
    pub protocol: Protocol,
}

/// Per-run daemon state.
#[derive(Debug, Clone)]
pub struct Daemon {
    spec: DaemonSpec,
    ages: Vec<u64>,
    step: u64,
    byz_turns: u64,
    age_cap: u64,
    rng: Option<ChaCha8Rng>,
}

impl Daemon {
    pub fn new(spec: DaemonSpec, node_count: usize, byz: &NodeSet) -> Result<Self, DaemonError> {
        spec.validate()?;
        let rng = match spec.policy {
            DaemonPolicy::SeededRandomFair { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
            _ => None,
        };
        let honest = node_count.saturating_sub(byz.len()) as u64;
        Ok(Self {
            spec,
            ages: vec![0; node_count],
            step: 0,
            byz_turns: 0,
            age_cap: honest.max(1),
            rng,
        })
    }

    pub fn spec(&self) -> &DaemonSpec {
        &self.spec
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn age(&self, v: NodeId) -> u64 {
        self.ages[v]
    }

    /// Is `step` a step on which the adversary is offered a turn?
    pub fn is_byz_step(&self, step: u64) -> bool {
        step.is_multiple_of(self.spec.byz_period)
    }

    /// Chooses the actor for the current step and advances the bookkeeping.
    pub fn next_actor(&mut self, ctx: &StepContext<'_>) -> Actor {
        let actor = if self.is_byz_step(self.step) && !ctx.byzantine.is_empty() {
            let members = ctx.byzantine.to_vec();
            let b = members[(self.byz_turns % members.len() as u64) as usize];
            self.byz_turns += 1;
            Actor::Byzantine(b)
        } else if ctx.enabled_honest.is_empty() {
            Actor::Quiescent
        } else {
            Actor::Honest(self.pick_honest(ctx))
        };
        if let Actor::Honest(v) = actor {
            for age in &mut self.ages {
                *age += 1;
            }
            self.ages[v] = 0;
        }
        self.step += 1;
        actor
    }

    fn oldest(&self, enabled: &[NodeId]) -> NodeId {
        // max_by_key keeps the last maximum; iterate in reverse for lowest index.
        *enabled
            .iter()
            .rev()
            .max_by_key(|&&v| self.ages[v])
            .expect("enabled set is non-empty")
    }

    fn pick_honest(&mut self, ctx: &StepContext<'_>) -> NodeId {
        let enabled = ctx.enabled_honest;
        let oldest = self.oldest(enabled);
        if matches!(self.spec.policy, DaemonPolicy::RoundRobinAge) || self.ages[oldest] >= self.age_cap {
            return oldest;
        }
        match self.spec.policy {
            DaemonPolicy::RoundRobinAge => oldest,
            DaemonPolicy::SeededRandomFair { .. } => {
                let rng = self.rng.as_mut().expect("random daemon has an rng");
                enabled[rng.random_range(0..enabled.len())]
            }
            DaemonPolicy::AdversarialGreedy => {
                let t = ctx.topology;
                let cfg = ctx.configuration;
                let mut best: Option<(crate::analysis::potential::Potential, NodeId)> = None;
                let mut scratch = cfg.clone();
                for &v in enabled {
                    let rule = enabled_rules(t, cfg, v).single().expect("guards are exclusive");
                    let state: NodeState = ctx.protocol.fire(t, cfg, v, rule).expect("rule is enabled");
                    scratch.set(v, state);
                    let p = potential_over(t, &scratch, ctx.honest2.iter().copied());
                    scratch.set(v, cfg.state(v));
                    if best.is_none_or(|(bp, _)| p > bp) {
                        best = Some((p, v));
                    }
                }
                best.expect("enabled set is non-empty").1
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FairnessViolation {
    pub node: NodeId,
    /// First step of the starvation window.
    pub from_step: u64,
    /// Consecutive steps the node stayed enabled without acting.
    pub waited: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub threshold: u64,
    pub violations: Vec<FairnessViolation>,
}

impl FairnessReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Starvation bound used by [`fairness_audit`]: node count times the largest
/// per-node state domain.
pub fn fairness_threshold(t: &Topology) -> u64 {
    let max_states = t
        .nodes()
        .map(|v| NodeState::domain_size(t.degree(v)))
        .max()
        .unwrap_or(1);
    (t.node_count() * max_states) as u64
}

/// Post-hoc fairness check: flags every honest node that stays enabled for
/// more than [`fairness_threshold`] consecutive steps without acting. Each
/// starvation window is reported once.
pub fn fairness_audit(trace: &Trace, t: &Topology, byz: &NodeSet) -> FairnessReport {
    let threshold = fairness_threshold(t);
    let mut waiting: Vec<Option<(u64, u64)>> = vec![None; t.node_count()];
    let mut reported = vec![false; t.node_count()];
    let mut violations = Vec::new();
    let mut cfg = trace.initial.clone();
    for event in &trace.events {
        let acted = match event.kind {
            StepKind::Rule => event.actor,
            _ => None,
        };
        for v in t.nodes().filter(|&v| !byz.contains(v)) {
            let enabled = !enabled_rules(t, &cfg, v).is_empty();
            if !enabled || acted == Some(v) {
                waiting[v] = None;
                reported[v] = false;
                continue;
            }
            let (from, waited) = waiting[v].map_or((event.step, 1), |(f, w)| (f, w + 1));
            waiting[v] = Some((from, waited));
            if waited > threshold && !reported[v] {
                reported[v] = true;
                violations.push(FairnessViolation {
                    node: v,
                    from_step: from,
                    waited,
                });
            }
        }
        if let (Some(v), Some(s)) = (event.actor, event.new_state) {
            cfg.set(v, s);
        }
    }
    // Report the final length of each window that crossed the threshold.
    for violation in &mut violations {
        if let Some((from, waited)) = waiting[violation.node] {
            if from == violation.from_step {
                violation.waited = waited;
            }
        }
    }
    FairnessReport { threshold, violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::potential::Potential;
    use crate::trace::TraceEvent;

    fn ctx<'a>(
        t: &'a Topology,
        cfg: &'a Configuration,
        byz: &'a NodeSet,
        enabled: &'a [NodeId],
    ) -> StepContext<'a> {
        StepContext {
            topology: t,
            configuration: cfg,
            byzantine: byz,
            enabled_honest: enabled,
            honest2: &[],
            protocol: Protocol::Ssmm,
        }
    }

    #[test]
    fn max_age_wins() {
        let t = Topology::path(5).unwrap();
        let cfg = Configuration::all_null(&t);
        let byz = NodeSet::new();
        let mut d = Daemon::new(DaemonSpec::default(), 5, &byz).unwrap();
        d.ages = vec![0, 5, 0, 2, 0];
        d.step = 1;
        assert_eq!(d.next_actor(&ctx(&t, &cfg, &byz, &[1, 3])), Actor::Honest(1));
        assert_eq!(d.ages, vec![1, 0, 1, 3, 1]);
    }

    #[test]
    fn nothing_enabled_is_quiescent() {
        let t = Topology::path(5).unwrap();
        let cfg = Configuration::all_null(&t);
        let byz = NodeSet::new();
        let mut d = Daemon::new(DaemonSpec::default(), 5, &byz).unwrap();
        assert_eq!(d.next_actor(&ctx(&t, &cfg, &byz, &[])), Actor::Quiescent);
        assert_eq!(d.step(), 1);
    }

    #[test]
    fn byzantine_turns_on_period_multiples() {
        let t = Topology::path(5).unwrap();
        let cfg = Configuration::all_null(&t);
        let byz = NodeSet::from([0]);
        let mut d = Daemon::new(DaemonSpec::default(), 5, &byz).unwrap();
        let actors: Vec<_> = (0..4).map(|_| d.next_actor(&ctx(&t, &cfg, &byz, &[2]))).collect();
        assert_eq!(
            actors,
            vec![Actor::Byzantine(0), Actor::Honest(2), Actor::Byzantine(0), Actor::Honest(2)]
        );
        // Byzantine turns do not age honest nodes.
        assert_eq!(d.age(3), 2);
    }

    #[test]
    fn byzantine_turns_rotate_over_members() {
        let t = Topology::path(5).unwrap();
        let cfg = Configuration::all_null(&t);
        let byz = NodeSet::from([0, 4]);
        let mut d = Daemon::new(DaemonSpec::new(DaemonPolicy::RoundRobinAge, 3), 5, &byz).unwrap();
        let byz_actors: Vec<_> = (0..9)
            .map(|_| d.next_actor(&ctx(&t, &cfg, &byz, &[])))
            .filter(|a| matches!(a, Actor::Byzantine(_)))
            .collect();
        assert_eq!(byz_actors, vec![Actor::Byzantine(0), Actor::Byzantine(4), Actor::Byzantine(0)]);
    }

    #[test]
    fn period_below_two_is_rejected() {
        assert_eq!(
            Daemon::new(DaemonSpec::new(DaemonPolicy::RoundRobinAge, 1), 3, &NodeSet::new()).err(),
            Some(DaemonError::ByzPeriodTooSmall(1))
        );
    }

    #[test]
    fn greedy_prefers_the_move_that_keeps_potential_high() {
        let t = Topology::path(3).unwrap();
        // 0 -> 1, 2 null: node 1 may accept 0 (M); node 2 may propose (S).
        let cfg = Configuration::from_targets(&t, &[Some(1), None, None]);
        let byz = NodeSet::new();
        let honest2 = [0, 1, 2];
        let mut d = Daemon::new(DaemonSpec::new(DaemonPolicy::AdversarialGreedy, 2), 3, &byz).unwrap();
        let c = StepContext {
            topology: &t,
            configuration: &cfg,
            byzantine: &byz,
            enabled_honest: &[1, 2],
            honest2: &honest2,
            protocol: Protocol::Ssmm,
        };
        // 1 fires M: everyone married or dead, P = (0, 0). 2 fires S towards
        // 1: 0 and 2 both propose, 1 single, P = (3, 1).
        assert_eq!(potential_over(&t, &cfg, honest2), Potential::from([3, 2]));
        assert_eq!(d.next_actor(&c), Actor::Honest(2));
    }

    #[test]
    fn audit_flags_starved_node() {
        let t = Topology::path(5).unwrap();
        let cfg = Configuration::all_null(&t);
        let byz = NodeSet::from([0]);
        let threshold = fairness_threshold(&t);
        assert_eq!(threshold, 30);
        // Only the Byzantine node acts, and it never changes anything: honest
        // nodes 2, 3 and 4 are enabled the whole time.
        let events = (0..threshold + 5)
            .map(|step| TraceEvent {
                step,
                actor: Some(0),
                kind: StepKind::Byz,
                rule: None,
                new_state: Some(cfg.state(0)),
                predicates: Vec::new(),
                potential: Potential::ZERO,
                in_lc2: false,
            })
            .collect();
        let trace = Trace { initial: cfg, events };
        let report = fairness_audit(&trace, &t, &byz);
        let starved: Vec<_> = report.violations.iter().map(|v| v.node).collect();
        assert!(starved.contains(&2));
        let v2 = report.violations.iter().find(|v| v.node == 2).unwrap();
        assert_eq!((v2.from_step, v2.waited), (0, threshold + 5));
    }
}
