//! Retrospective containment monitoring over finite traces.

use serde::{Deserialize, Serialize};

use crate::protocol::{spec, Configuration};
use crate::topology::{NodeId, NodeSet, Topology};
use crate::trace::Trace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationCause {
    SpecBroken,
    OVariableChanged,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContainmentViolation {
    /// Index of the transition that broke the candidate.
    pub step: u64,
    pub node: NodeId,
    pub cause: ViolationCause,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContainmentVerdict {
    pub radius: u32,
    /// The monitored honest nodes.
    pub nodes: NodeSet,
    /// Earliest configuration index from which every monitored node satisfies
    /// spec and keeps its `pref` until the end of the trace.
    pub contained_from_step: Option<u64>,
    pub violations: Vec<ContainmentViolation>,
    /// Number of configurations inspected.
    pub horizon: u64,
}

impl ContainmentVerdict {
    /// Contained over the whole trace, starting from the initial configuration.
    pub fn contained_throughout(&self) -> bool {
        self.contained_from_step == Some(0) && self.violations.is_empty()
    }
}

/// Finds the earliest suffix of the trace on which every `radius`-honest node
/// satisfies spec without changing its output variable. A violation is
/// recorded whenever a configuration in which all monitored nodes satisfied
/// spec is followed by a transition that breaks spec at, or changes the
/// `pref` of, a monitored node.
pub fn containment_monitor(trace: &Trace, t: &Topology, byz: &NodeSet, radius: u32) -> ContainmentVerdict {
    let nodes = t.c_honest_set(byz, radius);
    let configs: Vec<Configuration> = trace.configurations().collect();
    let legit: Vec<bool> = configs
        .iter()
        .map(|cfg| nodes.iter().all(|v| spec(t, cfg, v)))
        .collect();

    let mut violations = Vec::new();
    for j in 1..configs.len() {
        if !legit[j - 1] {
            continue;
        }
        for v in nodes.iter() {
            if !spec(t, &configs[j], v) {
                violations.push(ContainmentViolation {
                    step: (j - 1) as u64,
                    node: v,
                    cause: ViolationCause::SpecBroken,
                });
            }
            if configs[j].state(v).pref != configs[j - 1].state(v).pref {
                violations.push(ContainmentViolation {
                    step: (j - 1) as u64,
                    node: v,
                    cause: ViolationCause::OVariableChanged,
                });
            }
        }
    }

    // Walk backwards while the suffix stays legitimate and output-stable.
    let mut contained_from = None;
    for i in (0..configs.len()).rev() {
        if !legit[i] {
            break;
        }
        let stable_into_next = i + 1 == configs.len()
            || nodes
                .iter()
                .all(|v| configs[i].state(v).pref == configs[i + 1].state(v).pref);
        if !stable_into_next {
            break;
        }
        contained_from = Some(i as u64);
    }

    ContainmentVerdict {
        radius,
        nodes,
        contained_from_step: contained_from,
        violations,
        horizon: configs.len() as u64,
    }
}
