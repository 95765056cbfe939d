//! Execution traces and their JSON-lines encoding.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::analysis::potential::Potential;
use crate::protocol::{Configuration, NodeState, Predicate, Rule};
use crate::topology::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    /// An honest node fired a rule.
    Rule,
    /// A Byzantine node took its turn (possibly a no-op).
    Byz,
    /// Nobody acted.
    Quiescent,
}

/// One atomic step. `step` is the 0-based index of the transition; the
/// recorded predicates, potential and legitimacy flag describe the
/// configuration reached by it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub step: u64,
    pub actor: Option<NodeId>,
    pub kind: StepKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<Rule>,
    pub new_state: Option<NodeState>,
    pub predicates: Vec<Predicate>,
    pub potential: Potential,
    pub in_lc2: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub initial: Configuration,
    pub events: Vec<TraceEvent>,
}

impl Trace {
    pub fn new(initial: Configuration) -> Self {
        Self {
            initial,
            events: Vec::new(),
        }
    }

    /// `γ_0, γ_1, …`: the initial configuration followed by the one reached
    /// after each event.
    pub fn configurations(&self) -> impl Iterator<Item = Configuration> + '_ {
        let mut cfg = self.initial.clone();
        std::iter::once(self.initial.clone()).chain(self.events.iter().map(move |e| {
            if let (Some(v), Some(s)) = (e.actor, e.new_state) {
                cfg.set(v, s);
            }
            cfg.clone()
        }))
    }

    pub fn final_configuration(&self) -> Configuration {
        self.configurations().last().expect("at least the initial configuration")
    }

    /// Steps in which some node was activated (honest or Byzantine).
    pub fn activations(&self) -> usize {
        self.events.iter().filter(|e| e.kind != StepKind::Quiescent).count()
    }

    /// Writes one JSON object per event, followed by `summary` tagged with
    /// `"kind": "summary"`.
    pub fn write_jsonl<W: Write, S: Serialize>(&self, mut out: W, summary: &S) -> io::Result<()> {
        for event in &self.events {
            serde_json::to_writer(&mut out, event)?;
            out.write_all(b"\n")?;
        }
        let mut record = serde_json::to_value(summary)?;
        if let serde_json::Value::Object(map) = &mut record {
            map.insert("kind".into(), "summary".into());
        }
        serde_json::to_writer(&mut out, &record)?;
        out.write_all(b"\n")
    }
}

/// Reads back the event records of a JSON-lines trace, skipping the summary.
pub fn read_events(text: &str) -> Result<Vec<TraceEvent>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .filter(|l| !l.contains("\"kind\":\"summary\""))
        .map(serde_json::from_str)
        .collect()
}
