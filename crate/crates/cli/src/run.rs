use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use byzmatch_core::analysis::run_instance;
use byzmatch_core::scenario::{InitialSpec, BUILTIN_NAMES};
use byzmatch_core::{AdversaryStrategy, DaemonPolicy, RunSummary, Scenario};

use crate::output::{write_atomic, write_json};

/// Command-line overrides applied on top of a scenario file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub max_steps: Option<u64>,
    pub seed: Option<u64>,
    pub byz_period: Option<u64>,
    pub radius: Option<u32>,
}

impl Overrides {
    /// `seed` replaces every seed in the scenario: the random daemon, the
    /// random adversary and a random initial configuration.
    pub fn apply(&self, s: &mut Scenario) {
        if let Some(m) = self.max_steps {
            s.max_steps = m;
        }
        if let Some(b) = self.byz_period {
            s.daemon.byz_period = b;
        }
        if let Some(r) = self.radius {
            s.radius = r;
        }
        if let Some(seed) = self.seed {
            if let DaemonPolicy::SeededRandomFair { seed: s0 } = &mut s.daemon.policy {
                *s0 = seed;
            }
            if let AdversaryStrategy::RandomState { seed: s0 } = &mut s.byzantine.strategy {
                *s0 = seed;
            }
            if let InitialSpec::Random(s0) = &mut s.initial {
                *s0 = seed;
            }
        }
    }
}

/// A built-in name, or a path to a scenario file. Returns the scenario and
/// the directory relative paths inside it resolve against.
pub fn load_scenario(arg: &str) -> Result<(Scenario, Option<PathBuf>)> {
    if BUILTIN_NAMES.contains(&arg) && !Path::new(arg).exists() {
        return Ok((Scenario::builtin(arg)?, None));
    }
    let path = Path::new(arg);
    if !path.exists() {
        bail!(
            "`{arg}` is neither a built-in scenario ({}) nor a file",
            BUILTIN_NAMES.join(", ")
        );
    }
    let scenario = Scenario::load(path).with_context(|| format!("loading scenario {arg}"))?;
    Ok((scenario, path.parent().map(Path::to_path_buf)))
}

/// Runs a scenario and writes `trace.jsonl`, `summary.json` and the effective
/// `scenario.json` into `out`.
pub fn cmd_run(arg: &str, overrides: &Overrides, out: &Path) -> Result<RunSummary> {
    let (mut scenario, base) = load_scenario(arg)?;
    overrides.apply(&mut scenario);
    let inst = scenario.resolve(base.as_deref())?;
    let (trace, summary) = run_instance(&inst)?;

    let mut buf = Vec::new();
    trace.write_jsonl(&mut buf, &summary)?;
    write_atomic(&out.join("trace.jsonl"), &buf)?;
    write_json(&out.join("summary.json"), &summary)?;
    write_json(&out.join("scenario.json"), &scenario)?;
    Ok(summary)
}

pub fn render_summary(name: &str, s: &RunSummary) -> String {
    let mut lines = vec![format!(
        "{name}: {} steps, {}, final potential {}",
        s.steps,
        match s.convergence_step {
            Some(c) => format!("LC2 reached at configuration {c}"),
            None => "LC2 not reached".to_owned(),
        },
        s.final_potential
    )];
    for l in &s.legitimacy {
        lines.push(format!("  LC{}: initial={} final={}", l.radius, l.initial, l.final_));
    }
    lines.push(format!(
        "  matching {:?} on subset {:?}, maximal={}",
        s.matching,
        s.matching_subset.to_vec(),
        s.maximal
    ));
    for c in &s.containment {
        let from = c.contained_from_step.map_or("never".to_owned(), |f| f.to_string());
        let mut line = format!(
            "  containment r={} nodes={:?}: contained from {from} of {} configurations, {} violations",
            c.radius,
            c.nodes.to_vec(),
            c.horizon,
            c.violations.len()
        );
        if let Some(v) = c.violations.first() {
            line.push_str(&format!(" (first: step {} node {} {:?})", v.step, v.node, v.cause));
        }
        lines.push(line);
    }
    lines.push(format!(
        "  rules M={} S={} A={}, byzantine actions {}, potential increases {}",
        s.rule_fires.m, s.rule_fires.s, s.rule_fires.a, s.byz_actions, s.potential_increases
    ));
    lines.join("\n")
}
