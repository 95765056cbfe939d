use std::str::FromStr;

use anyhow::{bail, Result};
use byzmatch_core::modelcheck::{
    check_closure, check_lemma5, check_lemma6, check_partition, theorem2_replay_with, CheckReport, ConvergenceSweep,
};
use byzmatch_core::{AdversaryStrategy, DaemonPolicy, DaemonSpec, NodeSet, Protocol, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    Partition,
    Lemma5,
    Lemma6,
    Closure,
    Convergence,
    Theorem2,
}

impl Check {
    pub const ALL: [Check; 6] = [
        Check::Partition,
        Check::Lemma5,
        Check::Lemma6,
        Check::Closure,
        Check::Convergence,
        Check::Theorem2,
    ];
}

impl FromStr for Check {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "partition" => Check::Partition,
            "lemma5" => Check::Lemma5,
            "lemma6" => Check::Lemma6,
            "closure" => Check::Closure,
            "convergence" => Check::Convergence,
            "theorem2" => Check::Theorem2,
            other => bail!(
                "unknown check `{other}` (expected partition, lemma5, lemma6, closure, convergence, theorem2 or all)"
            ),
        })
    }
}

/// Expands a comma-separated list, where `all` stands for every check.
pub fn parse_checks(arg: &str) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for part in arg.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let add: Vec<Check> = if part == "all" {
            Check::ALL.to_vec()
        } else {
            vec![part.parse()?]
        };
        for c in add {
            if !out.contains(&c) {
                out.push(c);
            }
        }
    }
    if out.is_empty() {
        bail!("no checks selected");
    }
    Ok(out)
}

pub struct CheckOptions {
    pub byzantine: NodeSet,
    pub protocol: Protocol,
    pub daemons: Vec<DaemonPolicy>,
    pub strategies: Vec<AdversaryStrategy>,
    pub byz_period: u64,
    pub step_budget: Option<u64>,
    pub budget: u64,
}

/// Runs the selected checks. The convergence check expands into one report
/// per daemon for convergence, maximality of the reached matching, the
/// potential-increase bound and fairness.
pub fn run_checks(t: &Topology, checks: &[Check], opts: &CheckOptions) -> Result<Vec<CheckReport>> {
    t.validate_node_set(&opts.byzantine)?;
    let byz = &opts.byzantine;
    let mut reports = Vec::new();
    for check in checks {
        match check {
            Check::Partition => reports.push(check_partition(t, opts.budget)?),
            Check::Lemma5 => reports.push(check_lemma5(t, byz, opts.budget)?),
            Check::Lemma6 => reports.push(check_lemma6(t, byz, opts.protocol, opts.budget)?),
            Check::Closure => reports.push(check_closure(t, byz, opts.protocol, opts.budget)?),
            Check::Convergence => {
                let step_budget = opts.step_budget.unwrap_or(50 * t.node_count() as u64);
                for policy in &opts.daemons {
                    let daemon = DaemonSpec::new(policy.clone(), opts.byz_period);
                    daemon.validate()?;
                    for s in &opts.strategies {
                        s.validate(t, byz)?;
                    }
                    let sweep = ConvergenceSweep::run(
                        t,
                        byz,
                        &daemon,
                        &opts.strategies,
                        opts.protocol,
                        step_budget,
                        opts.budget,
                    )?;
                    reports.push(sweep.convergence_report());
                    reports.push(sweep.lemma1_report());
                    reports.push(sweep.lemma7_report());
                    reports.push(sweep.fairness_report());
                }
            }
            Check::Theorem2 => reports.push(theorem2_replay_with(opts.protocol)),
        }
    }
    Ok(reports)
}

pub fn render_reports(reports: &[CheckReport]) -> String {
    let mut out = String::new();
    for r in reports {
        out.push_str(&r.line());
        out.push('\n');
        for note in &r.notes {
            out.push_str(&format!("    {note}\n"));
        }
        for cx in &r.counterexamples {
            let at = cx.config_index.map_or(String::new(), |i| format!("config #{i} "));
            let node = cx.node.map_or(String::new(), |v| format!("node {v} "));
            out.push_str(&format!("    counterexample {at}{node}: {}\n", cx.detail));
        }
    }
    out
}
