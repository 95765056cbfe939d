//! Command-line front end for the byzmatch simulator and model checker.

pub mod args;
pub mod check;
pub mod output;
pub mod run;
pub mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use byzmatch_core::modelcheck::DEFAULT_BUDGET;
use byzmatch_core::scenario::BUILTIN_NAMES;
use byzmatch_core::schedulers::DEFAULT_BYZ_PERIOD;
use byzmatch_core::{AdversaryStrategy, Scenario};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "byzmatch", version, about = "Simulate and model-check Byzantine-contained maximal matching")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write trace.jsonl, summary.json and scenario.json.
    Run {
        /// Built-in scenario name or path to a scenario file.
        scenario: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        max_steps: Option<u64>,
        /// Replaces every seed in the scenario.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        byz_period: Option<u64>,
        /// Containment radius reported alongside 1 and 2.
        #[arg(long)]
        radius: Option<u32>,
    },
    /// Exhaustively check properties over a small graph's state space.
    Modelcheck {
        /// Graph text file, or `path:N`, `ring:N`, `star:N`, `complete:N`.
        graph: String,
        /// Comma-separated Byzantine nodes.
        #[arg(long, default_value = "")]
        byz: String,
        /// Comma-separated checks: partition, lemma5, lemma6, closure,
        /// convergence, theorem2, or all.
        #[arg(long, default_value = "all")]
        checks: String,
        /// Largest configuration count to enumerate.
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        #[arg(long, default_value = "ssmm")]
        protocol: String,
        /// Daemons for the convergence check (repeatable).
        #[arg(long = "daemon", default_values = ["round-robin-age", "adversarial-greedy"])]
        daemons: Vec<String>,
        /// Adversary strategies besides `dormant` for the convergence check (repeatable).
        #[arg(long = "strategy", default_values = ["divorcer", "oscillator:1"])]
        strategies: Vec<String>,
        /// Steps allowed per convergence run; defaults to 50 times the node count.
        #[arg(long)]
        max_steps: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_BYZ_PERIOD)]
        byz_period: u64,
        /// Seed for `seeded-random-fair` daemons and `random` strategies given without one.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Also write the reports to DIR/modelcheck.json.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Run the cartesian product of a sweep file's axes.
    Sweep {
        spec: PathBuf,
        #[arg(long, default_value = "sweep-out")]
        out: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Built-in scenarios.
    Scenarios {
        #[command(subcommand)]
        action: ScenariosAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum ScenariosAction {
    List,
    /// Print a built-in scenario as an editable scenario file.
    Show { name: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

/// Exit status 0 on success, 1 when a model check fails. Errors in the input
/// surface as `Err` and map to status 2 in `main`.
pub fn execute(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run {
            scenario,
            out,
            max_steps,
            seed,
            byz_period,
            radius,
        } => {
            let overrides = run::Overrides {
                max_steps,
                seed,
                byz_period,
                radius,
            };
            let summary = run::cmd_run(&scenario, &overrides, &out)?;
            println!("{}", run::render_summary(&scenario, &summary));
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Modelcheck {
            graph,
            byz,
            checks,
            budget,
            protocol,
            daemons,
            strategies,
            max_steps,
            byz_period,
            seed,
            format,
            out,
            jobs,
        } => {
            let t = args::load_graph(&graph)?;
            let checks = check::parse_checks(&checks)?;
            let mut daemons = daemons.iter().map(|d| args::parse_daemon(d)).collect::<Result<Vec<_>>>()?;
            let mut strategies = strategies.iter().map(|s| args::parse_strategy(s)).collect::<Result<Vec<_>>>()?;
            if let Some(seed) = seed {
                for d in &mut daemons {
                    if let byzmatch_core::DaemonPolicy::SeededRandomFair { seed: s } = d {
                        *s = seed;
                    }
                }
                for st in &mut strategies {
                    if let AdversaryStrategy::RandomState { seed: s } = st {
                        *s = seed;
                    }
                }
            }
            let opts = check::CheckOptions {
                byzantine: args::parse_nodes(&byz)?,
                protocol: args::parse_protocol(&protocol)?,
                daemons,
                strategies,
                byz_period,
                step_budget: max_steps,
                budget,
            };
            let mut pool = rayon::ThreadPoolBuilder::new();
            if let Some(j) = jobs {
                pool = pool.num_threads(j.max(1));
            }
            let reports = pool.build()?.install(|| check::run_checks(&t, &checks, &opts))?;
            match format {
                Format::Text => print!("{}", check::render_reports(&reports)),
                Format::Json => println!("{}", serde_json::to_string_pretty(&reports)?),
            }
            if let Some(dir) = out {
                output::write_json(&dir.join("modelcheck.json"), &reports)?;
            }
            Ok(if reports.iter().all(|r| r.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Sweep { spec, out, jobs } => {
            let result = sweep::cmd_sweep(&spec, &out, jobs)?;
            let o = &result.aggregate.overall;
            println!(
                "{} cells, {} errors, {} converged, max convergence step {}, median {}",
                o.cells,
                o.errors,
                o.converged,
                o.max_convergence_step.map_or("-".into(), |m| m.to_string()),
                o.median_convergence_step.map_or("-".into(), |m| m.to_string()),
            );
            println!("wrote {}", result.out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Scenarios { action } => {
            match action {
                ScenariosAction::List => {
                    for name in BUILTIN_NAMES {
                        let s = Scenario::builtin(name)?;
                        println!(
                            "{name:<12} graph={} byzantine={:?} strategy={} max_steps={}",
                            s.graph.label(),
                            s.byzantine.nodes,
                            s.byzantine.strategy.label(),
                            s.max_steps
                        );
                    }
                }
                ScenariosAction::Show { name } => println!("{}", Scenario::builtin(&name)?.to_json_pretty()),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
