//! Parsers for compact command-line values.

use std::path::Path;

use anyhow::{bail, Context, Result};
use byzmatch_core::scenario::GraphSpec;
use byzmatch_core::{AdversaryStrategy, DaemonPolicy, NodeSet, Protocol, Topology};

/// `path:5`, `ring:4`, `star:5`, `complete:3`, or a graph text file.
pub fn parse_graph_spec(arg: &str) -> Result<GraphSpec> {
    if let Some((family, n)) = arg.split_once(':') {
        let n: usize = n.parse().with_context(|| format!("graph `{arg}`: `{n}` is not a node count"))?;
        return Ok(match family {
            "path" => GraphSpec::Path { n },
            "ring" => GraphSpec::Ring { n },
            "star" => GraphSpec::Star { n },
            "complete" => GraphSpec::Complete { n },
            other => bail!("graph `{arg}`: unknown family `{other}` (expected path, ring, star or complete)"),
        });
    }
    Ok(GraphSpec::File { path: arg.into() })
}

pub fn load_graph(arg: &str) -> Result<Topology> {
    let spec = parse_graph_spec(arg)?;
    if let GraphSpec::File { path } = &spec {
        if !Path::new(path).exists() {
            bail!("graph `{arg}`: no such file and not of the form family:n");
        }
    }
    Ok(spec.build(None)?)
}

/// Comma-separated node indices; empty string for none.
pub fn parse_nodes(arg: &str) -> Result<NodeSet> {
    arg.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().with_context(|| format!("`{s}` is not a node index")))
        .collect()
}

/// `dormant`, `divorcer`, `oscillator[:period]`, `seducer`, `random[:seed]`.
pub fn parse_strategy(arg: &str) -> Result<AdversaryStrategy> {
    let (name, param) = match arg.split_once(':') {
        Some((n, p)) => (n, Some(p)),
        None => (arg, None),
    };
    let number = |default: u64| -> Result<u64> {
        param.map_or(Ok(default), |p| {
            p.parse().with_context(|| format!("strategy `{arg}`: `{p}` is not a number"))
        })
    };
    Ok(match name {
        "dormant" => AdversaryStrategy::Dormant,
        "divorcer" => AdversaryStrategy::Divorcer,
        "oscillator" => AdversaryStrategy::Oscillator {
            period: u32::try_from(number(1)?).context("oscillator period too large")?,
        },
        "seducer" => AdversaryStrategy::Seducer,
        "random" => AdversaryStrategy::RandomState { seed: number(0)? },
        other => bail!("unknown strategy `{other}`"),
    })
}

/// `round-robin-age`, `adversarial-greedy`, `seeded-random-fair[:seed]`.
pub fn parse_daemon(arg: &str) -> Result<DaemonPolicy> {
    Ok(match arg.split_once(':') {
        None if arg == "round-robin-age" || arg == "rr" => DaemonPolicy::RoundRobinAge,
        None if arg == "adversarial-greedy" || arg == "greedy" => DaemonPolicy::AdversarialGreedy,
        None if arg == "seeded-random-fair" || arg == "random" => DaemonPolicy::SeededRandomFair { seed: 0 },
        Some(("seeded-random-fair" | "random", seed)) => DaemonPolicy::SeededRandomFair {
            seed: seed.parse().with_context(|| format!("daemon `{arg}`: bad seed"))?,
        },
        _ => bail!("unknown daemon `{arg}`"),
    })
}

pub fn parse_protocol(arg: &str) -> Result<Protocol> {
    match arg {
        "ssmm" => Ok(Protocol::Ssmm),
        "baseline" => Ok(Protocol::Baseline),
        other => bail!("unknown protocol `{other}` (expected ssmm or baseline)"),
    }
}
