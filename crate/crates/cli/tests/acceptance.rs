//! Acceptance suite: one PASS/FAIL line per criterion.

use std::fs;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use byzmatch_core::analysis::matching::brute_force::{all_matchings, is_maximal_mask};
use byzmatch_core::analysis::matching::Edge;
use byzmatch_core::modelcheck::{
    check_closure, check_lemma5, check_lemma6, check_partition, partition_holds, CheckReport, ConvergenceSweep,
    StateSpace, DEFAULT_BUDGET,
};
use byzmatch_core::protocol::{enabled_rules, spec};
use byzmatch_core::trace::read_events;
use byzmatch_core::{
    AdversaryStrategy, Configuration, DaemonPolicy, DaemonSpec, NodeSet, Predicate, Protocol, RunSummary, Topology,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn matrix() -> Vec<(&'static str, Topology)> {
    vec![
        ("P5", Topology::path(5).unwrap()),
        ("triangle", Topology::complete(3).unwrap()),
        ("C4", Topology::ring(4).unwrap()),
        ("C5", Topology::ring(5).unwrap()),
        ("star5", Topology::star(5).unwrap()),
    ]
}

fn byz_sets(t: &Topology) -> Vec<NodeSet> {
    std::iter::once(NodeSet::new())
        .chain(t.nodes().map(|v| NodeSet::from([v])))
        .collect()
}

fn strategies() -> Vec<AdversaryStrategy> {
    vec![
        AdversaryStrategy::Dormant,
        AdversaryStrategy::Divorcer,
        AdversaryStrategy::Oscillator { period: 1 },
    ]
}

fn first_failure(reports: &[CheckReport]) -> Option<String> {
    reports.iter().find(|r| !r.passed).map(|r| {
        let cx = r.counterexamples.first().map_or(String::new(), |c| c.detail.clone());
        format!("{} on {} byz={:?}: {cx}", r.property, r.graph, r.byzantine.to_vec())
    })
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed())
}

fn byzmatch(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_byzmatch"))
        .args(args)
        .output()
        .expect("binary runs")
}

/// Sweeps shared by the convergence, maximality, increase-bound and
/// fairness criteria. Every run lasts the full 50·n step budget, so the
/// matching is checked at the end of the trace and the increase bound and
/// fairness audit cover the whole trace.
struct Sweeps {
    /// Round-robin and greedy daemons, the policies required to converge.
    required: Vec<ConvergenceSweep>,
    /// The seeded random daemon, audited for fairness only.
    random: Vec<ConvergenceSweep>,
}

fn criterion_1() -> Outcome {
    let (result, elapsed) = timed(|| {
        let p5 = check_partition(&Topology::path(5).unwrap(), DEFAULT_BUDGET).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let others = [
            Topology::ring(4).unwrap(),
            Topology::ring(5).unwrap(),
            Topology::ring(6).unwrap(),
            Topology::star(5).unwrap(),
            Topology::complete(3).unwrap(),
        ];
        let mut sampled = 0;
        let mut bad = Vec::new();
        for t in &others {
            for _ in 0..1000 {
                let cfg = Configuration::random(t, &mut rng);
                sampled += 1;
                for v in t.nodes() {
                    if let Err(e) = partition_holds(t, &cfg, v) {
                        bad.push(e);
                    }
                }
            }
        }
        (p5, sampled, bad)
    });
    let (p5, sampled, bad) = result;
    let pass = p5.passed && p5.universe == 864 && bad.is_empty() && elapsed < Duration::from_secs(10);
    Outcome::new(
        pass,
        format!(
            "P5 exhaustive {} configs ({} failures), {sampled} random configs on 5 graphs ({} failures), {:.2}s (limit 10s)",
            p5.universe,
            p5.failures,
            bad.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn matrix_check(
    name: &str,
    limit: u64,
    check: impl Fn(&Topology, &NodeSet) -> CheckReport,
) -> Outcome {
    let (reports, elapsed) = timed(|| {
        matrix()
            .iter()
            .flat_map(|(_, t)| byz_sets(t).into_iter().map(move |b| (t, b)))
            .map(|(t, b)| check(t, &b))
            .collect::<Vec<_>>()
    });
    let checked: u64 = reports.iter().map(|r| r.checked).sum();
    let failures: u64 = reports.iter().map(|r| r.failures).sum();
    let pass = failures == 0 && elapsed < Duration::from_secs(limit);
    let mut detail = format!(
        "{} graph/byz cases, {checked} {name} obligations, {failures} counterexamples, {:.2}s (limit {limit}s)",
        reports.len(),
        elapsed.as_secs_f64()
    );
    if let Some(f) = first_failure(&reports) {
        detail.push_str(&format!("; first: {f}"));
    }
    Outcome::new(pass, detail)
}

fn criterion_2() -> Outcome {
    matrix_check("transition", 60, |t, b| check_lemma6(t, b, Protocol::Ssmm, DEFAULT_BUDGET).unwrap())
}

fn criterion_3() -> Outcome {
    matrix_check("closure", 60, |t, b| check_closure(t, b, Protocol::Ssmm, DEFAULT_BUDGET).unwrap())
}

fn run_sweeps(policy: &DaemonPolicy, stop_at_lc2: bool) -> Vec<ConvergenceSweep> {
    let mut out = Vec::new();
    for (_, t) in matrix() {
        for byz in byz_sets(&t) {
            out.push(
                ConvergenceSweep::run_with(
                    &t,
                    &byz,
                    &DaemonSpec::new(policy.clone(), 2),
                    &strategies(),
                    Protocol::Ssmm,
                    50 * t.node_count() as u64,
                    stop_at_lc2,
                    DEFAULT_BUDGET,
                )
                .unwrap(),
            );
        }
    }
    out
}

fn criterion_4(sweeps: &Sweeps) -> Outcome {
    let reports: Vec<CheckReport> = sweeps.required.iter().map(|s| s.convergence_report()).collect();
    let runs: u64 = reports.iter().map(|r| r.checked).sum();
    let failures: u64 = reports.iter().map(|r| r.failures).sum();
    let max = reports.iter().filter_map(|r| r.max_convergence_steps).max().unwrap_or(0);

    let dir = tempfile::tempdir().unwrap();
    let steps: Vec<Option<u64>> = (0..2)
        .map(|i| {
            let out = dir.path().join(format!("run{i}"));
            assert!(byzmatch(&["run", "p5-all-null", "--out", out.to_str().unwrap()]).status.success());
            let s: RunSummary = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
            s.convergence_step
        })
        .collect();
    let identical = fs::read(dir.path().join("run0/summary.json")).unwrap()
        == fs::read(dir.path().join("run1/summary.json")).unwrap();
    let reproducible = steps[0].is_some() && steps[0] == steps[1] && identical;

    let mut detail = format!(
        "{runs} runs (2 daemons x graph matrix x byz placements x strategies), {failures} without LC2 entry, \
         max convergence {max} steps; P5 all-null converges at configuration {:?} in both runs, summaries identical={identical}",
        steps[0]
    );
    if let Some(f) = first_failure(&reports) {
        detail.push_str(&format!("; first: {f}"));
    }
    Outcome::new(failures == 0 && reproducible, detail)
}

/// Enumerates every matching of an edge list by filtering all edge subsets.
fn matchings_by_subsets(edges: &[Edge]) -> Vec<u128> {
    (0u128..1 << edges.len())
        .filter(|&mask| {
            let mut used = 0u32;
            (0..edges.len()).filter(|&i| mask >> i & 1 == 1).all(|i| {
                let (u, v) = edges[i];
                let bits = (1 << u) | (1 << v);
                let ok = used & bits == 0;
                used |= bits;
                ok
            })
        })
        .collect()
}

/// Number of matchings by recursion on the lowest node with an edge.
fn count_matchings(adj: &[u8], alive: u8) -> u64 {
    let Some(v) = (0..adj.len()).find(|&v| alive >> v & 1 == 1 && adj[v] & alive != 0) else {
        return 1;
    };
    let rest = alive & !(1 << v);
    let mut total = count_matchings(adj, rest);
    for u in 0..adj.len() {
        if (adj[v] & rest) >> u & 1 == 1 {
            total += count_matchings(adj, rest & !(1 << u));
        }
    }
    total
}

/// Maximal iff no edge has both endpoints unmatched.
fn maximal_by_scan(edges: &[Edge], mask: u128) -> bool {
    let covered = (0..edges.len())
        .filter(|&i| mask >> i & 1 == 1)
        .fold(0u32, |acc, i| acc | 1 << edges[i].0 | 1 << edges[i].1);
    edges.iter().all(|&(u, v)| covered >> u & 1 == 1 || covered >> v & 1 == 1)
}

fn graph_edges(n: usize, bits: u64) -> (Vec<Edge>, Vec<u8>) {
    let mut edges = Vec::new();
    let mut adj = vec![0u8; n];
    let mut k = 0;
    for u in 0..n {
        for v in u + 1..n {
            if bits >> k & 1 == 1 {
                edges.push((u, v));
                adj[u] |= 1 << v;
                adj[v] |= 1 << u;
            }
            k += 1;
        }
    }
    (edges, adj)
}

/// Validates the brute-force matching enumerator and its maximality verdict.
/// Returns (graphs checked, discrepancies).
fn validate_oracle() -> (u64, Vec<String>) {
    let mut graphs = 0;
    let mut bad = Vec::new();
    let mut check = |n: usize, bits: u64, full_set: bool, per_matching: bool| {
        let (edges, adj) = graph_edges(n, bits);
        let all = all_matchings(&edges);
        if full_set {
            let mut a = all.clone();
            a.sort_unstable();
            if a != matchings_by_subsets(&edges) {
                bad.push(format!("n={n} graph {bits:#x}: matching sets differ"));
            }
        }
        if all.len() as u64 != count_matchings(&adj, ((1u16 << n) - 1) as u8) {
            bad.push(format!("n={n} graph {bits:#x}: matching counts differ"));
        }
        if per_matching {
            for &m in &all {
                if is_maximal_mask(&all, m) != maximal_by_scan(&edges, m) {
                    bad.push(format!("n={n} graph {bits:#x}: maximality differs for {m:#x}"));
                }
            }
        }
        graphs += 1;
    };
    for n in 1..=7usize {
        let pairs = n * (n - 1) / 2;
        for bits in 0..1u64 << pairs {
            check(n, bits, n <= 5, n <= 6);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20_000 {
        check(7, rng.random_range(0..1u64 << 21), false, true);
        check(8, rng.random_range(0..1u64 << 28), false, true);
    }
    check(8, (1 << 28) - 1, false, true);
    (graphs, bad)
}

fn criterion_5(sweeps: &Sweeps) -> Outcome {
    let reports: Vec<CheckReport> = sweeps.required.iter().map(|s| s.lemma1_report()).collect();
    let checked: u64 = reports.iter().map(|r| r.checked).sum();
    let failures: u64 = reports.iter().map(|r| r.failures).sum();
    let ((graphs, bad), elapsed) = timed(validate_oracle);
    let mut detail = format!(
        "{checked} reached LC2 configurations, {failures} non-maximal extractions; oracle validated on {graphs} \
         graphs (all labeled graphs n<=7, 20000 sampled n=7 and n=8, K8) with {} discrepancies in {:.1}s",
        bad.len(),
        elapsed.as_secs_f64()
    );
    if let Some(f) = first_failure(&reports) {
        detail.push_str(&format!("; first: {f}"));
    }
    if let Some(b) = bad.first() {
        detail.push_str(&format!("; oracle: {b}"));
    }
    Outcome::new(failures == 0 && bad.is_empty(), detail)
}

fn criterion_6() -> Outcome {
    let t = Topology::path(5).unwrap();
    let space = StateSpace::new(&t, DEFAULT_BUDGET).unwrap();
    let mut parts = Vec::new();
    let mut pass = true;
    for byz in [NodeSet::new(), NodeSet::from([0])] {
        let report = check_lemma5(&t, &byz, DEFAULT_BUDGET).unwrap();
        // Forward direction through quiescence: no 2-honest node is enabled
        // in any LC2 configuration.
        let v2 = t.c_honest_set(&byz, 2);
        let mut lc2 = 0;
        let mut enabled = 0;
        for cfg in space.iter() {
            if v2.iter().all(|v| spec(&t, &cfg, v)) {
                lc2 += 1;
                enabled += v2.iter().filter(|&v| !enabled_rules(&t, &cfg, v).is_empty()).count();
            }
        }
        pass &= report.passed && enabled == 0;
        parts.push(format!(
            "byz={:?}: {} configs, {} mismatches, {lc2} LC2 configs with {enabled} enabled 2-honest nodes",
            byz.to_vec(),
            report.universe,
            report.failures
        ));
    }
    Outcome::new(pass, parts.join("; "))
}

fn criterion_7(sweeps: &Sweeps) -> Outcome {
    let reports: Vec<CheckReport> = sweeps
        .required
        .iter()
        .filter(|s| !s.byzantine.is_empty())
        .map(|s| s.lemma7_report())
        .collect();
    let runs: u64 = reports.iter().map(|r| r.checked).sum();
    let failures: u64 = reports.iter().map(|r| r.failures).sum();
    let worst = sweeps
        .required
        .iter()
        .filter(|s| !s.byzantine.is_empty())
        .flat_map(|s| s.runs.iter().map(|r| r.potential_increases))
        .max()
        .unwrap_or(0);
    let mut detail = format!("{runs} traces with a Byzantine node, {failures} over the bound, most increases in one trace {worst}");
    if let Some(f) = first_failure(&reports) {
        detail.push_str(&format!("; first: {f}"));
    }
    Outcome::new(failures == 0, detail)
}

fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t2");
    let o = byzmatch(&["run", "theorem2", "--out", out.to_str().unwrap()]);
    if !o.status.success() {
        return Outcome::new(false, format!("run failed: {}", String::from_utf8_lossy(&o.stderr)));
    }
    let s: RunSummary = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let events = read_events(&fs::read_to_string(out.join("trace.jsonl")).unwrap()).unwrap();

    let lc1 = s.legitimacy.iter().any(|l| l.radius == 1 && l.initial);
    let dead = s.initial_predicates[2] == Predicate::Dead;
    let first_byz = events.iter().find(|e| e.kind == byzmatch_core::trace::StepKind::Byz);
    let single = first_byz.is_some_and(|e| e.predicates[2] == Predicate::Single && e.predicates[1] == Predicate::Proposing);
    let r1 = s.containment_at(1).unwrap();
    let r1_broken = r1.violations.first().is_some_and(|v| v.node == 2 && v.step == 0);
    let r2 = s.containment_at(2).unwrap();
    let r2_ok = r2.nodes == NodeSet::from([3, 4]) && r2.contained_throughout() && r2.horizon == 1001;
    let stable_prefs = events
        .iter()
        .all(|e| e.predicates[3] == Predicate::Married && e.predicates[4] == Predicate::Married)
        && events.len() == 1000;
    Outcome::new(
        lc1 && dead && single && r1_broken && r2_ok && stable_prefs,
        format!(
            "initial in LC1={lc1}, node 2 initially Dead={dead}, Single after first Byzantine step={single}, \
             radius-1 violation at node 2 step 0={r1_broken}, radius-2 nodes {:?} contained over {} configurations={r2_ok}, \
             nodes 3 and 4 married in all {} events={stable_prefs}",
            r2.nodes.to_vec(),
            r2.horizon,
            events.len()
        ),
    )
}

fn criterion_9(sweeps: &Sweeps) -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("seeded.json");
    fs::write(
        &scenario,
        r#"{"format":1,"graph":{"kind":"ring","n":6},"initial":{"random":11},
            "byzantine":{"nodes":[0],"strategy":{"kind":"random-state","seed":0}},
            "daemon":{"kind":"seeded-random-fair","seed":0,"byz_period":2},"max_steps":1000}"#,
    )
    .unwrap();
    let traces: Vec<Vec<u8>> = (0..2)
        .map(|i| {
            let out = dir.path().join(format!("r{i}"));
            let o = byzmatch(&["run", scenario.to_str().unwrap(), "--seed", "42", "--out", out.to_str().unwrap()]);
            assert!(o.status.success());
            fs::read(out.join("trace.jsonl")).unwrap()
        })
        .collect();
    let identical = traces[0] == traces[1] && !traces[0].is_empty();

    let reports: Vec<CheckReport> = sweeps
        .required
        .iter()
        .chain(&sweeps.random)
        .map(|s| s.fairness_report())
        .collect();
    let runs: u64 = reports.iter().map(|r| r.checked).sum();
    let failures: u64 = reports.iter().map(|r| r.failures).sum();
    let mut detail = format!(
        "seeded trace byte-identical across runs={identical} ({} bytes); fairness audit over {runs} runs \
         (round-robin, greedy, seeded random) found {failures} starved runs",
        traces[0].len()
    );
    if let Some(f) = first_failure(&reports) {
        detail.push_str(&format!("; first: {f}"));
    }
    Outcome::new(identical && failures == 0, detail)
}

fn main() -> ExitCode {
    let mut results: Vec<(u8, &str, Outcome, Duration)> = Vec::new();
    let mut record = |n, name, f: &mut dyn FnMut() -> Outcome| {
        let (o, d) = timed(f);
        let line = format!(
            "{} criterion {n} ({name}): {} [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            d.as_secs_f64()
        );
        println!("{line}");
        results.push((n, name, o, d));
    };

    record(1, "predicate partition", &mut criterion_1);
    record(2, "variant decrease", &mut criterion_2);
    record(3, "closure", &mut criterion_3);

    let (sweeps, sweep_time) = timed(|| Sweeps {
        required: [DaemonPolicy::RoundRobinAge, DaemonPolicy::AdversarialGreedy]
            .iter()
            .flat_map(|p| run_sweeps(p, false))
            .collect(),
        random: run_sweeps(&DaemonPolicy::SeededRandomFair { seed: 42 }, false),
    });
    println!("     convergence sweeps computed in {:.1}s", sweep_time.as_secs_f64());

    record(4, "convergence", &mut || criterion_4(&sweeps));
    record(5, "maximal matching oracle", &mut || criterion_5(&sweeps));
    record(6, "zero potential iff LC2", &mut criterion_6);
    record(7, "potential increase bound", &mut || criterion_7(&sweeps));
    record(8, "radius-1 impossibility demonstration", &mut criterion_8);
    record(9, "determinism and fairness", &mut || criterion_9(&sweeps));

    let failed: Vec<u8> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {}/{} criteria passed{}",
        results.len() - failed.len(),
        results.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!(", failing: {failed:?}")
        }
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
