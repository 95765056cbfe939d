use byzmatch_core::modelcheck::{
    check_closure, check_lemma5, check_lemma6, check_partition, theorem2_replay_with, ConvergenceSweep, StateSpace,
    DEFAULT_BUDGET,
};
use byzmatch_core::{AdversaryStrategy, DaemonPolicy, DaemonSpec, NodeSet, Protocol, Topology};

fn matrix() -> Vec<(&'static str, Topology)> {
    vec![
        ("P5", Topology::path(5).unwrap()),
        ("K3", Topology::complete(3).unwrap()),
        ("C4", Topology::ring(4).unwrap()),
        ("C5", Topology::ring(5).unwrap()),
        ("S5", Topology::star(5).unwrap()),
    ]
}

fn byz_sets(t: &Topology) -> Vec<NodeSet> {
    std::iter::once(NodeSet::new())
        .chain(t.nodes().map(|v| NodeSet::from([v])))
        .collect()
}

#[test]
fn state_space_sizes_match_closed_form() {
    // Product over nodes of (deg + 1) * deg.
    let expected = [("P5", 864u128), ("K3", 216), ("C4", 1296), ("C5", 7776), ("S5", 20 * 2 * 2 * 2 * 2)];
    for ((name, t), (ename, size)) in matrix().into_iter().zip(expected) {
        assert_eq!(name, ename);
        assert_eq!(StateSpace::size(&t), size, "{name}");
        assert_eq!(StateSpace::new(&t, DEFAULT_BUDGET).unwrap().iter().count() as u128, size);
    }
}

#[test]
fn predicates_partition_every_configuration() {
    for (name, t) in matrix() {
        let r = check_partition(&t, DEFAULT_BUDGET).unwrap();
        assert!(r.passed, "{name}: {:?}", r.counterexamples);
    }
}

#[test]
fn potential_zero_exactly_on_lc2() {
    for (name, t) in matrix() {
        for byz in byz_sets(&t) {
            let r = check_lemma5(&t, &byz, DEFAULT_BUDGET).unwrap();
            assert!(r.passed, "{name} byz={:?}: {:?}", byz.to_vec(), r.counterexamples);
        }
    }
}

#[test]
fn every_two_honest_move_decreases_the_potential() {
    for (name, t) in matrix() {
        for byz in byz_sets(&t) {
            let r = check_lemma6(&t, &byz, Protocol::Ssmm, DEFAULT_BUDGET).unwrap();
            assert!(r.passed, "{name} byz={:?}: {:?}", byz.to_vec(), r.counterexamples);
        }
    }
}

#[test]
fn lc2_is_closed() {
    for (name, t) in matrix() {
        for byz in byz_sets(&t) {
            let r = check_closure(&t, &byz, Protocol::Ssmm, DEFAULT_BUDGET).unwrap();
            assert!(r.passed, "{name} byz={:?}: {:?}", byz.to_vec(), r.counterexamples);
        }
    }
}

#[test]
fn convergence_from_every_configuration_on_p5() {
    let t = Topology::path(5).unwrap();
    let strategies = [AdversaryStrategy::Divorcer, AdversaryStrategy::Oscillator { period: 1 }];
    for byz in byz_sets(&t) {
        let sweep = ConvergenceSweep::run(
            &t,
            &byz,
            &DaemonSpec::new(DaemonPolicy::RoundRobinAge, 2),
            &strategies,
            Protocol::Ssmm,
            250,
            DEFAULT_BUDGET,
        )
        .unwrap();
        for report in [
            sweep.convergence_report(),
            sweep.lemma1_report(),
            sweep.lemma7_report(),
            sweep.fairness_report(),
        ] {
            assert!(report.passed, "byz={:?} {}: {:?}", byz.to_vec(), report.property, report.counterexamples);
        }
    }
}

#[test]
fn counterexample_scenarios_replay() {
    // A budget of one step leaves most runs unconverged, which produces
    // counterexamples whose scenarios must reproduce the same outcome.
    let t = Topology::path(5).unwrap();
    let byz = NodeSet::from([0]);
    let sweep = ConvergenceSweep::run(
        &t,
        &byz,
        &DaemonSpec::default(),
        &[AdversaryStrategy::Divorcer],
        Protocol::Ssmm,
        1,
        DEFAULT_BUDGET,
    )
    .unwrap();
    let report = sweep.convergence_report();
    assert!(!report.passed);
    assert_eq!(report.counterexamples.len(), 5);
    let indices: Vec<_> = report.counterexamples.iter().map(|c| c.config_index.unwrap()).collect();
    assert!(indices.windows(2).all(|w| w[0] <= w[1]));
    for cx in &report.counterexamples {
        let scenario = cx.scenario.as_ref().unwrap();
        let round_trip = byzmatch_core::Scenario::from_json(&scenario.to_json_pretty()).unwrap();
        let inst = round_trip.resolve(None).unwrap();
        assert_eq!(inst.initial, cx.configuration);
        let (_, summary) = byzmatch_core::analysis::run_instance(&inst).unwrap();
        assert_eq!(summary.convergence_step, None);
    }
}

#[test]
fn baseline_also_loses_radius_one_containment() {
    let report = theorem2_replay_with(Protocol::Baseline);
    assert!(report.passed, "{:#?}", report.notes);
}

#[test]
fn baseline_variant_decrease_on_p5() {
    let t = Topology::path(5).unwrap();
    for byz in byz_sets(&t) {
        let r = check_lemma6(&t, &byz, Protocol::Baseline, DEFAULT_BUDGET).unwrap();
        assert!(r.passed, "byz={:?}: {:?}", byz.to_vec(), r.counterexamples);
    }
    for (name, t) in matrix() {
        let r = check_closure(&t, &NodeSet::new(), Protocol::Baseline, DEFAULT_BUDGET).unwrap();
        assert!(r.passed, "{name}: {:?}", r.counterexamples);
    }
}
