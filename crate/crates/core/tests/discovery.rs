//! Discovery with the exact oracle: golden trace, known-good structures and
//! structural properties of the output.

use proptest::prelude::*;
use seqsel::eval::{compare, relations};
use seqsel::example::eight_variable_graph;
use seqsel::simulator::{random_structure, StructureSpec};
use seqsel::{
    discover, CiProvider, DSeparationOracle, DiscoveryOptions, SequentialCausalGraph, TraceRecord,
};

const GOLDEN_TRACE: &str = include_str!("data/eight_variable_trace.jsonl");

/// Truth graphs with the output of an independent implementation of the
/// procedure over an independent d-separation routine.
const FROZEN_RECOVERY: &str = include_str!("data/oracle_recovery.jsonl");

fn run(g: &SequentialCausalGraph, with_confounders: bool, trace: bool) -> seqsel::Discovery {
    let oracle = DSeparationOracle::new(g.clone());
    let options = DiscoveryOptions {
        with_confounders,
        trace,
        ..Default::default()
    };
    discover(&oracle, g.n_observed(), &options).unwrap()
}

#[test]
fn eight_variable_trace_matches_golden_file() {
    let expected: Vec<TraceRecord> = GOLDEN_TRACE
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let found = run(&eight_variable_graph(), true, true);
    assert_eq!(found.trace.len(), expected.len());
    for (k, (got, want)) in found.trace.iter().zip(&expected).enumerate() {
        assert_eq!(got, want, "record {k}");
    }
    assert_eq!(found.queries, expected.len() as u64);
}

#[test]
fn eight_variable_output() {
    let g = run(&eight_variable_graph(), true, false).graph;
    let edges: Vec<_> = g.direct_edges().collect();
    assert_eq!(
        edges,
        vec![
            (1, 2),
            (1, 5),
            (1, 8),
            (2, 3),
            (2, 6),
            (3, 4),
            (3, 6),
            (4, 5),
            (5, 6),
            (6, 7),
            (7, 8)
        ]
    );
    let groups: Vec<Vec<usize>> = g.selection_groups().to_vec();
    assert_eq!(
        groups,
        vec![
            vec![1, 3],
            vec![1, 5],
            vec![1, 8],
            vec![2, 6],
            vec![3, 6],
            vec![4, 8]
        ]
    );
    assert!(g.confounder_pairs().is_empty());
}

fn chain(n: usize) -> SequentialCausalGraph {
    let mut g = SequentialCausalGraph::new(n).unwrap();
    for i in 1..n {
        g.add_direct_edge(i, i + 1).unwrap();
    }
    g
}

#[test]
fn chains_and_isolated_variables_are_recovered() {
    for n in 2..=12 {
        for conf in [false, true] {
            assert_eq!(run(&chain(n), conf, false).graph, chain(n));
            let empty = SequentialCausalGraph::new(n).unwrap();
            assert_eq!(run(&empty, conf, false).graph, empty);
        }
    }
}

#[test]
fn matches_frozen_outputs_of_an_independent_implementation() {
    #[derive(serde::Deserialize)]
    struct Case {
        truth: SequentialCausalGraph,
        with_confounders: bool,
        expected: SequentialCausalGraph,
    }
    let mut cases = 0;
    for line in FROZEN_RECOVERY.lines() {
        let case: Case = serde_json::from_str(line).unwrap();
        let got = run(&case.truth, case.with_confounders, false).graph;
        assert_eq!(got, case.expected, "truth {}", case.truth.to_json());
        cases += 1;
    }
    assert_eq!(cases, 240);
}

/// On confounder-free structures, enabling the confounder stage must not
/// change the output.
#[test]
fn stage_three_is_a_no_op_without_confounders() {
    let mut mismatches = Vec::new();
    for seed in 0..300 {
        let n = 3 + (seed % 10) as usize;
        let g = random_structure(&StructureSpec::new(n, seed))
            .unwrap()
            .graph;
        if run(&g, false, false).graph != run(&g, true, false).graph {
            mismatches.push(seed);
        }
    }
    assert!(
        mismatches.is_empty(),
        "{} of 300 structures differ, seeds {mismatches:?}",
        mismatches.len()
    );
}

#[test]
fn trace_length_equals_query_count() {
    for seed in 0..40 {
        let g = random_structure(&StructureSpec::new(9, seed).with_confounders(true))
            .unwrap()
            .graph;
        let found = run(&g, true, true);
        assert_eq!(found.trace.len() as u64, found.queries);
        assert!(found
            .trace
            .iter()
            .all(|r| r.i < r.j && !r.conditioning.contains(&r.i)));
    }
}

#[test]
fn queries_are_counted_by_the_provider() {
    let oracle = DSeparationOracle::new(eight_variable_graph());
    let a = discover(&oracle, 8, &DiscoveryOptions::default()).unwrap();
    let b = discover(&oracle, 8, &DiscoveryOptions::default()).unwrap();
    assert_eq!(a.queries, b.queries);
    assert_eq!(oracle.query_count(), a.queries + b.queries);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn output_is_well_formed(n in 2usize..11, seed in any::<u64>(), conf in any::<bool>()) {
        let truth = random_structure(&StructureSpec::new(n, seed).with_confounders(conf)).unwrap().graph;
        let est = run(&truth, conf, false).graph;
        prop_assert_eq!(est.n_observed(), n);
        prop_assert!(est.selection_groups().iter().all(|g| g.len() == 2));
        prop_assert!(est.direct_edges().all(|(i, j)| i < j));
        for &(a, b) in est.confounder_pairs() {
            prop_assert!(!est.has_direct_edge(a, b));
        }
        // every reported pair is one stage one flagged as dependent
        let mut state = seqsel::discovery::stage_one(&DSeparationOracle::new(truth.clone()), n, false).unwrap();
        let candidates = state.candidate_pairs();
        prop_assert!(relations(&est).keys().all(|p| candidates.contains(p)));
        let _ = state.take_trace();
        let report = compare(&truth, &est).unwrap();
        prop_assert!(report.scores.values().all(|s| (0.0..=1.0).contains(&s.precision)));
    }
}
