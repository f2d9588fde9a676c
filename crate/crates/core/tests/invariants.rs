//! Property tests over random graphs: serialization, DOT output and scoring.

use graphviz_rust::dot_structures::{Graph, Stmt};
use proptest::prelude::*;
use seqsel::eval::{
    compare, read_report_csv, relations, write_report_csv, EvalReport, RelationKind,
    ReplicateReport,
};
use seqsel::graph::to_dot;
use seqsel::{Dataset64, Matrix64, SequentialCausalGraph};

fn pairs(n: usize) -> Vec<(usize, usize)> {
    (1..=n)
        .flat_map(|i| (i + 1..=n).map(move |j| (i, j)))
        .collect()
}

fn any_graph() -> impl Strategy<Value = SequentialCausalGraph> {
    (2usize..=9).prop_flat_map(graph_of)
}

fn graph_pair() -> impl Strategy<Value = (SequentialCausalGraph, SequentialCausalGraph)> {
    (2usize..=9).prop_flat_map(|n| (graph_of(n), graph_of(n)))
}

fn graph_of(n: usize) -> impl Strategy<Value = SequentialCausalGraph> {
    (
        Just(n),
        proptest::collection::vec(any::<bool>(), n * (n - 1) / 2),
        proptest::collection::vec(proptest::collection::btree_set(1..=n, 2..=n.min(3)), 0..4),
        proptest::collection::vec((1..=n, 1..=n), 0..3),
    )
        .prop_map(|(n, bits, groups, conf)| {
            let mut g = SequentialCausalGraph::new(n).unwrap();
            for (b, (i, j)) in pairs(n).into_iter().enumerate() {
                if bits[b] {
                    g.add_direct_edge(i, j).unwrap();
                }
            }
            for grp in groups {
                g.add_selection_group(grp).unwrap();
            }
            for (a, b) in conf {
                if a != b {
                    g.add_confounder_pair(a, b).unwrap();
                }
            }
            g
        })
}

/// Same structure, latent variables inserted in reverse order.
fn reinserted(g: &SequentialCausalGraph) -> SequentialCausalGraph {
    let mut h = SequentialCausalGraph::new(g.n_observed()).unwrap();
    for (i, j) in g.direct_edges() {
        h.add_direct_edge(i, j).unwrap();
    }
    for grp in g.selection_groups().iter().rev() {
        h.add_selection_group(grp.iter().rev().copied()).unwrap();
    }
    for &(a, b) in g.confounder_pairs().iter().rev() {
        h.add_confounder_pair(b, a).unwrap();
    }
    h
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn json_round_trip(g in any_graph()) {
        prop_assert_eq!(SequentialCausalGraph::from_json(&g.to_json()).unwrap(), g.clone());
        prop_assert_eq!(SequentialCausalGraph::from_json(&g.to_json_pretty()).unwrap(), g);
    }

    #[test]
    fn dot_output_parses(g in any_graph()) {
        let parsed = graphviz_rust::parse(&to_dot(&g)).map_err(TestCaseError::fail)?;
        let stmts = match parsed {
            Graph::DiGraph { stmts, .. } => stmts,
            Graph::Graph { .. } => return Err(TestCaseError::fail("undirected graph")),
        };
        let nodes = stmts.iter().filter(|s| matches!(s, Stmt::Node(_))).count();
        let edges = stmts.iter().filter(|s| matches!(s, Stmt::Edge(_))).count();
        let latent_nodes = g.selection_groups().len() + g.confounder_pairs().len();
        let latent_edges: usize = g.selection_groups().iter().map(Vec::len).sum::<usize>() + 2 * g.confounder_pairs().len();
        prop_assert_eq!(nodes, g.n_observed() + latent_nodes);
        prop_assert_eq!(edges, g.n_direct_edges() + latent_edges);
    }

    #[test]
    fn self_comparison_is_perfect(g in any_graph()) {
        let r = compare(&g, &g).unwrap();
        for k in RelationKind::ALL {
            let s = r.score(k);
            prop_assert_eq!((s.precision, s.recall, s.fp, s.fn_), (1.0, 1.0, 0, 0));
        }
    }

    #[test]
    fn comparison_ignores_latent_order((a, b) in graph_pair()) {
        prop_assert_eq!(compare(&a, &b).unwrap(), compare(&reinserted(&a), &reinserted(&b)).unwrap());
    }

    #[test]
    fn counts_partition_the_truth((a, b) in graph_pair()) {
        let r = compare(&a, &b).unwrap();
        let truth = relations(&a);
        let estimate = relations(&b);
        for k in RelationKind::ALL {
            let s = r.score(k);
            prop_assert_eq!(s.tp + s.fn_, truth.values().filter(|v| **v == k).count());
            prop_assert_eq!(s.tp + s.fp, estimate.values().filter(|v| **v == k).count());
        }
    }

    #[test]
    fn selection_pairs_follow_groups(g in any_graph()) {
        for (i, j) in pairs(g.n_observed()) {
            let in_group = g.selection_groups().iter().any(|grp| grp.contains(&i) && grp.contains(&j));
            prop_assert_eq!(g.is_selection_pair(i, j), in_group);
        }
    }

    #[test]
    fn dataset_csv_round_trip(rows in 1usize..20, cols in 2usize..6, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<f64> = (0..rows * cols).map(|_| rng.random_range(-1e6..1e6)).collect();
        let data = Dataset64::new(Matrix64::from_row_major(rows, cols, values)).unwrap();
        let mut buf = Vec::new();
        data.to_csv(&mut buf).unwrap();
        prop_assert_eq!(Dataset64::from_csv(buf.as_slice()).unwrap(), data);
    }

    #[test]
    fn report_csv_round_trip((a, b) in graph_pair(), q in any::<u32>(), t in 0.0f64..100.0) {
        let report = EvalReport { ci_query_count: q as u64, wall_time: t, ..compare(&a, &b).unwrap() };
        let rows = vec![ReplicateReport { n_vars: a.n_observed(), seed: q as u64, n_samples: 7, report: Some(report), error: None }];
        let mut buf = Vec::new();
        write_report_csv(&rows, &mut buf).unwrap();
        prop_assert_eq!(read_report_csv(buf.as_slice()).unwrap(), rows);
    }
}
