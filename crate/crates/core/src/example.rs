//! Eight-variable reference structure used throughout the tests and the CLI.
//!
//! ```text
//! X2 -> X3 -> X4 -> X5 -> X6 -> X7 -> X8,  X1 -> X5,  X1 -> X8
//! selection: {X1, X3}, {X1, X8}, {X4, X8}
//! confounded: {X3, X6}
//! ```

use crate::graph::SequentialCausalGraph;

pub fn eight_variable_graph() -> SequentialCausalGraph {
    let mut g = SequentialCausalGraph::new(8).expect("non-empty");
    for (i, j) in [
        (1, 5),
        (1, 8),
        (2, 3),
        (3, 4),
        (4, 5),
        (5, 6),
        (6, 7),
        (7, 8),
    ] {
        g.add_direct_edge(i, j).expect("valid edge");
    }
    for group in [[1, 3], [1, 8], [4, 8]] {
        g.add_selection_group(group).expect("valid group");
    }
    g.add_confounder_pair(3, 6).expect("valid pair");
    g
}
