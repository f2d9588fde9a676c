use std::fmt::Write;

use super::SequentialCausalGraph;

/// Graphviz rendering. Observed nodes are `X1..XN`, selection variables
/// `S1..` drawn with a double border, confounders `C1..` dashed. Latent nodes
/// are numbered from 1 in the graph's canonical group/pair order.
pub fn to_dot(g: &SequentialCausalGraph) -> String {
    let mut out = String::new();
    out.push_str("digraph G {\n");
    out.push_str("  rankdir=LR;\n");
    out.push_str("  node [shape=circle];\n");
    for v in 1..=g.n_observed() {
        let _ = writeln!(out, "  X{v} [label=\"X{v}\"];");
    }
    for u in 1..=g.selection_groups().len() {
        let _ = writeln!(out, "  S{u} [label=\"S{u}\", peripheries=2];");
    }
    for u in 1..=g.confounder_pairs().len() {
        let _ = writeln!(out, "  C{u} [label=\"C{u}\", style=dashed];");
    }
    for (i, j) in g.direct_edges() {
        let _ = writeln!(out, "  X{i} -> X{j};");
    }
    for (u, group) in g.selection_groups().iter().enumerate() {
        for v in group {
            let _ = writeln!(out, "  X{v} -> S{};", u + 1);
        }
    }
    for (u, (a, b)) in g.confounder_pairs().iter().enumerate() {
        let _ = writeln!(out, "  C{} -> X{a} [style=dashed];", u + 1);
        let _ = writeln!(out, "  C{} -> X{b} [style=dashed];", u + 1);
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::example::eight_variable_graph;

    #[test]
    fn empty_two_node_graph() {
        let dot = to_dot(&SequentialCausalGraph::new(2).unwrap());
        assert!(dot.contains("X1 [label=\"X1\"]"));
        assert!(dot.contains("X2 [label=\"X2\"]"));
        assert!(!dot.contains("->"));
    }

    #[test]
    fn eight_variable_rendering() {
        let dot = to_dot(&eight_variable_graph());
        assert_eq!(dot.matches("peripheries=2").count(), 3);
        assert!(dot.contains("X1 -> S1;\n  X3 -> S1;"));
        assert!(dot.contains("X1 -> S2;\n  X8 -> S2;"));
        assert!(dot.contains("X4 -> S3;\n  X8 -> S3;"));
        assert!(dot.contains("C1 -> X3 [style=dashed];"));
        assert!(dot.contains("C1 -> X6 [style=dashed];"));
        let direct = dot
            .lines()
            .filter(|l| l.trim().starts_with('X') && l.contains("-> X"))
            .count();
        assert_eq!(direct, 8);
    }
}
