//! Structural conditions that exclude degenerate structures.
//!
//! Clauses that mention a variable outside `1..=N` (for example `X_{j+1}`
//! when `j = N`) are vacuously satisfied.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::SequentialCausalGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConditionId {
    /// Clause on selection pairs.
    C1i,
    /// Clause on direct relations and confounded pairs.
    C1ii,
    /// Clause on confounded pairs.
    C2,
}

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConditionId::C1i => "C1_i",
            ConditionId::C1ii => "C1_ii",
            ConditionId::C2 => "C2",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionViolation {
    pub condition: ConditionId,
    pub offending_pairs: Vec<(usize, usize)>,
    pub description: String,
}

impl fmt::Display for ConditionViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} {:?}",
            self.condition, self.description, self.offending_pairs
        )
    }
}

fn violation(
    condition: ConditionId,
    pairs: &[(usize, usize)],
    description: &str,
) -> ConditionViolation {
    ConditionViolation {
        condition,
        offending_pairs: pairs.to_vec(),
        description: description.to_owned(),
    }
}

/// A direct edge `(i, j)` with `j > i + 1`.
fn is_higher_order(i: usize, j: usize) -> bool {
    j > i + 1
}

fn higher_order_parents(g: &SequentialCausalGraph, j: usize) -> Vec<(usize, usize)> {
    g.direct_edges()
        .filter(|&(p, c)| c == j && is_higher_order(p, c))
        .collect()
}

fn in_range(g: &SequentialCausalGraph, v: usize) -> bool {
    v >= 1 && v <= g.n_observed()
}

/// Checks both clauses of the first structural condition.
///
/// Selection pairs `(i, j)`: `(j-1, j)` is dependent with `j-1 != i`;
/// `(i, j+1)` is not dependent; at most one higher-order direct relation
/// points into `X_j`; no direct relation `(i, i+1)` when `j = i + 2`.
///
/// Direct relations and confounded pairs `(i, j)` (a pair that is also a
/// selection pair is checked under both clauses): `(j-1, j)` is dependent;
/// if `X_j` causes a selection variable, `(i, j-1)` is not dependent; if
/// `j = i + 2`, `(i, j+1)` is not dependent.
pub fn check_condition_1(g: &SequentialCausalGraph) -> Vec<ConditionViolation> {
    let mut out = Vec::new();
    use ConditionId::{C1i, C1ii};

    for (i, j) in g.selection_pairs() {
        if j - 1 == i {
            out.push(violation(
                C1i,
                &[(i, j)],
                "selection pair needs (X_{j-1}, X_j) dependent with j-1 != i",
            ));
        } else if !g.is_dependent(j - 1, j) {
            out.push(violation(
                C1i,
                &[(i, j)],
                "selection pair needs (X_{j-1}, X_j) dependent",
            ));
        }
        if in_range(g, j + 1) && g.is_dependent(i, j + 1) {
            out.push(violation(
                C1i,
                &[(i, j), (i, j + 1)],
                "selection pair (X_i, X_j) forbids (X_i, X_{j+1}) dependent",
            ));
        }
        let ho = higher_order_parents(g, j);
        if ho.len() > 1 {
            let mut pairs = vec![(i, j)];
            pairs.extend(ho);
            out.push(violation(
                C1i,
                &pairs,
                "X_j of a selection pair is the effect of multiple higher-order direct relations",
            ));
        }
        if j == i + 2 && g.has_direct_edge(i, i + 1) {
            out.push(violation(
                C1i,
                &[(i, j), (i, i + 1)],
                "no direct relation (X_i, X_{i+1}) when selection pair has j = i+2",
            ));
        }
    }

    let mut non_selection: Vec<(usize, usize)> = g.direct_edges().collect();
    non_selection.extend(g.confounder_pairs().iter().copied());
    non_selection.sort_unstable();
    non_selection.dedup();
    for (i, j) in non_selection {
        if j - 1 != i && !g.is_dependent(j - 1, j) {
            out.push(violation(
                C1ii,
                &[(i, j)],
                "dependent pair needs (X_{j-1}, X_j) dependent",
            ));
        }
        if g.causes_selection(j) && j - 1 != i && g.is_dependent(i, j - 1) {
            out.push(violation(
                C1ii,
                &[(i, j), (i, j - 1)],
                "X_j causes a selection variable, so (X_i, X_{j-1}) must not be dependent",
            ));
        }
        if j == i + 2 && in_range(g, j + 1) && g.is_dependent(i, j + 1) {
            out.push(violation(
                C1ii,
                &[(i, j), (i, j + 1)],
                "no (X_i, X_{j+1}) dependent when j = i+2",
            ));
        }
    }
    out
}

/// Checks the second structural condition on every confounded pair `(i, j)`:
/// none of `(i-1, j-1)` dependent, `(i-1, j)` selection, `(i-1, i+1)` direct,
/// `(i, j)` selection, `(i+1, j-1)` dependent, `(i+1, j+1)` direct; and
/// neither endpoint belongs to another confounded pair or to a higher-order
/// direct relation.
pub fn check_condition_2(g: &SequentialCausalGraph) -> Vec<ConditionViolation> {
    let mut out = Vec::new();
    let c2 = ConditionId::C2;
    let confounded = g.confounder_pairs();
    let higher_order: Vec<(usize, usize)> = g
        .direct_edges()
        .filter(|&(a, b)| is_higher_order(a, b))
        .collect();

    for &(i, j) in confounded {
        let pair = (i, j);
        let pre = i.checked_sub(1).filter(|&v| v >= 1);
        let next = i + 1;
        let after = j + 1;

        if let Some(p) = pre {
            if g.is_dependent(p, j - 1) {
                out.push(violation(
                    c2,
                    &[pair, (p, j - 1)],
                    "confounded pair forbids (X_{i-1}, X_{j-1}) dependent",
                ));
            }
            if g.is_selection_pair(p, j) {
                out.push(violation(
                    c2,
                    &[pair, (p, j)],
                    "confounded pair forbids (X_{i-1}, X_j) selection",
                ));
            }
            if in_range(g, next) && g.has_direct_edge(p, next) {
                out.push(violation(
                    c2,
                    &[pair, (p, next)],
                    "confounded pair forbids (X_{i-1}, X_{i+1}) direct",
                ));
            }
        }
        if g.is_selection_pair(i, j) {
            out.push(violation(
                c2,
                &[pair],
                "confounded pair forbids (X_i, X_j) selection",
            ));
        }
        if next < j - 1 && g.is_dependent(next, j - 1) {
            out.push(violation(
                c2,
                &[pair, (next, j - 1)],
                "confounded pair forbids (X_{i+1}, X_{j-1}) dependent",
            ));
        }
        if in_range(g, after) && g.has_direct_edge(next, after) {
            out.push(violation(
                c2,
                &[pair, (next, after)],
                "confounded pair forbids (X_{i+1}, X_{j+1}) direct",
            ));
        }
        for &other in confounded {
            if other != pair
                && [other.0, other.1].iter().any(|v| *v == i || *v == j)
                && other > pair
            {
                out.push(violation(
                    c2,
                    &[pair, other],
                    "endpoint shared with another confounded pair",
                ));
            }
        }
        for &edge in &higher_order {
            if [edge.0, edge.1].iter().any(|v| *v == i || *v == j) {
                out.push(violation(
                    c2,
                    &[pair, edge],
                    "endpoint belongs to a higher-order direct relation",
                ));
            }
        }
    }
    out
}
