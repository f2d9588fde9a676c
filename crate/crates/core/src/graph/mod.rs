//! Sequential causal graphs with latent selection and latent confounding.
//!
//! Observed variables are indexed `1..=N` in temporal order. Direct edges
//! always point forward in time. Every selection group stands for one latent
//! selection variable whose observed parents are the group members; every
//! confounder pair stands for one latent common cause of its two endpoints.
//! Latent nodes have no edges among themselves.

mod conditions;
mod dot;
mod dsep;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use conditions::{check_condition_1, check_condition_2, ConditionId, ConditionViolation};
pub use dot::to_dot;
pub use dsep::d_separated;

/// 1-based position of an observed variable in the temporal sequence.
pub type VariableIndex = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("variable index {index} is outside 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("direct edge {0} -> {1} points backwards in time")]
    TemporalOrder(usize, usize),
    #[error("selection group {0:?} must contain at least two distinct variables")]
    GroupTooSmall(Vec<usize>),
    #[error("confounder pair needs two distinct endpoints, got {0} twice")]
    DegenerateConfounder(usize),
    #[error("pair ({0}, {1}) must satisfy i < j")]
    UnorderedPair(usize, usize),
    #[error("query endpoint {0} is also in the conditioning set")]
    EndpointConditioned(usize),
    #[error("query endpoints must be distinct, got {0} twice")]
    SameEndpoint(usize),
    #[error("a graph needs at least one observed variable")]
    Empty,
}

/// Kind of a dependent pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DependencyKind {
    Selection,
    Direct,
    /// Simultaneously a selection pair and a direct relation.
    Both,
    Confounded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphJson", into = "GraphJson")]
pub struct SequentialCausalGraph {
    n_observed: usize,
    direct_edges: BTreeSet<(usize, usize)>,
    // each group sorted ascending; the list is kept in lexicographic order
    selection_groups: Vec<Vec<usize>>,
    // each pair (i, j) with i < j; the list is kept sorted
    confounder_pairs: Vec<(usize, usize)>,
}

impl SequentialCausalGraph {
    pub fn new(n_observed: usize) -> Result<Self, GraphError> {
        if n_observed == 0 {
            return Err(GraphError::Empty);
        }
        Ok(Self {
            n_observed,
            direct_edges: BTreeSet::new(),
            selection_groups: Vec::new(),
            confounder_pairs: Vec::new(),
        })
    }

    pub fn n_observed(&self) -> usize {
        self.n_observed
    }

    pub fn check_index(&self, index: usize) -> Result<(), GraphError> {
        if index == 0 || index > self.n_observed {
            Err(GraphError::IndexOutOfRange {
                index,
                n: self.n_observed,
            })
        } else {
            Ok(())
        }
    }

    /// Adds `i -> j`. Returns `false` if the edge was already present.
    pub fn add_direct_edge(&mut self, i: usize, j: usize) -> Result<bool, GraphError> {
        self.check_index(i)?;
        self.check_index(j)?;
        if i >= j {
            return Err(GraphError::TemporalOrder(i, j));
        }
        Ok(self.direct_edges.insert((i, j)))
    }

    pub fn remove_direct_edge(&mut self, i: usize, j: usize) -> bool {
        self.direct_edges.remove(&(i, j))
    }

    /// Adds one latent selection variable with the given observed parents.
    /// A group identical to an existing one is collapsed into it and `false`
    /// is returned.
    pub fn add_selection_group<I>(&mut self, members: I) -> Result<bool, GraphError>
    where
        I: IntoIterator<Item = usize>,
    {
        let group: BTreeSet<usize> = members.into_iter().collect();
        for &v in &group {
            self.check_index(v)?;
        }
        let group: Vec<usize> = group.into_iter().collect();
        if group.len() < 2 {
            return Err(GraphError::GroupTooSmall(group));
        }
        match self.selection_groups.binary_search(&group) {
            Ok(_) => Ok(false),
            Err(pos) => {
                self.selection_groups.insert(pos, group);
                Ok(true)
            }
        }
    }

    /// Removes the group with exactly these members, if present.
    pub fn remove_selection_group(&mut self, members: &[usize]) -> bool {
        let mut group = members.to_vec();
        group.sort_unstable();
        group.dedup();
        match self.selection_groups.binary_search(&group) {
            Ok(pos) => {
                self.selection_groups.remove(pos);
                true
            }
            Err(_) => false,
        }
    }

    /// Adds one latent confounder of `a` and `b` (order irrelevant).
    pub fn add_confounder_pair(&mut self, a: usize, b: usize) -> Result<bool, GraphError> {
        self.check_index(a)?;
        self.check_index(b)?;
        if a == b {
            return Err(GraphError::DegenerateConfounder(a));
        }
        let pair = (a.min(b), a.max(b));
        match self.confounder_pairs.binary_search(&pair) {
            Ok(_) => Ok(false),
            Err(pos) => {
                self.confounder_pairs.insert(pos, pair);
                Ok(true)
            }
        }
    }

    pub fn remove_confounder_pair(&mut self, a: usize, b: usize) -> bool {
        let pair = (a.min(b), a.max(b));
        match self.confounder_pairs.binary_search(&pair) {
            Ok(pos) => {
                self.confounder_pairs.remove(pos);
                true
            }
            Err(_) => false,
        }
    }

    pub fn direct_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.direct_edges.iter().copied()
    }

    pub fn n_direct_edges(&self) -> usize {
        self.direct_edges.len()
    }

    pub fn selection_groups(&self) -> &[Vec<usize>] {
        &self.selection_groups
    }

    pub fn confounder_pairs(&self) -> &[(usize, usize)] {
        &self.confounder_pairs
    }

    pub fn has_direct_edge(&self, i: usize, j: usize) -> bool {
        self.direct_edges.contains(&(i, j))
    }

    /// Whether some selection variable has both `a` and `b` as parents.
    pub fn is_selection_pair(&self, a: usize, b: usize) -> bool {
        a != b
            && self
                .selection_groups
                .iter()
                .any(|g| g.binary_search(&a).is_ok() && g.binary_search(&b).is_ok())
    }

    pub fn is_confounded_pair(&self, a: usize, b: usize) -> bool {
        self.confounder_pairs
            .binary_search(&(a.min(b), a.max(b)))
            .is_ok()
    }

    /// Whether the variable is a parent of any selection variable.
    pub fn causes_selection(&self, v: usize) -> bool {
        self.selection_groups
            .iter()
            .any(|g| g.binary_search(&v).is_ok())
    }

    /// Order-agnostic dependent-pair test; out-of-range indices are never
    /// dependent.
    pub fn is_dependent(&self, a: usize, b: usize) -> bool {
        if a == b {
            return false;
        }
        let (i, j) = (a.min(b), a.max(b));
        self.has_direct_edge(i, j) || self.is_selection_pair(i, j) || self.is_confounded_pair(i, j)
    }

    /// Classifies the pair `(i, j)`, `i < j`.
    pub fn dependency_kind(
        &self,
        i: usize,
        j: usize,
    ) -> Result<Option<DependencyKind>, GraphError> {
        self.check_index(i)?;
        self.check_index(j)?;
        if i >= j {
            return Err(GraphError::UnorderedPair(i, j));
        }
        let selection = self.is_selection_pair(i, j);
        let direct = self.has_direct_edge(i, j);
        Ok(match (selection, direct) {
            (true, true) => Some(DependencyKind::Both),
            (true, false) => Some(DependencyKind::Selection),
            (false, true) => Some(DependencyKind::Direct),
            (false, false) if self.is_confounded_pair(i, j) => Some(DependencyKind::Confounded),
            (false, false) => None,
        })
    }

    /// All unordered pairs `(i, j)`, `i < j`, joined by a selection variable.
    pub fn selection_pairs(&self) -> BTreeSet<(usize, usize)> {
        let mut out = BTreeSet::new();
        for g in &self.selection_groups {
            for (a, &x) in g.iter().enumerate() {
                for &y in &g[a + 1..] {
                    out.insert((x, y));
                }
            }
        }
        out
    }

    /// All dependent pairs `(i, j)`, `i < j`.
    pub fn dependent_pairs(&self) -> BTreeSet<(usize, usize)> {
        let mut out = self.selection_pairs();
        out.extend(self.direct_edges.iter().copied());
        out.extend(self.confounder_pairs.iter().copied());
        out
    }

    /// Replaces every maximal set of variables that are pairwise selection
    /// pairs by a single selection group over the whole set. The conditional
    /// independence structure over observed variables is unchanged.
    pub fn merge_selection_cliques(&self) -> Self {
        let pairs = self.selection_pairs();
        let mut adjacency: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); self.n_observed + 1];
        for &(a, b) in &pairs {
            adjacency[a].insert(b);
            adjacency[b].insert(a);
        }
        let candidates: BTreeSet<usize> = (1..=self.n_observed)
            .filter(|&v| !adjacency[v].is_empty())
            .collect();
        let mut cliques = Vec::new();
        bron_kerbosch(
            &adjacency,
            BTreeSet::new(),
            candidates,
            BTreeSet::new(),
            &mut cliques,
        );
        let mut merged = self.clone();
        merged.selection_groups.clear();
        for clique in cliques {
            merged
                .add_selection_group(clique)
                .expect("maximal cliques have at least two valid members");
        }
        merged
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("graph serialization cannot fail")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

fn bron_kerbosch(
    adjacency: &[BTreeSet<usize>],
    current: BTreeSet<usize>,
    mut candidates: BTreeSet<usize>,
    mut excluded: BTreeSet<usize>,
    out: &mut Vec<BTreeSet<usize>>,
) {
    if candidates.is_empty() && excluded.is_empty() {
        if current.len() >= 2 {
            out.push(current);
        }
        return;
    }
    let pivot = candidates
        .union(&excluded)
        .max_by_key(|&&u| adjacency[u].intersection(&candidates).count())
        .copied()
        .expect("candidates or excluded is non-empty");
    let branch: Vec<usize> = candidates.difference(&adjacency[pivot]).copied().collect();
    for v in branch {
        let mut next = current.clone();
        next.insert(v);
        bron_kerbosch(
            adjacency,
            next,
            candidates.intersection(&adjacency[v]).copied().collect(),
            excluded.intersection(&adjacency[v]).copied().collect(),
            out,
        );
        candidates.remove(&v);
        excluded.insert(v);
    }
}

/// On-disk graph format with 1-based indices and sorted arrays.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct GraphJson {
    n_observed: usize,
    direct_edges: Vec<[usize; 2]>,
    selection_groups: Vec<Vec<usize>>,
    confounder_pairs: Vec<[usize; 2]>,
}

impl TryFrom<GraphJson> for SequentialCausalGraph {
    type Error = GraphError;

    fn try_from(raw: GraphJson) -> Result<Self, GraphError> {
        let mut g = SequentialCausalGraph::new(raw.n_observed)?;
        for [i, j] in raw.direct_edges {
            g.add_direct_edge(i, j)?;
        }
        for group in raw.selection_groups {
            g.add_selection_group(group)?;
        }
        for [a, b] in raw.confounder_pairs {
            g.add_confounder_pair(a, b)?;
        }
        Ok(g)
    }
}

impl From<SequentialCausalGraph> for GraphJson {
    fn from(g: SequentialCausalGraph) -> Self {
        GraphJson {
            n_observed: g.n_observed,
            direct_edges: g.direct_edges.iter().map(|&(i, j)| [i, j]).collect(),
            selection_groups: g.selection_groups,
            confounder_pairs: g.confounder_pairs.iter().map(|&(a, b)| [a, b]).collect(),
        }
    }
}
