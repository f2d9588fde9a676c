//! Three-stage identification of selection pairs, direct relations and
//! confounded pairs from conditional-independence queries.
//!
//! * Stage one collects candidate dependent pairs into per-variable lists
//!   `R[i]`, scanning lags from `N-1` down to 1.
//! * Stage two walks the candidates in descending order and decides whether
//!   `X_j` acts as a collider between `X_i` and a nearby `X_k`, which
//!   separates selection pairs from direct relations (or both).
//! * Stage three, only when latent confounders are allowed, turns pairs of
//!   direct relations `i-1 -> j`, `i -> j` into a confounded pair `{i, j}`
//!   when `X_i` turns out to be a collider between `X_{i-1}` and `X_j`.
//!
//! Every stage is sequential: later queries depend on earlier outcomes.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ci::{CiError, CiProvider, CiQuery};
use crate::graph::{GraphError, SequentialCausalGraph};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiscoveryError {
    #[error("discovery needs at least two variables, got {0}")]
    TooFewVariables(usize),
    #[error("provider answers for {provider} variables, discovery asked for {requested}")]
    VariableCountMismatch { provider: usize, requested: usize },
    #[error("significance level {0} is outside (0, 1)")]
    InvalidAlpha(f64),
    #[error(transparent)]
    Ci(#[from] CiError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscoveryOptions {
    /// Run stage three (latent confounders present).
    pub with_confounders: bool,
    /// Significance level for statistical providers.
    pub alpha: f64,
    /// Record one [`TraceRecord`] per query.
    pub trace: bool,
}

impl Default for DiscoveryOptions {
    fn default() -> Self {
        Self {
            with_confounders: true,
            alpha: 0.05,
            trace: false,
        }
    }
}

impl DiscoveryOptions {
    pub fn validate(&self) -> Result<(), DiscoveryError> {
        if self.alpha > 0.0 && self.alpha < 1.0 {
            Ok(())
        } else {
            Err(DiscoveryError::InvalidAlpha(self.alpha))
        }
    }
}

/// One issued query. `pair` is the candidate under consideration, `i`/`j`
/// the tested variables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub stage: u8,
    pub pair: [usize; 2],
    pub i: usize,
    pub j: usize,
    pub conditioning: Vec<usize>,
    pub independent: bool,
}

/// Working memory of one run.
#[derive(Debug, Clone)]
pub struct DiscoveryState {
    n_vars: usize,
    // R[i], in insertion order (descending j)
    r_lists: BTreeMap<usize, Vec<usize>>,
    l_list: Vec<usize>,
    edges: SequentialCausalGraph,
    s_counter: usize,
    c_counter: usize,
    trace: Option<Vec<TraceRecord>>,
}

impl DiscoveryState {
    fn new(n_vars: usize, trace: bool) -> Result<Self, DiscoveryError> {
        Ok(Self {
            n_vars,
            r_lists: BTreeMap::new(),
            l_list: Vec::new(),
            edges: SequentialCausalGraph::new(n_vars)?,
            s_counter: 0,
            c_counter: 0,
            trace: trace.then(Vec::new),
        })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    /// `R[i]` in insertion order; empty when `i` has no candidates.
    pub fn r_list(&self, i: usize) -> &[usize] {
        self.r_lists.get(&i).map_or(&[], Vec::as_slice)
    }

    /// Non-empty candidate lists as `(i, R[i])`, ascending in `i`.
    pub fn r_lists(&self) -> Vec<(usize, Vec<usize>)> {
        self.r_lists
            .iter()
            .filter(|(_, r)| !r.is_empty())
            .map(|(&i, r)| (i, r.clone()))
            .collect()
    }

    /// `L`, one entry per appended candidate.
    pub fn l_list(&self) -> &[usize] {
        &self.l_list
    }

    /// Candidate pairs `(i, j)` currently held in the lists.
    pub fn candidate_pairs(&self) -> BTreeSet<(usize, usize)> {
        self.r_lists
            .iter()
            .flat_map(|(&i, r)| r.iter().map(move |&j| (i, j)))
            .collect()
    }

    /// Structure recorded so far.
    pub fn graph(&self) -> &SequentialCausalGraph {
        &self.edges
    }

    pub fn into_graph(self) -> SequentialCausalGraph {
        self.edges
    }

    /// Latent selection variables created so far.
    pub fn selection_count(&self) -> usize {
        self.s_counter
    }

    /// Latent confounders created so far.
    pub fn confounder_count(&self) -> usize {
        self.c_counter
    }

    pub fn trace(&self) -> &[TraceRecord] {
        self.trace.as_deref().unwrap_or(&[])
    }

    pub fn take_trace(&mut self) -> Vec<TraceRecord> {
        self.trace.as_mut().map(std::mem::take).unwrap_or_default()
    }

    fn r_contains(&self, i: usize, v: usize) -> bool {
        self.r_list(i).contains(&v)
    }

    /// `Pre(limit) \ exclude`, i.e. `{1, .., limit-1}` without `exclude`.
    fn predecessors(limit: usize, exclude: &[usize]) -> BTreeSet<usize> {
        (1..limit).filter(|v| !exclude.contains(v)).collect()
    }

    /// `X_{v}` if it exists; `X_{N+1}` is absent.
    fn successor(&self, v: usize) -> Option<usize> {
        (v < self.n_vars).then_some(v + 1)
    }

    fn independent<P: CiProvider + ?Sized>(
        &mut self,
        ci: &P,
        stage: u8,
        pair: (usize, usize),
        x: usize,
        y: usize,
        mut conditioning: BTreeSet<usize>,
    ) -> Result<bool, DiscoveryError> {
        conditioning.remove(&x);
        conditioning.remove(&y);
        let query = CiQuery::new(x, y, conditioning)?;
        let independent = ci.is_independent(&query)?.independent;
        if let Some(trace) = self.trace.as_mut() {
            trace.push(TraceRecord {
                stage,
                pair: [pair.0, pair.1],
                i: x,
                j: y,
                conditioning: query.conditioning,
                independent,
            });
        }
        Ok(independent)
    }
}

fn check_provider<P: CiProvider + ?Sized>(ci: &P, n_vars: usize) -> Result<(), DiscoveryError> {
    if n_vars < 2 {
        return Err(DiscoveryError::TooFewVariables(n_vars));
    }
    if ci.n_vars() != n_vars {
        return Err(DiscoveryError::VariableCountMismatch {
            provider: ci.n_vars(),
            requested: n_vars,
        });
    }
    Ok(())
}

/// Stage one: candidate dependent pairs.
///
/// For lags `l = N-1, .., 1` and `i` ascending with `j = i + l`, the pair
/// joins `L`/`R[i]` iff `X_i ⫫̸ X_j | X_{Pre(j)\i}` and, for every `k`
/// already in `R[i]`, `X_i ⫫̸ X_j | {X_{Pre(j)\i}, X_{j+1}, X_k}`. An empty
/// `R[i]` still runs the second test once, without `X_k`.
pub fn stage_one<P: CiProvider + ?Sized>(
    ci: &P,
    n_vars: usize,
    trace: bool,
) -> Result<DiscoveryState, DiscoveryError> {
    check_provider(ci, n_vars)?;
    let mut state = DiscoveryState::new(n_vars, trace)?;
    for lag in (1..n_vars).rev() {
        for i in 1..=n_vars - lag {
            let j = i + lag;
            let base = DiscoveryState::predecessors(j, &[i]);
            if state.independent(ci, 1, (i, j), i, j, base.clone())? {
                continue;
            }
            let mut extended = base;
            extended.extend(state.successor(j));
            let earlier = state.r_list(i).to_vec();
            let keep = if earlier.is_empty() {
                !state.independent(ci, 1, (i, j), i, j, extended)?
            } else {
                let mut all_dependent = true;
                for k in earlier {
                    let mut cond = extended.clone();
                    cond.insert(k);
                    if state.independent(ci, 1, (i, j), i, j, cond)? {
                        all_dependent = false;
                        break;
                    }
                }
                all_dependent
            };
            if keep {
                state.l_list.push(i);
                state.r_lists.entry(i).or_default().push(j);
            }
        }
    }
    Ok(state)
}

/// Stage two: classify every candidate as a selection pair, a direct
/// relation, or both.
///
/// `i` runs over `L` and `j` over `R[i]`, both descending. `k` starts at
/// `j-1` and moves down while it is itself in `R[i]` and above `i+1`. `T`
/// holds the higher-indexed member of every selection pair recorded so far.
pub fn stage_two<P: CiProvider + ?Sized>(
    ci: &P,
    mut state: DiscoveryState,
) -> Result<DiscoveryState, DiscoveryError> {
    check_provider(ci, state.n_vars)?;
    let mut sources: Vec<usize> = state.l_list.clone();
    sources.sort_unstable_by(|a, b| b.cmp(a));
    sources.dedup();

    for i in sources {
        let mut upper = usize::MAX;
        // R[i] may shrink while it is being walked
        while let Some(j) = state.r_list(i).iter().copied().filter(|&v| v < upper).max() {
            upper = j;
            let mut k = j - 1;
            while state.r_contains(i, k) && k > i + 1 {
                k -= 1;
            }
            if k == i {
                state.edges.add_direct_edge(i, j)?;
                continue;
            }
            let t: BTreeSet<usize> = state
                .edges
                .selection_groups()
                .iter()
                .flat_map(|g| g[1..].iter().copied())
                .collect();

            let mut with_j = DiscoveryState::predecessors(k, &[i]);
            with_j.insert(j);
            with_j.extend(&t);
            if state.independent(ci, 2, (i, j), i, k, with_j)? {
                state.edges.add_selection_group([i, j])?;
                state.s_counter += 1;
                continue;
            }

            let mut with_next = DiscoveryState::predecessors(k, &[i]);
            with_next.extend(state.successor(j));
            with_next.extend(&t);
            if state.independent(ci, 2, (i, j), i, k, with_next)? {
                state.edges.add_direct_edge(i, j)?;
            } else {
                state.edges.add_direct_edge(i, j)?;
                state.edges.add_selection_group([i, j])?;
                state.s_counter += 1;
                if let Some(list) = state.r_lists.get_mut(&i) {
                    list.retain(|&v| v != j - 1);
                }
            }
        }
    }
    Ok(state)
}

/// Stage three: detect confounded pairs and drop the spurious direct
/// relations they induce.
///
/// For `j = N, .., 3` and `i = N-1, .., 2`, whenever both `i -> j` and
/// `i-1 -> j` are recorded, test `X_{i-1} ⫫ X_j | {X_{Pre(j)\{i-1,i}},
/// X_{j+1}, T}` with `T` the variables after `j` forming a selection pair
/// with `X_{i-1}`, `X_i` or `X_{i+1}`. Independence means `{i, j}` is
/// confounded; both edges are removed immediately.
pub fn stage_three<P: CiProvider + ?Sized>(
    ci: &P,
    mut state: DiscoveryState,
) -> Result<DiscoveryState, DiscoveryError> {
    check_provider(ci, state.n_vars)?;
    let n = state.n_vars;
    for j in (3..=n).rev() {
        for i in (2..n).rev() {
            if !(state.edges.has_direct_edge(i, j) && state.edges.has_direct_edge(i - 1, j)) {
                continue;
            }
            let mut cond = DiscoveryState::predecessors(j, &[i - 1, i]);
            cond.extend(state.successor(j));
            for v in j + 1..=n {
                if [i - 1, i, i + 1]
                    .iter()
                    .any(|&u| state.edges.is_selection_pair(u, v))
                {
                    cond.insert(v);
                }
            }
            if state.independent(ci, 3, (i, j), i - 1, j, cond)? {
                state.edges.add_confounder_pair(i, j)?;
                state.edges.remove_direct_edge(i - 1, j);
                state.edges.remove_direct_edge(i, j);
                state.c_counter += 1;
            }
        }
    }
    Ok(state)
}

/// Result of a full run.
#[derive(Debug, Clone)]
pub struct Discovery {
    pub graph: SequentialCausalGraph,
    /// Empty unless tracing was requested.
    pub trace: Vec<TraceRecord>,
    /// Queries issued by this run.
    pub queries: u64,
}

/// Runs stage one, stage two and, when `with_confounders` is set, stage
/// three.
pub fn discover<P: CiProvider + ?Sized>(
    ci: &P,
    n_vars: usize,
    options: &DiscoveryOptions,
) -> Result<Discovery, DiscoveryError> {
    options.validate()?;
    let before = ci.query_count();
    let state = stage_one(ci, n_vars, options.trace)?;
    let state = stage_two(ci, state)?;
    let mut state = if options.with_confounders {
        stage_three(ci, state)?
    } else {
        state
    };
    let trace = state.take_trace();
    Ok(Discovery {
        graph: state.into_graph(),
        trace,
        queries: ci.query_count() - before,
    })
}
