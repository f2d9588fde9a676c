//! Random structures under the structural conditions and linear-Gaussian
//! sampling with mean-threshold selection.
//!
//! Sampling is chunked: chunk `c` of a population draws from its own
//! ChaCha stream, so a population can be regenerated piecewise without
//! holding it in memory. [`generate`] uses this to compute the selection
//! thresholds in a first pass and filter rows in a second.

use std::collections::BTreeMap;

use rand::seq::index::sample as sample_indices;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ci::{Dataset, DatasetError};
use crate::graph::{check_condition_1, check_condition_2, GraphError, SequentialCausalGraph};
use crate::scalar::{Matrix, Scalar};

/// Insertion attempts per requested extra dependency.
pub const ATTEMPT_BUDGET: usize = 200;
/// Oversampling doublings before giving up.
pub const MAX_DOUBLINGS: u32 = 12;
/// Smallest acceptable selection survival rate.
pub const SURVIVAL_FLOOR: f64 = 1e-4;
const CHUNK_ROWS: usize = 4096;
const DATA_STREAM_BASE: u64 = 1 << 32;

#[derive(Debug, Error)]
pub enum SimulatorError {
    #[error("invalid structure spec: {0}")]
    InvalidSpec(String),
    #[error("no weight for {0}")]
    MissingWeight(String),
    #[error("sample size must be at least 1")]
    NoSamples,
    #[error("{selection} selection values for {raw} rows")]
    RowMismatch { selection: usize, raw: usize },
    #[error("no rows survive selection")]
    NoSurvivors,
    #[error("selection keeps {survivors} of {population} rows (rate {rate:e}); {needed} needed")]
    SurvivalFloor {
        survivors: usize,
        population: usize,
        rate: f64,
        needed: usize,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureSpec {
    pub n_vars: usize,
    pub allow_confounders: bool,
    /// Upper bound of the per-kind extra count, drawn from `0..=max`.
    pub max_extra_per_kind: usize,
    /// Optional cap on the number of selection pairs.
    pub max_selection: Option<usize>,
    /// Reject insertions that break the structural conditions.
    pub enforce_conditions: bool,
    pub seed: u64,
}

impl StructureSpec {
    /// Condition-checked spec with `max_extra_per_kind = ⌊N/2⌋` (0 below 3
    /// variables).
    pub fn new(n_vars: usize, seed: u64) -> Self {
        Self {
            n_vars,
            allow_confounders: false,
            max_extra_per_kind: if n_vars < 3 { 0 } else { n_vars / 2 },
            max_selection: None,
            enforce_conditions: true,
            seed,
        }
    }

    pub fn with_confounders(mut self, allow: bool) -> Self {
        self.allow_confounders = allow;
        self
    }

    pub fn with_max_selection(mut self, cap: usize) -> Self {
        self.max_selection = Some(cap);
        self
    }

    pub fn enforcing(mut self, enforce: bool) -> Self {
        self.enforce_conditions = enforce;
        self
    }

    pub fn validate(&self) -> Result<(), SimulatorError> {
        if self.n_vars < 2 {
            return Err(SimulatorError::InvalidSpec(format!(
                "need at least 2 variables, got {}",
                self.n_vars
            )));
        }
        if self.n_vars < 3 && self.max_extra_per_kind > 0 {
            return Err(SimulatorError::InvalidSpec(
                "extra dependencies need at least 3 variables".into(),
            ));
        }
        Ok(())
    }
}

/// Requested and realized numbers of extra dependencies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtraCounts {
    pub requested_selection: usize,
    pub realized_selection: usize,
    pub requested_higher_order: usize,
    pub realized_higher_order: usize,
    pub requested_confounders: usize,
    pub realized_confounders: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedStructure {
    pub graph: SequentialCausalGraph,
    pub first_order_kept: usize,
    pub counts: ExtraCounts,
}

/// Number of chain edges dropped: `⌊(N-1)/2⌋`.
pub fn dropped_chain_edges(n_vars: usize) -> usize {
    n_vars.saturating_sub(1) / 2
}

fn admissible(g: &SequentialCausalGraph, enforce: bool) -> bool {
    !enforce || (check_condition_1(g).is_empty() && check_condition_2(g).is_empty())
}

fn random_pair<R: Rng>(rng: &mut R, n: usize, min_gap: usize) -> Option<(usize, usize)> {
    if n <= min_gap {
        return None;
    }
    let i = rng.random_range(1..=n - min_gap);
    let j = rng.random_range(i + min_gap..=n);
    Some((i, j))
}

/// Draws a sequential structure: a chain with half of its edges dropped,
/// then random selection pairs, higher-order direct relations and (if
/// allowed) confounded pairs, each insertion kept only if the structural
/// conditions still hold.
pub fn random_structure(spec: &StructureSpec) -> Result<GeneratedStructure, SimulatorError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n_vars;
    let mut g = SequentialCausalGraph::new(n)?;

    let chain = n - 1;
    let drop = dropped_chain_edges(n);
    let mut dropped = vec![false; chain];
    for idx in sample_indices(&mut rng, chain, drop) {
        dropped[idx] = true;
    }
    for (k, gone) in dropped.iter().enumerate() {
        if !gone {
            g.add_direct_edge(k + 1, k + 2)?;
        }
    }

    let max = spec.max_extra_per_kind;
    let mut counts = ExtraCounts {
        requested_selection: rng.random_range(0..=max),
        requested_higher_order: rng.random_range(0..=max),
        ..ExtraCounts::default()
    };
    if spec.allow_confounders {
        counts.requested_confounders = rng.random_range(0..=max);
    }
    if let Some(cap) = spec.max_selection {
        counts.requested_selection = counts.requested_selection.min(cap);
    }

    for _ in 0..counts.requested_selection {
        for _ in 0..ATTEMPT_BUDGET {
            let Some((i, j)) = random_pair(&mut rng, n, 1) else {
                break;
            };
            if g.is_selection_pair(i, j) {
                continue;
            }
            g.add_selection_group([i, j])?;
            if admissible(&g, spec.enforce_conditions) {
                counts.realized_selection += 1;
                break;
            }
            g.remove_selection_group(&[i, j]);
        }
    }
    for _ in 0..counts.requested_higher_order {
        for _ in 0..ATTEMPT_BUDGET {
            let Some((i, j)) = random_pair(&mut rng, n, 2) else {
                break;
            };
            if g.has_direct_edge(i, j) {
                continue;
            }
            g.add_direct_edge(i, j)?;
            if admissible(&g, spec.enforce_conditions) {
                counts.realized_higher_order += 1;
                break;
            }
            g.remove_direct_edge(i, j);
        }
    }
    for _ in 0..counts.requested_confounders {
        for _ in 0..ATTEMPT_BUDGET {
            let Some((i, j)) = random_pair(&mut rng, n, 1) else {
                break;
            };
            if g.is_confounded_pair(i, j) {
                continue;
            }
            g.add_confounder_pair(i, j)?;
            if admissible(&g, spec.enforce_conditions) {
                counts.realized_confounders += 1;
                break;
            }
            g.remove_confounder_pair(i, j);
        }
    }

    Ok(GeneratedStructure {
        graph: g,
        first_order_kept: chain - drop,
        counts,
    })
}

/// How edge weights and noise scales are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightPolicy {
    /// Weight magnitudes are uniform on `[low, high]`.
    pub low: f64,
    pub high: f64,
    pub random_sign: bool,
    pub noise_std: f64,
    /// Noise scale of each selection variable; 0 makes selection a
    /// deterministic function of its parents.
    pub selection_noise_std: f64,
}

impl Default for WeightPolicy {
    fn default() -> Self {
        Self {
            low: 0.5,
            high: 1.5,
            random_sign: true,
            noise_std: 1.0,
            selection_noise_std: 1.0,
        }
    }
}

/// Linear-Gaussian mechanism over a [`SequentialCausalGraph`]. Selection and
/// confounder weights are listed in the order of the graph's groups and
/// pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScmParameters {
    pub direct: BTreeMap<(usize, usize), f64>,
    /// Per group, one weight per member.
    pub selection: Vec<Vec<f64>>,
    /// Per confounder, the weights onto its lower and higher child.
    pub confounder: Vec<[f64; 2]>,
    /// One entry per observed variable.
    pub noise_std: Vec<f64>,
    pub selection_noise_std: f64,
    pub weight_range: (f64, f64),
}

impl ScmParameters {
    /// Draws all weights for `g` from `policy`.
    pub fn draw<R: Rng>(g: &SequentialCausalGraph, policy: &WeightPolicy, rng: &mut R) -> Self {
        let mut weight = || {
            let magnitude = rng.random_range(policy.low..=policy.high);
            if policy.random_sign && rng.random_bool(0.5) {
                -magnitude
            } else {
                magnitude
            }
        };
        let direct = g.direct_edges().map(|e| (e, weight())).collect();
        let selection = g
            .selection_groups()
            .iter()
            .map(|grp| grp.iter().map(|_| weight()).collect())
            .collect();
        let confounder = g
            .confounder_pairs()
            .iter()
            .map(|_| [weight(), weight()])
            .collect();
        Self {
            direct,
            selection,
            confounder,
            noise_std: vec![policy.noise_std; g.n_observed()],
            selection_noise_std: policy.selection_noise_std,
            weight_range: (policy.low, policy.high),
        }
    }
}

/// Parent lists resolved against a graph, ready for row-wise simulation.
struct Mechanism {
    n: usize,
    /// Per observed variable (0-based): observed parents and weights.
    parents: Vec<Vec<(usize, f64)>>,
    /// Per observed variable: confounders feeding it and weights.
    latent: Vec<Vec<(usize, f64)>>,
    noise: Vec<f64>,
    n_confounders: usize,
    /// Per selection variable: parents and weights.
    selection: Vec<Vec<(usize, f64)>>,
    selection_noise: f64,
}

impl Mechanism {
    fn new(g: &SequentialCausalGraph, p: &ScmParameters) -> Result<Self, SimulatorError> {
        let n = g.n_observed();
        if p.noise_std.len() != n {
            return Err(SimulatorError::MissingWeight(format!(
                "noise scales: {} given for {n} variables",
                p.noise_std.len()
            )));
        }
        let mut parents = vec![Vec::new(); n];
        for (a, b) in g.direct_edges() {
            let w = p
                .direct
                .get(&(a, b))
                .ok_or_else(|| SimulatorError::MissingWeight(format!("edge X{a} -> X{b}")))?;
            parents[b - 1].push((a - 1, *w));
        }
        let mut latent = vec![Vec::new(); n];
        for (u, &(a, b)) in g.confounder_pairs().iter().enumerate() {
            let w = p.confounder.get(u).ok_or_else(|| {
                SimulatorError::MissingWeight(format!("confounder of X{a}, X{b}"))
            })?;
            latent[a - 1].push((u, w[0]));
            latent[b - 1].push((u, w[1]));
        }
        let mut selection = Vec::new();
        for (u, grp) in g.selection_groups().iter().enumerate() {
            let ws = p
                .selection
                .get(u)
                .filter(|ws| ws.len() == grp.len())
                .ok_or_else(|| SimulatorError::MissingWeight(format!("selection group {grp:?}")))?;
            selection.push(grp.iter().map(|v| v - 1).zip(ws.iter().copied()).collect());
        }
        Ok(Self {
            n,
            parents,
            latent,
            noise: p.noise_std.clone(),
            n_confounders: g.confounder_pairs().len(),
            selection,
            selection_noise: p.selection_noise_std,
        })
    }

    /// Fills `x` (length N) and `s` (one per selection variable).
    fn draw_row<R: Rng>(&self, rng: &mut R, c: &mut [f64], x: &mut [f64], s: &mut [f64]) {
        for v in c.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        for j in 0..self.n {
            let mut value = self.noise[j] * rng.sample::<f64, _>(StandardNormal);
            for &(p, w) in &self.parents[j] {
                value += w * x[p];
            }
            for &(u, w) in &self.latent[j] {
                value += w * c[u];
            }
            x[j] = value;
        }
        for (slot, parents) in s.iter_mut().zip(&self.selection) {
            let mut value = 0.0;
            if self.selection_noise > 0.0 {
                value = self.selection_noise * rng.sample::<f64, _>(StandardNormal);
            }
            for &(p, w) in parents {
                value += w * x[p];
            }
            *slot = value;
        }
    }

    /// Streams `m` rows to `sink`, one chunk-seeded stream per chunk.
    fn stream<F: FnMut(&[f64], &[f64]) -> bool>(&self, seed: u64, m: usize, mut sink: F) {
        let mut c = vec![0.0; self.n_confounders];
        let mut x = vec![0.0; self.n];
        let mut s = vec![0.0; self.selection.len()];
        let mut row = 0;
        let mut chunk = 0u64;
        while row < m {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(DATA_STREAM_BASE + chunk);
            let end = (row + CHUNK_ROWS).min(m);
            for _ in row..end {
                self.draw_row(&mut rng, &mut c, &mut x, &mut s);
                if !sink(&x, &s) {
                    return;
                }
            }
            row = end;
            chunk += 1;
        }
    }
}

/// Simulates `m` rows of the unselected population. Returns the observed
/// data and, separately, one column per selection variable.
pub fn sample_unselected<T: Scalar>(
    g: &SequentialCausalGraph,
    params: &ScmParameters,
    m: usize,
    seed: u64,
) -> Result<(Dataset<T>, Matrix<T>), SimulatorError> {
    if m == 0 {
        return Err(SimulatorError::NoSamples);
    }
    let mech = Mechanism::new(g, params)?;
    let mut xs = Vec::with_capacity(m * mech.n);
    let mut ss = Vec::with_capacity(m * mech.selection.len());
    mech.stream(seed, m, |x, s| {
        xs.extend(x.iter().map(|&v| T::of(v)));
        ss.extend(s.iter().map(|&v| T::of(v)));
        true
    });
    let data = Dataset::new(Matrix::from_row_major(m, mech.n, xs))?;
    Ok((data, Matrix::from_row_major(m, mech.selection.len(), ss)))
}

/// Keeps the rows whose every selection value strictly exceeds that
/// variable's mean over all rows. Row order is preserved.
pub fn apply_selection<T: Scalar>(
    selection_values: &Matrix<T>,
    raw: &Dataset<T>,
) -> Result<Dataset<T>, SimulatorError> {
    let m = raw.n_samples();
    if selection_values.rows() != m {
        return Err(SimulatorError::RowMismatch {
            selection: selection_values.rows(),
            raw: m,
        });
    }
    let k = selection_values.cols();
    if k == 0 {
        return Ok(raw.clone());
    }
    let means: Vec<f64> = (0..k)
        .map(|c| selection_values.column(c).map(|v| v.as_f64()).sum::<f64>() / m as f64)
        .collect();
    let keep: Vec<usize> = (0..m)
        .filter(|&r| {
            selection_values
                .row(r)
                .iter()
                .zip(&means)
                .all(|(v, mean)| v.as_f64() > *mean)
        })
        .collect();
    if keep.is_empty() {
        return Err(SimulatorError::NoSurvivors);
    }
    Ok(raw.select_rows(&keep)?)
}

/// Rows of a selected population together with how much was drawn for them.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectedSample<T> {
    pub data: Dataset<T>,
    /// Size of the final unselected population.
    pub population: usize,
    pub survival_rate: f64,
}

/// Oversamples the population of `g` under `params` until at least
/// `n_target` rows survive selection and keeps the first `n_target`.
///
/// Each attempt streams the population twice: once for the selection means
/// and once to filter, so memory stays proportional to `n_target`.
pub fn sample_selected<T: Scalar>(
    g: &SequentialCausalGraph,
    params: &ScmParameters,
    n_target: usize,
    seed: u64,
) -> Result<SelectedSample<T>, SimulatorError> {
    if n_target == 0 {
        return Err(SimulatorError::NoSamples);
    }
    let mech = Mechanism::new(g, params)?;
    let k = mech.selection.len();

    let mut population = n_target.saturating_mul(4);
    let mut doublings = 0;
    loop {
        let mut sums = vec![0.0; k];
        if k > 0 {
            mech.stream(seed, population, |_, s| {
                for (acc, v) in sums.iter_mut().zip(s) {
                    *acc += v;
                }
                true
            });
        }
        let means: Vec<f64> = sums.iter().map(|v| v / population as f64).collect();

        let mut kept = Vec::with_capacity(n_target * mech.n);
        let mut survivors = 0usize;
        let mut seen = 0usize;
        mech.stream(seed, population, |x, s| {
            seen += 1;
            if s.iter().zip(&means).all(|(v, mean)| v > mean) {
                survivors += 1;
                if survivors <= n_target {
                    kept.extend(x.iter().map(|&v| T::of(v)));
                }
            }
            true
        });
        debug_assert_eq!(seen, population);
        let rate = survivors as f64 / population as f64;
        if survivors >= n_target {
            let data = Dataset::new(Matrix::from_row_major(n_target, mech.n, kept))?;
            return Ok(SelectedSample {
                data,
                population,
                survival_rate: rate,
            });
        }
        let hopeless = doublings >= 2 && rate < SURVIVAL_FLOOR;
        if doublings >= MAX_DOUBLINGS || hopeless {
            return Err(SimulatorError::SurvivalFloor {
                survivors,
                population,
                rate,
                needed: n_target,
            });
        }
        population = population.saturating_mul(2);
        doublings += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generated<T> {
    pub structure: GeneratedStructure,
    pub params: ScmParameters,
    #[serde(skip)]
    pub data: Option<Dataset<T>>,
    /// Size of the final unselected population.
    pub population: usize,
    pub survival_rate: f64,
}

/// Draws a structure and weights, then a selected sample of `n_target` rows
/// via [`sample_selected`].
pub fn generate<T: Scalar>(
    spec: &StructureSpec,
    n_target: usize,
    policy: &WeightPolicy,
) -> Result<Generated<T>, SimulatorError> {
    if n_target == 0 {
        return Err(SimulatorError::NoSamples);
    }
    let structure = random_structure(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(1);
    let params = ScmParameters::draw(&structure.graph, policy, &mut rng);
    let data_seed = rng.next_u64();
    let sample = sample_selected(&structure.graph, &params, n_target, data_seed)?;
    Ok(Generated {
        structure,
        params,
        data: Some(sample.data),
        population: sample.population,
        survival_rate: sample.survival_rate,
    })
}

/// Replicate manifest written next to the graph JSON and dataset CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub spec: StructureSpec,
    pub n_samples: usize,
    pub policy: WeightPolicy,
    pub counts: ExtraCounts,
    pub first_order_kept: usize,
    pub population: usize,
    pub survival_rate: f64,
    pub graph_path: String,
    pub dataset_path: String,
}
