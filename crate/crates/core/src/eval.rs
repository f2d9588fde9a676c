//! Scoring of estimated structures against ground truth, plus the benchmark,
//! scalability and sample-size harnesses built on the simulator.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ci::{CiProvider, DSeparationOracle, FisherZProvider};
use crate::discovery::{discover, DiscoveryError, DiscoveryOptions};
use crate::graph::{DependencyKind, SequentialCausalGraph};
use crate::simulator::{generate, SimulatorError, StructureSpec, WeightPolicy};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("truth has {truth} variables but the estimate has {estimate}")]
    VariableCount { truth: usize, estimate: usize },
    #[error("replicates must be at least {0}")]
    TooFewReplicates(usize),
    #[error("list of sizes must be non-empty and strictly ascending")]
    NotAscending,
    #[error(transparent)]
    Simulator(#[from] SimulatorError),
    #[error(transparent)]
    Discovery(#[from] DiscoveryError),
    #[error(transparent)]
    Ci(#[from] crate::ci::CiError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("malformed report row {row}: {message}")]
    MalformedReport { row: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationKind {
    Selection,
    FirstOrderDirect,
    HigherOrderDirect,
    Confounded,
    Both,
}

impl RelationKind {
    pub const ALL: [RelationKind; 5] = [
        RelationKind::Selection,
        RelationKind::FirstOrderDirect,
        RelationKind::HigherOrderDirect,
        RelationKind::Confounded,
        RelationKind::Both,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RelationKind::Selection => "selection",
            RelationKind::FirstOrderDirect => "first_order_direct",
            RelationKind::HigherOrderDirect => "higher_order_direct",
            RelationKind::Confounded => "confounded",
            RelationKind::Both => "both",
        }
    }
}

/// Every dependent pair of `g` with its reporting kind.
pub fn relations(g: &SequentialCausalGraph) -> BTreeMap<(usize, usize), RelationKind> {
    g.dependent_pairs()
        .into_iter()
        .filter_map(|(i, j)| {
            let kind = match g.dependency_kind(i, j).ok()?? {
                DependencyKind::Selection => RelationKind::Selection,
                DependencyKind::Direct if j == i + 1 => RelationKind::FirstOrderDirect,
                DependencyKind::Direct => RelationKind::HigherOrderDirect,
                DependencyKind::Confounded => RelationKind::Confounded,
                DependencyKind::Both => RelationKind::Both,
            };
            Some(((i, j), kind))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KindScore {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
}

impl KindScore {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                1.0
            } else {
                num as f64 / den as f64
            }
        };
        Self {
            tp,
            fp,
            fn_,
            precision: ratio(tp, tp + fp),
            recall: ratio(tp, tp + fn_),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scores: BTreeMap<RelationKind, KindScore>,
    pub ci_query_count: u64,
    /// Seconds spent in discovery.
    pub wall_time: f64,
}

impl EvalReport {
    pub fn score(&self, kind: RelationKind) -> KindScore {
        self.scores
            .get(&kind)
            .copied()
            .unwrap_or_else(|| KindScore::from_counts(0, 0, 0))
    }
}

/// Scores `estimate` against `truth` pair by pair; a pair counts as a true
/// positive for a kind only if both graphs give it that kind.
pub fn compare(
    truth: &SequentialCausalGraph,
    estimate: &SequentialCausalGraph,
) -> Result<EvalReport, EvalError> {
    if truth.n_observed() != estimate.n_observed() {
        return Err(EvalError::VariableCount {
            truth: truth.n_observed(),
            estimate: estimate.n_observed(),
        });
    }
    let t = relations(truth);
    let e = relations(estimate);
    let scores = RelationKind::ALL
        .iter()
        .map(|&kind| {
            let tp = t
                .iter()
                .filter(|(p, k)| **k == kind && e.get(p) == Some(&kind))
                .count();
            let in_truth = t.values().filter(|k| **k == kind).count();
            let in_estimate = e.values().filter(|k| **k == kind).count();
            (
                kind,
                KindScore::from_counts(tp, in_estimate - tp, in_truth - tp),
            )
        })
        .collect();
    Ok(EvalReport {
        scores,
        ci_query_count: 0,
        wall_time: 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkMode {
    /// Structures are drawn with the identifiability conditions enforced.
    Satisfied,
    /// Same generator with condition checking disabled.
    Violated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    FisherZ,
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub mode: BenchmarkMode,
    pub n_vars: Vec<usize>,
    pub n_samples: usize,
    /// Replicates per entry of `n_vars`; replicate `r` uses seed `seed + r`.
    pub replicates: usize,
    pub seed: u64,
    pub alpha: f64,
    pub with_confounders: bool,
    pub max_selection: Option<usize>,
    pub provider: ProviderKind,
    pub policy: WeightPolicy,
}

impl BenchmarkConfig {
    pub fn new(
        mode: BenchmarkMode,
        n_vars: Vec<usize>,
        n_samples: usize,
        replicates: usize,
        seed: u64,
    ) -> Self {
        Self {
            mode,
            n_vars,
            n_samples,
            replicates,
            seed,
            alpha: 0.05,
            with_confounders: false,
            max_selection: None,
            provider: ProviderKind::FisherZ,
            policy: WeightPolicy::default(),
        }
    }

    fn spec(&self, n_vars: usize, seed: u64) -> StructureSpec {
        let mut spec = StructureSpec::new(n_vars, seed)
            .with_confounders(self.with_confounders)
            .enforcing(self.mode == BenchmarkMode::Satisfied);
        if let Some(cap) = self.max_selection {
            spec = spec.with_max_selection(cap);
        }
        spec
    }
}

/// One replicate: either a report or the error that stopped it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateReport {
    pub n_vars: usize,
    pub seed: u64,
    pub n_samples: usize,
    pub report: Option<EvalReport>,
    pub error: Option<String>,
}

fn run_replicate(
    config: &BenchmarkConfig,
    n_vars: usize,
    seed: u64,
    n_samples: usize,
) -> Result<EvalReport, EvalError> {
    let spec = config.spec(n_vars, seed);
    let options = DiscoveryOptions {
        with_confounders: config.with_confounders,
        ..Default::default()
    };
    let (truth, provider): (SequentialCausalGraph, Box<dyn CiProvider>) = match config.provider {
        ProviderKind::Oracle => {
            let g = crate::simulator::random_structure(&spec)?.graph;
            (g.clone(), Box::new(DSeparationOracle::new(g)))
        }
        ProviderKind::FisherZ => {
            let generated = generate::<f64>(&spec, n_samples, &config.policy)?;
            let data = generated.data.as_ref().ok_or(SimulatorError::NoSamples)?;
            let provider = FisherZProvider::new(data, config.alpha)?;
            (generated.structure.graph, Box::new(provider))
        }
    };
    let start = Instant::now();
    let found = discover(provider.as_ref(), n_vars, &options)?;
    let wall_time = start.elapsed().as_secs_f64();
    let mut report = compare(&truth, &found.graph)?;
    report.ci_query_count = found.queries;
    report.wall_time = wall_time;
    Ok(report)
}

fn run_all(config: &BenchmarkConfig, jobs: Vec<(usize, u64, usize)>) -> Vec<ReplicateReport> {
    jobs.into_par_iter()
        .map(|(n_vars, seed, n_samples)| {
            let outcome = run_replicate(config, n_vars, seed, n_samples);
            ReplicateReport {
                n_vars,
                seed,
                n_samples,
                error: outcome.as_ref().err().map(ToString::to_string),
                report: outcome.ok(),
            }
        })
        .collect()
}

/// Runs every replicate in parallel. Failures are recorded per replicate and
/// do not stop the sweep; results are ordered by `n_vars`, then seed.
pub fn run_benchmark(config: &BenchmarkConfig) -> Result<Vec<ReplicateReport>, EvalError> {
    if config.replicates == 0 {
        return Err(EvalError::TooFewReplicates(1));
    }
    let jobs = config
        .n_vars
        .iter()
        .flat_map(|&n| (0..config.replicates as u64).map(move |r| (n, r)))
        .map(|(n, r)| (n, config.seed.wrapping_add(r), config.n_samples))
        .collect();
    Ok(run_all(config, jobs))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation; zero for a single value.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                std: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindSummary {
    pub precision: MeanStd,
    pub recall: MeanStd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub replicates: usize,
    pub failures: usize,
    pub kinds: BTreeMap<RelationKind, KindSummary>,
    pub ci_query_count: MeanStd,
    pub wall_time: MeanStd,
}

/// Means and standard deviations over the successful replicates.
pub fn summarize(results: &[ReplicateReport]) -> Summary {
    let ok: Vec<&EvalReport> = results.iter().filter_map(|r| r.report.as_ref()).collect();
    let collect =
        |f: &dyn Fn(&EvalReport) -> f64| MeanStd::of(&ok.iter().map(|r| f(r)).collect::<Vec<_>>());
    let kinds = RelationKind::ALL
        .iter()
        .map(|&k| {
            (
                k,
                KindSummary {
                    precision: collect(&|r| r.score(k).precision),
                    recall: collect(&|r| r.score(k).recall),
                },
            )
        })
        .collect();
    Summary {
        replicates: results.len(),
        failures: results.len() - ok.len(),
        kinds,
        ci_query_count: collect(&|r| r.ci_query_count as f64),
        wall_time: collect(&|r| r.wall_time),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalabilityRow {
    pub n_vars: usize,
    pub ci_query_count: u64,
    pub wall_time_seconds: f64,
}

/// Discovery cost for each `N`, with at most `max_selection` selection
/// groups. Runs sequentially so timings are not contended; only discovery is
/// timed.
pub fn run_scalability(
    n_list: &[usize],
    max_selection: usize,
    n_samples: usize,
    alpha: f64,
    seed: u64,
) -> Result<Vec<ScalabilityRow>, EvalError> {
    if n_list.is_empty() || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(EvalError::NotAscending);
    }
    let policy = WeightPolicy::default();
    n_list
        .iter()
        .map(|&n| {
            let spec = StructureSpec::new(n, seed).with_max_selection(max_selection);
            let generated = generate::<f64>(&spec, n_samples, &policy)?;
            let data = generated.data.as_ref().ok_or(SimulatorError::NoSamples)?;
            let provider = FisherZProvider::new(data, alpha)?;
            let start = Instant::now();
            let found = discover(&provider, n, &DiscoveryOptions::default())?;
            Ok(ScalabilityRow {
                n_vars: n,
                ci_query_count: found.queries,
                wall_time_seconds: start.elapsed().as_secs_f64(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSizeRow {
    pub n_samples: usize,
    pub replicates: usize,
    pub failures: usize,
    pub precision: MeanStd,
    pub recall: MeanStd,
}

/// Selection-pair precision and recall as the sample size grows. Replicate
/// `r` uses the structure drawn from seed `seed + r` at every size.
pub fn run_sample_size_study(
    sizes: &[usize],
    n_vars: usize,
    replicates: usize,
    seed: u64,
    alpha: f64,
) -> Result<Vec<SampleSizeRow>, EvalError> {
    if replicates < 2 {
        return Err(EvalError::TooFewReplicates(2));
    }
    if sizes.is_empty() || sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(EvalError::NotAscending);
    }
    let mut config =
        BenchmarkConfig::new(BenchmarkMode::Satisfied, vec![n_vars], 0, replicates, seed);
    config.alpha = alpha;
    let jobs = sizes
        .iter()
        .flat_map(|&size| (0..replicates as u64).map(move |r| (n_vars, seed.wrapping_add(r), size)))
        .collect();
    let results = run_all(&config, jobs);
    Ok(sizes
        .iter()
        .map(|&size| {
            let at: Vec<ReplicateReport> = results
                .iter()
                .filter(|r| r.n_samples == size)
                .cloned()
                .collect();
            let s = summarize(&at);
            let sel = &s.kinds[&RelationKind::Selection];
            SampleSizeRow {
                n_samples: size,
                replicates: s.replicates,
                failures: s.failures,
                precision: sel.precision,
                recall: sel.recall,
            }
        })
        .collect())
}

const BASE_COLUMNS: [&str; 6] = [
    "n_vars",
    "seed",
    "n_samples",
    "error",
    "ci_query_count",
    "wall_time",
];
const KIND_FIELDS: [&str; 5] = ["tp", "fp", "fn", "precision", "recall"];

fn report_header() -> Vec<String> {
    let mut h: Vec<String> = BASE_COLUMNS.iter().map(|s| s.to_string()).collect();
    for k in RelationKind::ALL {
        h.extend(KIND_FIELDS.iter().map(|f| format!("{}_{f}", k.name())));
    }
    h
}

/// One row per replicate; failed replicates carry the error and empty
/// metric cells.
pub fn write_report_csv<W: Write>(results: &[ReplicateReport], writer: W) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(report_header())?;
    for r in results {
        let mut row = vec![
            r.n_vars.to_string(),
            r.seed.to_string(),
            r.n_samples.to_string(),
            r.error.clone().unwrap_or_default(),
        ];
        match &r.report {
            Some(rep) => {
                row.push(rep.ci_query_count.to_string());
                row.push(rep.wall_time.to_string());
                for k in RelationKind::ALL {
                    let s = rep.score(k);
                    row.extend([
                        s.tp.to_string(),
                        s.fp.to_string(),
                        s.fn_.to_string(),
                        s.precision.to_string(),
                        s.recall.to_string(),
                    ]);
                }
            }
            None => row.extend(std::iter::repeat_n(
                String::new(),
                2 + 5 * KIND_FIELDS.len(),
            )),
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_report_csv<R: Read>(reader: R) -> Result<Vec<ReplicateReport>, EvalError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let expected = report_header();
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != expected {
        return Err(EvalError::MalformedReport {
            row: 0,
            message: "unexpected header".into(),
        });
    }
    let mut out = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = idx + 1;
        let bad = |message: String| EvalError::MalformedReport { row, message };
        let field = |c: usize| rec.get(c).unwrap_or("");
        fn parse<T: std::str::FromStr>(s: &str, col: &str) -> Result<T, String> {
            s.parse()
                .map_err(|_| format!("column {col}: cannot parse {s:?}"))
        }
        let error = Some(field(3).to_string()).filter(|s| !s.is_empty());
        let report = if field(4).is_empty() {
            None
        } else {
            let mut scores = BTreeMap::new();
            for (ki, k) in RelationKind::ALL.iter().enumerate() {
                let base = BASE_COLUMNS.len() + ki * KIND_FIELDS.len();
                let name = |f: usize| expected[base + f].as_str();
                scores.insert(
                    *k,
                    KindScore {
                        tp: parse(field(base), name(0)).map_err(bad)?,
                        fp: parse(field(base + 1), name(1)).map_err(bad)?,
                        fn_: parse(field(base + 2), name(2)).map_err(bad)?,
                        precision: parse(field(base + 3), name(3)).map_err(bad)?,
                        recall: parse(field(base + 4), name(4)).map_err(bad)?,
                    },
                );
            }
            Some(EvalReport {
                scores,
                ci_query_count: parse(field(4), "ci_query_count").map_err(bad)?,
                wall_time: parse(field(5), "wall_time").map_err(bad)?,
            })
        };
        out.push(ReplicateReport {
            n_vars: parse(field(0), "n_vars").map_err(bad)?,
            seed: parse(field(1), "seed").map_err(bad)?,
            n_samples: parse(field(2), "n_samples").map_err(bad)?,
            report,
            error,
        });
    }
    Ok(out)
}

pub fn write_scalability_csv<W: Write>(
    rows: &[ScalabilityRow],
    writer: W,
) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_scalability_csv<R: Read>(reader: R) -> Result<Vec<ScalabilityRow>, EvalError> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .map(|r| r.map_err(EvalError::from))
        .collect()
}
