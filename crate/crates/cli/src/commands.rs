use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;

use seqsel::ci::{CiError, FisherZProvider};
use seqsel::eval::{
    self, relations, run_benchmark, run_sample_size_study, run_scalability, summarize,
    BenchmarkConfig, BenchmarkMode, RelationKind,
};
use seqsel::example::eight_variable_graph;
use seqsel::graph::to_dot;
use seqsel::simulator::{
    generate, random_structure, Manifest, SimulatorError, StructureSpec, WeightPolicy,
};
use seqsel::{
    discover, CiProvider, CiQuery, CiTestResult, DSeparationOracle, Dataset64, DiscoveryOptions,
    SequentialCausalGraph,
};

use crate::output::{io_error, json_bytes, out_dir, read_to_string, write_atomic};
use crate::{
    BenchArgs, Common, DiscoverArgs, EvaluateArgs, Failure, Mode, OracleCheckArgs, SimulateArgs,
    StudyArgs,
};

fn check_alpha(common: &Common) -> Result<(), Failure> {
    if common.alpha > 0.0 && common.alpha < 1.0 {
        Ok(())
    } else {
        Err(Failure::Usage(format!(
            "--alpha must lie in (0, 1), got {}",
            common.alpha
        )))
    }
}

fn check_ascending(name: &str, list: &[usize]) -> Result<(), Failure> {
    if list.is_empty() || list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Failure::Usage(format!(
            "{name} must be a non-empty strictly ascending list"
        )));
    }
    Ok(())
}

fn analysis(e: impl std::fmt::Display) -> Failure {
    Failure::Analysis(e.to_string())
}

fn graph_bytes(g: &SequentialCausalGraph) -> Vec<u8> {
    let mut out = g.to_json_pretty().into_bytes();
    out.push(b'\n');
    out
}

fn read_graph(path: &std::path::Path) -> Result<SequentialCausalGraph, Failure> {
    SequentialCausalGraph::from_json(&read_to_string(path)?).map_err(|e| io_error(path, e))
}

pub fn simulate(a: SimulateArgs) -> Result<(), Failure> {
    check_alpha(&a.common)?;
    if a.n_vars < 2 {
        return Err(Failure::Usage(format!(
            "--n-vars must be at least 2, got {}",
            a.n_vars
        )));
    }
    if a.n_samples == 0 {
        return Err(Failure::Usage("--n-samples must be at least 1".into()));
    }
    let mut spec =
        StructureSpec::new(a.n_vars, a.common.seed).with_confounders(a.common.with_confounders);
    if let Some(cap) = a.max_selection {
        spec = spec.with_max_selection(cap);
    }
    spec.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let policy = WeightPolicy::default();
    let generated = generate::<f64>(&spec, a.n_samples, &policy).map_err(analysis)?;
    let data = generated
        .data
        .as_ref()
        .ok_or_else(|| analysis(SimulatorError::NoSamples))?;

    let dir = out_dir(&a.common.out_dir)?;
    let graph = &generated.structure.graph;
    let mut csv = Vec::new();
    data.to_csv(&mut csv).map_err(analysis)?;
    let manifest = Manifest {
        spec,
        n_samples: a.n_samples,
        policy,
        counts: generated.structure.counts,
        first_order_kept: generated.structure.first_order_kept,
        population: generated.population,
        survival_rate: generated.survival_rate,
        graph_path: "graph.json".into(),
        dataset_path: "data.csv".into(),
    };
    write_atomic(&dir.join("graph.json"), &graph_bytes(graph))?;
    write_atomic(&dir.join("graph.dot"), to_dot(graph).as_bytes())?;
    write_atomic(&dir.join("data.csv"), &csv)?;
    write_atomic(&dir.join("manifest.json"), &json_bytes(&manifest))?;
    println!(
        "simulated {} rows over {} variables (survival rate {:.4}) into {}",
        a.n_samples,
        a.n_vars,
        generated.survival_rate,
        dir.display()
    );
    Ok(())
}

pub fn discover_data(a: DiscoverArgs) -> Result<(), Failure> {
    check_alpha(&a.common)?;
    let file = File::open(&a.data).map_err(|e| io_error(&a.data, e))?;
    let data = Dataset64::from_csv(BufReader::new(file)).map_err(|e| io_error(&a.data, e))?;
    let provider = FisherZProvider::new(&data, a.common.alpha).map_err(analysis)?;
    let options = DiscoveryOptions {
        with_confounders: a.common.with_confounders,
        alpha: a.common.alpha,
        trace: a.trace,
    };
    let found = discover(&provider, data.n_vars(), &options).map_err(analysis)?;

    let dir = out_dir(&a.common.out_dir)?;
    write_atomic(&dir.join("estimate.json"), &graph_bytes(&found.graph))?;
    write_atomic(&dir.join("estimate.dot"), to_dot(&found.graph).as_bytes())?;
    if a.trace {
        let mut lines = Vec::new();
        for record in &found.trace {
            serde_json::to_writer(&mut lines, record).expect("trace serialization cannot fail");
            lines.push(b'\n');
        }
        write_atomic(&dir.join("trace.jsonl"), &lines)?;
    }
    let g = &found.graph;
    println!(
        "{} queries; {} direct edges, {} selection groups, {} confounded pairs",
        found.queries,
        g.n_direct_edges(),
        g.selection_groups().len(),
        g.confounder_pairs().len()
    );
    Ok(())
}

pub fn evaluate(a: EvaluateArgs) -> Result<(), Failure> {
    let truth = read_graph(&a.truth)?;
    let estimate = read_graph(&a.estimate)?;
    let report = eval::compare(&truth, &estimate).map_err(|e| Failure::Usage(e.to_string()))?;
    let bytes = json_bytes(&report);
    print!("{}", String::from_utf8_lossy(&bytes));
    if let Some(dir) = a.out_dir {
        write_atomic(&out_dir(&dir)?.join("evaluation.json"), &bytes)?;
    }
    Ok(())
}

pub fn bench(a: BenchArgs) -> Result<(), Failure> {
    check_alpha(&a.common)?;
    check_ascending("--n-list", &a.n_list)?;
    if a.n_list[0] < 2 {
        return Err(Failure::Usage("--n-list entries must be at least 2".into()));
    }
    if a.n_samples == Some(0) {
        return Err(Failure::Usage("--n-samples must be at least 1".into()));
    }
    let dir = out_dir(&a.common.out_dir)?;
    let Some(mode) = a.mode else {
        let rows = run_scalability(
            &a.n_list,
            a.max_selection,
            a.n_samples.unwrap_or(2000),
            a.common.alpha,
            a.common.seed,
        )
        .map_err(analysis)?;
        let mut csv = Vec::new();
        eval::write_scalability_csv(&rows, &mut csv).map_err(analysis)?;
        write_atomic(&dir.join("bench.csv"), &csv)?;
        for r in &rows {
            println!(
                "N={} queries={} seconds={:.3}",
                r.n_vars, r.ci_query_count, r.wall_time_seconds
            );
        }
        return Ok(());
    };
    if a.replicates == 0 {
        return Err(Failure::Usage("--replicates must be at least 1".into()));
    }
    let mode = match mode {
        Mode::Satisfied => BenchmarkMode::Satisfied,
        Mode::Violated => BenchmarkMode::Violated,
    };
    let mut config = BenchmarkConfig::new(
        mode,
        a.n_list,
        a.n_samples.unwrap_or(10_000),
        a.replicates,
        a.common.seed,
    );
    config.alpha = a.common.alpha;
    config.with_confounders = a.common.with_confounders;
    config.max_selection = Some(a.max_selection);
    let results = run_benchmark(&config).map_err(analysis)?;
    let summary = summarize(&results);
    let mut csv = Vec::new();
    eval::write_report_csv(&results, &mut csv).map_err(analysis)?;
    write_atomic(&dir.join("report.csv"), &csv)?;
    write_atomic(&dir.join("summary.json"), &json_bytes(&summary))?;
    println!(
        "{} replicates, {} failed",
        summary.replicates, summary.failures
    );
    for (kind, s) in &summary.kinds {
        println!(
            "{:<20} precision {:.3} ± {:.3}  recall {:.3} ± {:.3}",
            kind.name(),
            s.precision.mean,
            s.precision.std,
            s.recall.mean,
            s.recall.std
        );
    }
    Ok(())
}

pub fn study(a: StudyArgs) -> Result<(), Failure> {
    check_alpha(&a.common)?;
    check_ascending("--sizes", &a.sizes)?;
    if a.replicates < 2 {
        return Err(Failure::Usage("--replicates must be at least 2".into()));
    }
    if a.n_vars < 2 || a.sizes[0] == 0 {
        return Err(Failure::Usage(
            "--n-vars must be at least 2 and sizes positive".into(),
        ));
    }
    let rows = run_sample_size_study(
        &a.sizes,
        a.n_vars,
        a.replicates,
        a.common.seed,
        a.common.alpha,
    )
    .map_err(analysis)?;
    let dir = out_dir(&a.common.out_dir)?;
    let mut csv = String::from(
        "n_samples,replicates,failures,precision_mean,precision_std,recall_mean,recall_std\n",
    );
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.n_samples,
            r.replicates,
            r.failures,
            r.precision.mean,
            r.precision.std,
            r.recall.mean,
            r.recall.std
        ));
        println!(
            "n={:<6} precision {:.3} ± {:.3}  recall {:.3} ± {:.3}",
            r.n_samples, r.precision.mean, r.precision.std, r.recall.mean, r.recall.std
        );
    }
    write_atomic(&dir.join("study.csv"), csv.as_bytes())?;
    write_atomic(&dir.join("study.json"), &json_bytes(&rows))?;
    Ok(())
}

/// Oracle whose every answer is inverted.
struct Faulty(DSeparationOracle);

impl CiProvider for Faulty {
    fn n_vars(&self) -> usize {
        self.0.n_vars()
    }

    fn is_independent(&self, query: &CiQuery) -> Result<CiTestResult, CiError> {
        let r = self.0.is_independent(query)?;
        Ok(CiTestResult::oracle(!r.independent))
    }

    fn query_count(&self) -> u64 {
        self.0.query_count()
    }
}

fn describe(pairs: &BTreeMap<(usize, usize), RelationKind>) -> String {
    let items: Vec<String> = pairs
        .iter()
        .map(|((i, j), k)| format!("({i},{j}):{}", k.name()))
        .collect();
    if items.is_empty() {
        "none".into()
    } else {
        items.join(" ")
    }
}

pub fn oracle_check(a: OracleCheckArgs) -> Result<(), Failure> {
    if a.n_vars < 2 {
        return Err(Failure::Usage(format!(
            "--n-vars must be at least 2, got {}",
            a.n_vars
        )));
    }
    if a.replicates == 0 && !a.fixture {
        return Err(Failure::Usage("--replicates must be at least 1".into()));
    }
    let cases: Vec<(String, SequentialCausalGraph, bool)> = if a.fixture {
        vec![(
            "eight-variable example".into(),
            eight_variable_graph(),
            true,
        )]
    } else {
        (0..a.replicates as u64)
            .map(|r| {
                let seed = a.common.seed.wrapping_add(r);
                let spec =
                    StructureSpec::new(a.n_vars, seed).with_confounders(a.common.with_confounders);
                let g = random_structure(&spec).map_err(analysis)?.graph;
                Ok((format!("seed {seed}"), g, a.common.with_confounders))
            })
            .collect::<Result<_, Failure>>()?
    };

    let mut first_failure = None;
    let mut passed = 0;
    for (label, truth, with_confounders) in &cases {
        let oracle = DSeparationOracle::new(truth.clone());
        let options = DiscoveryOptions {
            with_confounders: *with_confounders,
            ..Default::default()
        };
        let found = if a.inject_fault {
            discover(&Faulty(oracle), truth.n_observed(), &options)
        } else {
            discover(&oracle, truth.n_observed(), &options)
        }
        .map_err(analysis)?;
        let want = relations(truth);
        let got = relations(&found.graph);
        if want == got {
            passed += 1;
            println!(
                "{label}: PASS ({} dependent pairs, {} queries)",
                want.len(),
                found.queries
            );
        } else {
            let missing = want
                .iter()
                .filter(|(p, k)| got.get(p) != Some(k))
                .map(|(p, k)| (*p, *k))
                .collect();
            let extra = got
                .iter()
                .filter(|(p, k)| want.get(p) != Some(k))
                .map(|(p, k)| (*p, *k))
                .collect();
            println!(
                "{label}: FAIL missing [{}] extra [{}]",
                describe(&missing),
                describe(&extra)
            );
            first_failure.get_or_insert_with(|| label.clone());
        }
    }
    println!("{passed}/{} recovered exactly", cases.len());
    match first_failure {
        None => Ok(()),
        Some(label) => Err(Failure::Analysis(format!(
            "inexact recovery, first at {label}"
        ))),
    }
}
