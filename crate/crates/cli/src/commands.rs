//! One function per subcommand. Each reads its inputs from the run
//! configuration and writes its artifacts into the output directory.

use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, Mutex};

use fairdti::chem::{load_fingerprints, pairwise_tanimoto, FINGERPRINT_BITS};
use fairdti::embed::{embed, pair_features, EmbeddingTable, Node2VecParams};
use fairdti::graph::{
    binarize_affinities, compute_stats, load_affinities, load_edge_list, EdgeListOptions,
    GraphBuilder, GraphStats, DEFAULT_KD_THRESHOLD,
};
use fairdti::leakage::{leakage_matrix, stratified_holdout};
use fairdti::metrics::{auprc, auroc};
use fairdti::model::{grid_search, train, EmbeddedClassifier, SnnModel, SnnParams};
use fairdti::negatives::{
    sample_random, sample_rmsd_window, score_holdout, window_sweep, write_holdout_scores,
    PairModel, SampledDataset,
};
use fairdti::similarity::{emit_histogram, MatrixKind, SimilarityMatrix};
use fairdti::split::{
    attach_negatives, kfold, split, verify_plan, FoldPlan, LabeledFold, Scheme, VerifyReport,
};
use fairdti::structure::{load_structures_dir, pairwise_rmsd_cached, quality_filter, PdbOptions};
use fairdti::{seed, DtiGraph, EdgePair, Error, Result};
use serde::Serialize;

use crate::artifacts::Artifacts;
use crate::config::{RunConfig, SamplerMode};
use crate::registry::{default_cache_dir, fetch, Manifest};

/// Every configured graph: edge lists first, then binarized affinity tables.
pub fn load_graphs(cfg: &RunConfig) -> Result<Vec<DtiGraph>> {
    let opts = EdgeListOptions {
        swap_columns: cfg.data.swap_columns,
    };
    let mut graphs = Vec::new();
    for path in &cfg.data.edges {
        let (g, report) = load_edge_list(path, opts)?;
        if report.duplicates > 0 {
            log::warn!(
                "{}: {} duplicate rows ignored",
                path.display(),
                report.duplicates
            );
        }
        graphs.push(g);
    }
    for path in &cfg.data.affinities {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let records = load_affinities(path)?;
        graphs.push(binarize_affinities(
            name,
            &records,
            cfg.data.kd_threshold.unwrap_or(DEFAULT_KD_THRESHOLD),
        )?);
    }
    Ok(graphs)
}

fn first_graph(cfg: &RunConfig) -> Result<DtiGraph> {
    load_graphs(cfg)?
        .into_iter()
        .next()
        .ok_or_else(|| Error::Validation("no input graph".into()))
}

/// RMSD matrix from file, or computed from the structure directory with a
/// cache in the output directory.
fn rmsd_matrix(cfg: &RunConfig, out: &mut Artifacts) -> Result<SimilarityMatrix> {
    if let Some(path) = &cfg.data.rmsd_matrix {
        return SimilarityMatrix::load_tsv(path, MatrixKind::Rmsd);
    }
    let dir = cfg.data.structures.as_ref().ok_or_else(|| {
        Error::Validation("an RMSD matrix or a structure directory is required".into())
    })?;
    let mut structures = load_structures_dir(
        dir,
        PdbOptions {
            chain: cfg.data.chain,
        },
    )?;
    if let Some(t) = cfg.quality {
        let report = quality_filter(structures, t);
        out.write_json("quality.json", &report.rejected)?;
        structures = report.kept;
    }
    let m = pairwise_rmsd_cached(&structures, cfg.rmsd, &out.path("rmsd.tsv"))?;
    out.record("rmsd.tsv");
    Ok(m)
}

/// Table-style summary statistics, one CSV row per graph.
pub fn cmd_stats(cfg: &RunConfig, out: &mut Artifacts) -> Result<Vec<GraphStats>> {
    let graphs = load_graphs(cfg)?;
    let stats: Vec<GraphStats> = graphs.iter().map(compute_stats).collect();
    out.write("stats.csv", |w| {
        writeln!(w, "{}", GraphStats::CSV_HEADER)?;
        for (g, s) in graphs.iter().zip(&stats) {
            writeln!(w, "{}", s.csv_row(g.name()))?;
        }
        Ok(())
    })?;
    Ok(stats)
}

#[derive(Debug, Serialize)]
struct PlanCheck {
    file: String,
    report: VerifyReport,
}

fn check_all(checks: &[PlanCheck]) -> Result<()> {
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !c.report.is_ok())
        .map(|c| format!("{}: {}", c.file, c.report.violations.join("; ")))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation(format!(
            "plan verification failed: {}",
            failed.join(" | ")
        )))
    }
}

/// Write fold plans, one file per fold, and verify each against its graph.
pub fn cmd_split(cfg: &RunConfig, out: &mut Artifacts) -> Result<Vec<String>> {
    let seed_value = cfg.seed();
    let mut checks = Vec::new();
    let mut written = Vec::new();
    for g in load_graphs(cfg)? {
        let mode = cfg.split.mode;
        let plans: Vec<FoldPlan> = match cfg.split.k {
            Some(k) => kfold(&g, mode, k, cfg.split.repeats, seed_value)?,
            None => vec![split(&g, mode, cfg.split.ratios, seed_value)?],
        };
        for plan in &plans {
            checks.push(PlanCheck {
                file: format!("{} (all folds)", plan_stem(&g, plan, None)),
                report: verify_plan(&g, plan),
            });
            for f in 0..plan.folds.len() {
                let single = plan.single_fold(f);
                let name = format!("plans/{}.json", plan_stem(&g, plan, Some(f)));
                out.write_text(&name, &(single.to_json() + "\n"))?;
                checks.push(PlanCheck {
                    file: name.clone(),
                    report: verify_plan(&g, &single),
                });
                written.push(name);
            }
        }
    }
    out.write_json("verification.json", &checks)?;
    check_all(&checks)?;
    Ok(written)
}

fn plan_stem(g: &DtiGraph, plan: &FoldPlan, fold: Option<usize>) -> String {
    match (plan.scheme, fold) {
        (Scheme::Kfold { repeat, .. }, Some(f)) => {
            format!("{}_{}_r{repeat}_f{f}", g.name(), plan.mode)
        }
        (Scheme::Kfold { repeat, .. }, None) => format!("{}_{}_r{repeat}", g.name(), plan.mode),
        (Scheme::Holdout, _) => format!("{}_{}", g.name(), plan.mode),
    }
}

/// Check a plan file against the first configured graph.
pub fn cmd_verify_plan(
    cfg: &RunConfig,
    plan_path: &Path,
    out: &mut Artifacts,
) -> Result<VerifyReport> {
    let g = first_graph(cfg)?;
    let text = std::fs::read_to_string(plan_path)
        .map_err(|e| Error::io(format!("reading {}", plan_path.display()), e))?;
    let plan: FoldPlan = serde_json::from_str(&text)?;
    let report = verify_plan(&g, &plan);
    let check = PlanCheck {
        file: plan_path.display().to_string(),
        report,
    };
    out.write_json("verification.json", &check)?;
    check_all(std::slice::from_ref(&check))?;
    Ok(check.report)
}

fn sample(
    cfg: &RunConfig,
    g: &DtiGraph,
    seed_value: u64,
    out: &mut Artifacts,
) -> Result<SampledDataset> {
    match cfg.sampler.mode {
        SamplerMode::Random => sample_random(g, cfg.sampler.window.ratio, seed_value),
        SamplerMode::Rmsd => {
            let m = rmsd_matrix(cfg, out)?;
            sample_rmsd_window(
                g,
                &m,
                &fairdti::negatives::WindowConfig {
                    seed: seed_value,
                    ..cfg.sampler.window.clone()
                },
            )
        }
    }
}

/// Negative sampling for the first graph.
pub fn cmd_sample(cfg: &RunConfig, out: &mut Artifacts) -> Result<SampledDataset> {
    let g = first_graph(cfg)?;
    let data = sample(cfg, &g, seed::derive(cfg.seed(), "sample"), out)?;
    if data.fallback_count() > 0 {
        log::warn!(
            "{} negatives came from the random fallback",
            data.fallback_count()
        );
    }
    out.write("samples.tsv", |w| data.write_tsv(w))?;
    Ok(data)
}

/// All-pairs refined RMSD plus its histogram.
pub fn cmd_rmsd(cfg: &RunConfig, out: &mut Artifacts) -> Result<SimilarityMatrix> {
    let m = rmsd_matrix(cfg, out)?;
    let hist = emit_histogram(&m.pair_values(), cfg.rmsd_bin_width, None)?;
    out.write("rmsd_hist.csv", |w| hist.write_csv(w))?;
    Ok(m)
}

/// All-pairs Tanimoto similarity plus its histogram.
pub fn cmd_tanimoto(cfg: &RunConfig, out: &mut Artifacts) -> Result<SimilarityMatrix> {
    let path = cfg
        .data
        .fingerprints
        .as_ref()
        .ok_or_else(|| Error::Validation("fingerprint input is required".into()))?;
    let fps = load_fingerprints(path, FINGERPRINT_BITS)?;
    let m = pairwise_tanimoto(&fps)?;
    out.write("tanimoto.tsv", |w| m.write_tsv(w))?;
    let hist = emit_histogram(&m.pair_values(), cfg.histogram_bin_width, Some(1.0))?;
    out.write("tanimoto_hist.csv", |w| hist.write_csv(w))?;
    Ok(m)
}

fn embedding_params(cfg: &RunConfig, label: &str) -> Node2VecParams {
    Node2VecParams {
        seed: seed::derive(cfg.seed(), label),
        ..cfg.embedding_params()
    }
}

/// node2vec embedding of the first graph.
pub fn cmd_embed(cfg: &RunConfig, out: &mut Artifacts) -> Result<EmbeddingTable> {
    let g = first_graph(cfg)?;
    let table = embed(&g, &embedding_params(cfg, "embed"))?;
    if !table.isolated.is_empty() {
        log::warn!(
            "{} isolated nodes received zero vectors",
            table.isolated.len()
        );
    }
    out.write("embeddings.txt", |w| table.write_text(w))?;
    Ok(table)
}

/// Graph over all nodes of `g` but only the given edges.
fn with_edges(g: &DtiGraph, pairs: &[EdgePair]) -> Result<DtiGraph> {
    let mut b = GraphBuilder::new(g.name());
    for d in g.drugs() {
        b.add_drug(d.as_str())?;
    }
    for p in g.proteins() {
        b.add_protein(p.as_str())?;
    }
    for pair in pairs {
        b.add_edge(pair.drug(), pair.protein())?;
    }
    Ok(b.build())
}

/// Split, sample negatives and assign them to roles. Embeddings are later
/// trained on the training positives only, so no validation or test edge
/// shapes the features.
struct Prepared {
    graph: DtiGraph,
    plan: FoldPlan,
    data: SampledDataset,
    fold: LabeledFold,
    train_graph: DtiGraph,
}

fn prepare(cfg: &RunConfig, out: &mut Artifacts) -> Result<Prepared> {
    let graph = first_graph(cfg)?;
    let root = cfg.seed();
    let plan = split(
        &graph,
        cfg.split.mode,
        cfg.split.ratios,
        seed::derive(root, "split"),
    )?;
    let data = sample(cfg, &graph, seed::derive(root, "sample"), out)?;
    let negatives: Vec<EdgePair> = data
        .train_negatives
        .iter()
        .map(|n| n.pair.clone())
        .collect();
    let fold = attach_negatives(
        &plan.folds[0],
        cfg.split.mode,
        &negatives,
        seed::derive(root, "attach"),
    );
    let train_graph = with_edges(&graph, &plan.folds[0].train)?;
    out.write_text("plan.json", &(plan.to_json() + "\n"))?;
    out.write("samples.tsv", |w| data.write_tsv(w))?;
    Ok(Prepared {
        graph,
        plan,
        data,
        fold,
        train_graph,
    })
}

#[derive(Debug, Serialize)]
pub struct TrainMetrics {
    pub dataset: String,
    pub val_auroc: f64,
    pub test_auroc: f64,
    pub test_auprc: f64,
    pub fallback_negatives: usize,
    pub parameters: usize,
}

/// Train the classifier on one split and report validation and test scores.
pub fn cmd_train(cfg: &RunConfig, out: &mut Artifacts) -> Result<TrainMetrics> {
    let p = prepare(cfg, out)?;
    let emb = embed(&p.train_graph, &embedding_params(cfg, "embed"))?;
    out.write("embeddings.txt", |w| emb.write_text(w))?;
    let x_train = pair_features(&emb, &p.fold.train.0)?;
    let x_val = pair_features(&emb, &p.fold.val.0)?;
    let x_test = pair_features(&emb, &p.fold.test.0)?;
    let params = SnnParams {
        seed: seed::derive(cfg.seed(), "snn"),
        ..cfg.snn.clone()
    };
    let (model, trace) = train(
        &x_train,
        &p.fold.train.1,
        &params,
        Some((&x_val, &p.fold.val.1)),
    )?;
    out.write_text("model.json", &(model.to_json() + "\n"))?;
    out.write("trace.csv", |w| trace.write_csv(w))?;

    let probs: Vec<f64> = model.forward(&x_test)?.iter().copied().collect();
    let val_scores: Vec<f64> = model.forward(&x_val)?.iter().copied().collect();
    let metrics = TrainMetrics {
        dataset: p.graph.name().to_string(),
        val_auroc: auroc(&val_scores, &p.fold.val.1)?,
        test_auroc: auroc(&probs, &p.fold.test.1)?,
        test_auprc: auprc(&probs, &p.fold.test.1)?,
        fallback_negatives: p.data.fallback_count(),
        parameters: model.n_parameters(),
    };
    out.write("predictions.tsv", |w| {
        writeln!(w, "drug_id\tprotein_id\tlabel\tprobability")?;
        for ((pair, &y), prob) in p.fold.test.0.iter().zip(&p.fold.test.1).zip(&probs) {
            writeln!(
                w,
                "{}\t{}\t{}\t{prob}",
                pair.drug(),
                pair.protein(),
                u8::from(y)
            )?;
        }
        Ok(())
    })?;
    out.write_json("metrics.json", &metrics)?;
    debug_assert_eq!(p.plan.folds.len(), 1);
    Ok(metrics)
}

/// Full-factorial grid search on one split.
pub fn cmd_gridsearch(cfg: &RunConfig, out: &mut Artifacts) -> Result<fairdti::model::GridReport> {
    let p = prepare(cfg, out)?;
    let lattice = cfg.grid.lattice();
    let train_graph = &p.train_graph;
    let report = grid_search(
        &p.fold,
        &lattice,
        &cfg.snn,
        cfg.grid.repeats,
        seed::derive(cfg.seed(), "grid"),
        |dim| {
            let params = Node2VecParams {
                dim,
                ..embedding_params(cfg, "embed")
            };
            embed(train_graph, &params)
        },
    )?;
    out.write("grid.csv", |w| report.write_csv(w))?;
    if let Some(best) = report.best() {
        out.write_json("best.json", best)?;
    }
    Ok(report)
}

/// Cross-dataset AUROC matrix over all configured graphs.
pub fn cmd_leakage(
    cfg: &RunConfig,
    out: &mut Artifacts,
) -> Result<fairdti::leakage::LeakageMatrix> {
    let graphs = load_graphs(cfg)?;
    let m = leakage_matrix(&graphs, &cfg.leakage())?;
    out.write("leakage.csv", |w| m.write_csv(w))?;
    out.write("leakage_long.csv", |w| m.write_long_csv(w))?;
    Ok(m)
}

/// Trains one classifier per call; embeddings of the full graph are shared
/// between calls with the same seed.
struct SweepRunner<'a> {
    cfg: &'a RunConfig,
    graph: &'a DtiGraph,
    embeddings: Mutex<HashMap<u64, Arc<EmbeddingTable>>>,
}

impl SweepRunner<'_> {
    fn embedding(&self, seed_value: u64) -> Result<Arc<EmbeddingTable>> {
        if let Some(e) = self
            .embeddings
            .lock()
            .expect("embedding cache")
            .get(&seed_value)
        {
            return Ok(Arc::clone(e));
        }
        let params = Node2VecParams {
            seed: seed::derive(seed_value, "embed"),
            ..self.cfg.embedding_params()
        };
        let table = Arc::new(embed(self.graph, &params)?);
        self.embeddings
            .lock()
            .expect("embedding cache")
            .insert(seed_value, Arc::clone(&table));
        Ok(table)
    }

    fn snn(&self, seed_value: u64) -> SnnParams {
        SnnParams {
            seed: seed::derive(seed_value, "snn"),
            ..self.cfg.snn.clone()
        }
    }

    /// 70/30 stratified split of the sampled pairs, then test AUROC.
    fn run(&self, data: &SampledDataset, seed_value: u64) -> Result<f64> {
        let emb = self.embedding(seed_value)?;
        let (pairs, labels) = data.labeled_pairs();
        let (tr, te) =
            stratified_holdout(&pairs, &labels, self.cfg.leakage_test_fraction, seed_value)?;
        let (model, _) = train(
            &pair_features(&emb, &tr.0)?,
            &tr.1,
            &self.snn(seed_value),
            None,
        )?;
        let scores: Vec<f64> = model
            .logits(&pair_features(&emb, &te.0)?)?
            .iter()
            .copied()
            .collect();
        auroc(&scores, &te.1)
    }
}

#[derive(Debug, Serialize)]
struct SweepSummary<'a> {
    table: &'a fairdti::negatives::SweepTable,
    /// Negative when AUROC tends to fall as the training window widens.
    trend: &'a str,
}

/// AUROC across RMSD training windows plus the random baseline.
pub fn cmd_sweep(cfg: &RunConfig, out: &mut Artifacts) -> Result<fairdti::negatives::SweepTable> {
    let g = first_graph(cfg)?;
    let m = rmsd_matrix(cfg, out)?;
    let ts: Vec<f64> = (cfg.sweep.t_min..=cfg.sweep.t_max).map(f64::from).collect();
    let runner = SweepRunner {
        cfg,
        graph: &g,
        embeddings: Mutex::new(HashMap::new()),
    };
    let base = fairdti::negatives::WindowConfig {
        seed: seed::derive(cfg.seed(), "sweep"),
        ..cfg.sampler.window.clone()
    };
    let table = window_sweep(&g, &m, &base, &ts, cfg.sweep.repeats, |d, s| {
        runner.run(d, s)
    })?;
    out.write("sweep.csv", |w| table.write_csv(w))?;
    let trend = match table.trend_tau {
        Some(t) if t < 0.0 => "decreasing",
        Some(t) if t > 0.0 => "increasing",
        _ => "flat",
    };
    out.write_json(
        "sweep.json",
        &SweepSummary {
            table: &table,
            trend,
        },
    )?;

    if cfg.sweep.holdout_runs > 0 {
        let data = sample_rmsd_window(&g, &m, &base)?;
        let (pairs, labels) = data.labeled_pairs();
        let holdout: Vec<EdgePair> = data
            .holdout_negatives
            .iter()
            .map(|n| n.pair.clone())
            .collect();
        let mut trained: Vec<(SnnModel, Arc<EmbeddingTable>)> = Vec::new();
        for r in 0..cfg.sweep.holdout_runs {
            let s = seed::derive_indexed(cfg.seed(), "holdout-run", r as u64);
            let emb = runner.embedding(s)?;
            let (model, _) = train(&pair_features(&emb, &pairs)?, &labels, &runner.snn(s), None)?;
            trained.push((model, emb));
        }
        let classifiers: Vec<EmbeddedClassifier> = trained
            .iter()
            .map(|(model, emb)| EmbeddedClassifier {
                model,
                embeddings: emb,
            })
            .collect();
        let models: Vec<&dyn PairModel> = classifiers.iter().map(|c| c as &dyn PairModel).collect();
        let rows = score_holdout(&models, &holdout)?;
        out.write("holdout_scores.tsv", |w| write_holdout_scores(&rows, w))?;
    }
    Ok(table)
}

/// Resolve a manifest entry into the local cache.
pub fn cmd_fetch(
    manifest: &Path,
    name: &str,
    cache: Option<&Path>,
    out: &mut Artifacts,
) -> Result<crate::registry::Fetched> {
    let m = Manifest::load(manifest)?;
    let cache = cache
        .map(Path::to_path_buf)
        .unwrap_or_else(default_cache_dir);
    let fetched = fetch(&m, name, &cache)?;
    out.write_json("fetched.json", &fetched)?;
    Ok(fetched)
}
