//! Constrained fold generation for link-prediction benchmarks.
//!
//! Three split modes are supported:
//!
//! * [`SplitMode::Sp`]: edges are partitioned; any node may appear on both sides.
//! * [`SplitMode::Sd`]: drugs are partitioned; no drug of the test set is seen
//!   during training.
//! * [`SplitMode::St`]: proteins are partitioned likewise.
//!
//! The validation set is carved out of the training side after the node-level
//! partition, so node-disjointness binds `train ∪ val` against `test`.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DtiGraph, Edge, EdgePair, NodeKind};
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SplitMode {
    Sp,
    Sd,
    St,
}

impl SplitMode {
    pub const ALL: [SplitMode; 3] = [SplitMode::Sp, SplitMode::Sd, SplitMode::St];

    /// The node side that must not be shared between train and test.
    fn disjoint_side(self) -> Option<NodeKind> {
        match self {
            SplitMode::Sp => None,
            SplitMode::Sd => Some(NodeKind::Drug),
            SplitMode::St => Some(NodeKind::Protein),
        }
    }
}

impl fmt::Display for SplitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for SplitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sp" => Ok(SplitMode::Sp),
            "sd" => Ok(SplitMode::Sd),
            "st" => Ok(SplitMode::St),
            _ => Err(Error::Validation(format!(
                "unknown split mode `{s}` (expected Sp, Sd or St)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ratios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Ratios {
    pub const BASELINE: Ratios = Ratios {
        train: 0.75,
        val: 0.15,
        test: 0.10,
    };

    pub fn new(train: f64, val: f64, test: f64) -> Self {
        Ratios { train, val, test }
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::Validation(format!(
                "ratios must be positive: {self:?}"
            )));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(format!("ratios must sum to 1: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<EdgePair>,
    pub val: Vec<EdgePair>,
    pub test: Vec<EdgePair>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Holdout,
    Kfold { k: usize, repeat: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub dataset: String,
    pub mode: SplitMode,
    pub seed: u64,
    pub ratios: Ratios,
    pub scheme: Scheme,
    pub folds: Vec<Fold>,
}

impl FoldPlan {
    /// A copy holding only fold `i`.
    pub fn single_fold(&self, i: usize) -> FoldPlan {
        FoldPlan {
            folds: vec![self.folds[i].clone()],
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }
}

fn neet(what: impl Into<String>) -> Error {
    Error::NotEnoughEdges(what.into())
}

/// Largest-remainder apportionment of `n` items by `weights`, then every
/// part is topped up to one item by taking from the largest part.
fn apportion(n: usize, weights: &[f64]) -> Result<Vec<usize>> {
    if n < weights.len() {
        return Err(neet(format!(
            "{n} items cannot fill {} folds",
            weights.len()
        )));
    }
    let total: f64 = weights.iter().sum();
    let quotas: Vec<f64> = weights.iter().map(|w| w / total * n as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (quotas[a] - quotas[a].floor(), quotas[b] - quotas[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let assigned: usize = counts.iter().sum();
    for &i in order.iter().take(n - assigned) {
        counts[i] += 1;
    }
    while let Some(empty) = counts.iter().position(|&c| c == 0) {
        let largest = (0..counts.len())
            .max_by_key(|&i| (counts[i], usize::MAX - i))
            .unwrap();
        counts[largest] -= 1;
        counts[empty] += 1;
    }
    Ok(counts)
}

/// Greedy bin packing: nodes in descending degree (ties in seeded random
/// order) each go to the bin with the lowest load relative to its target.
fn pack_nodes(degrees: &[(u32, usize)], targets: &[f64], rng: &mut seed::Rng) -> Vec<Vec<u32>> {
    let mut nodes: Vec<(u32, usize)> = degrees.iter().copied().filter(|&(_, d)| d > 0).collect();
    nodes.shuffle(rng);
    nodes.sort_by_key(|&(_, deg)| std::cmp::Reverse(deg));
    let mut loads = vec![0usize; targets.len()];
    let mut bins = vec![Vec::new(); targets.len()];
    for (node, deg) in nodes {
        let lightest = (0..targets.len())
            .min_by(|&a, &b| {
                let fa = loads[a] as f64 / targets[a];
                let fb = loads[b] as f64 / targets[b];
                fa.total_cmp(&fb).then(a.cmp(&b))
            })
            .expect("at least one bin");
        loads[lightest] += deg;
        bins[lightest].push(node);
    }
    bins
}

fn side_degrees(g: &DtiGraph, side: NodeKind) -> Vec<(u32, usize)> {
    let n = match side {
        NodeKind::Drug => g.n_drugs(),
        NodeKind::Protein => g.n_proteins(),
    };
    (0..n as u32).map(|i| (i, g.degree(side, i))).collect()
}

fn endpoint(e: Edge, side: NodeKind) -> u32 {
    match side {
        NodeKind::Drug => e.drug,
        NodeKind::Protein => e.protein,
    }
}

/// Partition edges by the side of their endpoint: edges whose `side` node is
/// in `test_nodes` go to the test part.
pub fn partition_by_nodes(
    g: &DtiGraph,
    side: NodeKind,
    test_nodes: &HashSet<u32>,
) -> (Vec<Edge>, Vec<Edge>) {
    g.edges()
        .iter()
        .partition(|&&e| !test_nodes.contains(&endpoint(e, side)))
}

fn to_pairs(g: &DtiGraph, edges: &[Edge]) -> Vec<EdgePair> {
    let mut v: Vec<EdgePair> = edges.iter().map(|&e| g.edge_pair(e)).collect();
    v.sort();
    v
}

/// One train/validation/test fold under `mode`.
pub fn split(g: &DtiGraph, mode: SplitMode, ratios: Ratios, seed_value: u64) -> Result<FoldPlan> {
    ratios.validate()?;
    if g.n_edges() == 0 {
        return Err(neet("graph has no edges"));
    }
    let mut rng = seed::rng(seed_value);
    let (train_side, test) = match mode.disjoint_side() {
        None => {
            let mut edges = g.edges().to_vec();
            edges.shuffle(&mut rng);
            let counts = apportion(edges.len(), &[ratios.train + ratios.val, ratios.test])?;
            let test = edges.split_off(counts[0]);
            (edges, test)
        }
        Some(side) => {
            let bins = pack_nodes(
                &side_degrees(g, side),
                &[
                    (ratios.train + ratios.val) * g.n_edges() as f64,
                    ratios.test * g.n_edges() as f64,
                ],
                &mut rng,
            );
            let test_nodes: HashSet<u32> = bins[1].iter().copied().collect();
            let (mut tv, test) = partition_by_nodes(g, side, &test_nodes);
            tv.shuffle(&mut rng);
            (tv, test)
        }
    };
    if test.is_empty() {
        return Err(neet(format!("{mode} split left the test fold empty")));
    }
    let mut train = train_side;
    let counts = apportion(train.len(), &[ratios.train, ratios.val])?;
    let val = train.split_off(counts[0]);
    Ok(FoldPlan {
        dataset: g.name().to_string(),
        mode,
        seed: seed_value,
        ratios,
        scheme: Scheme::Holdout,
        folds: vec![Fold {
            train: to_pairs(g, &train),
            val: to_pairs(g, &val),
            test: to_pairs(g, &test),
        }],
    })
}

/// The baseline classifier's (0.75, 0.15, 0.10) pair split.
pub fn tvt_baseline_split(g: &DtiGraph, seed_value: u64) -> Result<FoldPlan> {
    split(g, SplitMode::Sp, Ratios::BASELINE, seed_value)
}

fn kfold_once(
    g: &DtiGraph,
    mode: SplitMode,
    k: usize,
    repeat: usize,
    plan_seed: u64,
) -> Result<FoldPlan> {
    let mut rng = seed::rng(plan_seed);
    let tests: Vec<Vec<Edge>> = match mode.disjoint_side() {
        None => {
            if g.n_edges() < k {
                return Err(neet(format!("{} edges cannot fill {k} folds", g.n_edges())));
            }
            let mut edges = g.edges().to_vec();
            edges.shuffle(&mut rng);
            let (base, extra) = (edges.len() / k, edges.len() % k);
            let mut out = Vec::with_capacity(k);
            let mut rest = edges.as_slice();
            for i in 0..k {
                let (head, tail) = rest.split_at(base + usize::from(i < extra));
                out.push(head.to_vec());
                rest = tail;
            }
            out
        }
        Some(side) => {
            let degrees = side_degrees(g, side);
            let active = degrees.iter().filter(|d| d.1 > 0).count();
            if active < k {
                return Err(neet(format!(
                    "{active} connected {side}s cannot fill {k} folds"
                )));
            }
            let bins = pack_nodes(&degrees, &vec![1.0; k], &mut rng);
            bins.iter()
                .map(|bin| {
                    let nodes: HashSet<u32> = bin.iter().copied().collect();
                    partition_by_nodes(g, side, &nodes).1
                })
                .collect()
        }
    };
    let folds = tests
        .iter()
        .enumerate()
        .map(|(i, test)| {
            let train: Vec<Edge> = tests
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .flat_map(|(_, t)| t.iter().copied())
                .collect();
            if train.is_empty() || test.is_empty() {
                return Err(neet(format!("fold {i} of {k} is empty")));
            }
            Ok(Fold {
                train: to_pairs(g, &train),
                val: Vec::new(),
                test: to_pairs(g, test),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let kf = k as f64;
    Ok(FoldPlan {
        dataset: g.name().to_string(),
        mode,
        seed: plan_seed,
        ratios: Ratios::new((kf - 1.0) / kf, 0.0, 1.0 / kf),
        scheme: Scheme::Kfold { k, repeat },
        folds,
    })
}

/// Repeated k-fold cross-validation. Repeat `r` uses seed `seed ^ r`.
pub fn kfold(
    g: &DtiGraph,
    mode: SplitMode,
    k: usize,
    repeats: usize,
    seed_value: u64,
) -> Result<Vec<FoldPlan>> {
    if k < 2 {
        return Err(Error::Validation(format!("k must be at least 2, got {k}")));
    }
    (0..repeats)
        .into_par_iter()
        .map(|r| kfold_once(g, mode, k, r, seed_value ^ r as u64))
        .collect()
}

/// Pairs with their labels, `true` for a known interaction.
pub type LabeledPairs = (Vec<EdgePair>, Vec<bool>);

/// Labeled pairs (positives and negatives) for each role of one fold.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LabeledFold {
    pub train: LabeledPairs,
    pub val: LabeledPairs,
    pub test: LabeledPairs,
}

/// Distribute negative pairs over the roles of `fold` without breaking the
/// split's node constraint.
///
/// Under Sd (St) a negative follows its drug (protein): to the test role if
/// that node is tested, to the training side if it is trained on, and for
/// nodes without positives to one side chosen once per node with the test
/// share as probability. Training-side negatives, and all negatives under
/// Sp, are then drawn into roles in proportion to the positive counts.
pub fn attach_negatives(
    fold: &Fold,
    mode: SplitMode,
    negatives: &[EdgePair],
    seed_value: u64,
) -> LabeledFold {
    use rand::Rng;
    let mut rng = seed::rng(seed::derive(seed_value, "attach-negatives"));
    let (n_train, n_val, n_test) = (
        fold.train.len() as f64,
        fold.val.len() as f64,
        fold.test.len() as f64,
    );
    let total = n_train + n_val + n_test;
    let side_of = |p: &EdgePair, side: NodeKind| -> String {
        match side {
            NodeKind::Drug => p.0.clone(),
            NodeKind::Protein => p.1.clone(),
        }
    };
    let mut node_role: HashMap<String, bool> = HashMap::new();
    if let Some(side) = mode.disjoint_side() {
        for p in fold.train.iter().chain(&fold.val) {
            node_role.insert(side_of(p, side), false);
        }
        for p in &fold.test {
            node_role.insert(side_of(p, side), true);
        }
    }
    let mut out = LabeledFold::default();
    for p in fold.train.iter() {
        out.train.0.push(p.clone());
        out.train.1.push(true);
    }
    for p in fold.val.iter() {
        out.val.0.push(p.clone());
        out.val.1.push(true);
    }
    for p in fold.test.iter() {
        out.test.0.push(p.clone());
        out.test.1.push(true);
    }
    for neg in negatives {
        let to_test = match mode.disjoint_side() {
            None => rng.random::<f64>() * total < n_test,
            Some(side) => {
                let key = side_of(neg, side);
                match node_role.get(&key) {
                    Some(&t) => t,
                    None => {
                        let t = rng.random::<f64>() * total < n_test;
                        node_role.insert(key, t);
                        t
                    }
                }
            }
        };
        let role = if to_test {
            &mut out.test
        } else if rng.random::<f64>() * (n_train + n_val) < n_val {
            &mut out.val
        } else {
            &mut out.train
        };
        role.0.push(neg.clone());
        role.1.push(false);
    }
    out
}

/// Outcome of checking a plan against its graph.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub folds_checked: usize,
    pub violations: Vec<String>,
}

impl VerifyReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check a plan from scratch against `g`.
///
/// Recomputes, per fold: membership of every pair in the graph, pairwise
/// disjointness and exact coverage of the three sets, non-emptiness, and the
/// node-overlap constraint of the plan's mode. For a multi-fold k-fold plan
/// it also checks that the test sets partition the edge set.
pub fn verify_plan(g: &DtiGraph, plan: &FoldPlan) -> VerifyReport {
    let mut v = Vec::new();
    let all: HashSet<(&str, &str)> = g
        .edges()
        .iter()
        .map(|&e| (g.drug_id(e.drug), g.protein_id(e.protein)))
        .collect();
    let key = |p: &EdgePair| (p.0.clone(), p.1.clone());

    for (fi, fold) in plan.folds.iter().enumerate() {
        let sets = [
            ("train", &fold.train),
            ("val", &fold.val),
            ("test", &fold.test),
        ];
        let mut owner: HashMap<(String, String), &str> = HashMap::new();
        for (name, pairs) in sets {
            for p in pairs.iter() {
                if !all.contains(&(p.drug(), p.protein())) {
                    v.push(format!(
                        "fold {fi}: {name} pair ({}, {}) is not an edge",
                        p.0, p.1
                    ));
                }
                if let Some(prev) = owner.insert(key(p), name) {
                    v.push(format!(
                        "fold {fi}: pair ({}, {}) in both {prev} and {name}",
                        p.0, p.1
                    ));
                }
            }
        }
        if owner.len() != all.len() {
            v.push(format!(
                "fold {fi}: covers {} of {} edges",
                owner.len(),
                all.len()
            ));
        }
        let must_fill: &[(&str, &Vec<EdgePair>)] = match plan.scheme {
            Scheme::Holdout => &sets,
            Scheme::Kfold { .. } => &[sets[0], sets[2]],
        };
        for (name, pairs) in must_fill {
            if pairs.is_empty() {
                v.push(format!("fold {fi}: {name} set is empty"));
            }
        }
        let node = |p: &EdgePair, side: NodeKind| match side {
            NodeKind::Drug => p.0.clone(),
            NodeKind::Protein => p.1.clone(),
        };
        if let Some(side) = plan.mode.disjoint_side() {
            let seen: BTreeSet<String> = fold
                .train
                .iter()
                .chain(&fold.val)
                .map(|p| node(p, side))
                .collect();
            let tested: BTreeSet<String> = fold.test.iter().map(|p| node(p, side)).collect();
            let shared: Vec<_> = seen.intersection(&tested).collect();
            if !shared.is_empty() {
                v.push(format!(
                    "fold {fi}: {} {side}s shared between train and test",
                    shared.len()
                ));
            }
        }
    }

    if let Scheme::Kfold { k, .. } = plan.scheme {
        if plan.folds.len() > 1 {
            if plan.folds.len() != k {
                v.push(format!("expected {k} folds, found {}", plan.folds.len()));
            }
            let mut times: HashMap<(String, String), usize> = HashMap::new();
            for fold in &plan.folds {
                for p in &fold.test {
                    *times.entry(key(p)).or_default() += 1;
                }
            }
            let repeated = times.values().filter(|&&c| c != 1).count();
            if repeated > 0 {
                v.push(format!(
                    "{repeated} edges appear in more than one test fold"
                ));
            }
            if times.len() != all.len() {
                v.push(format!(
                    "test folds cover {} of {} edges",
                    times.len(),
                    all.len()
                ));
            }
        }
    }
    VerifyReport {
        folds_checked: plan.folds.len(),
        violations: v,
    }
}

/// Node overlap between a training graph and a test graph.
#[derive(Clone, Debug)]
pub struct ScReport {
    pub shared_drugs: Vec<String>,
    pub shared_proteins: Vec<String>,
    pub removed_edges: usize,
    /// The test graph after removing shared nodes (unchanged when disjoint).
    pub test: DtiGraph,
}

/// Cross-dataset pairing. In strict mode any shared drug or protein is an
/// error; otherwise shared nodes and their edges are dropped from the test graph.
pub fn sc_pair(train: &DtiGraph, test: &DtiGraph, strict: bool) -> Result<ScReport> {
    let shared = |a: &[String], b: &[String]| -> Vec<String> {
        let b: HashSet<&String> = b.iter().collect();
        a.iter().filter(|x| b.contains(x)).cloned().collect()
    };
    let shared_drugs = shared(test.drugs(), train.drugs());
    let shared_proteins = shared(test.proteins(), train.proteins());
    if strict && (!shared_drugs.is_empty() || !shared_proteins.is_empty()) {
        return Err(Error::OverlapViolation {
            shared_drugs: shared_drugs.len(),
            shared_proteins: shared_proteins.len(),
        });
    }
    let cleaned = test.without_nodes(
        &shared_drugs.iter().cloned().collect(),
        &shared_proteins.iter().cloned().collect(),
    );
    if cleaned.n_edges() == 0 {
        return Err(neet(format!(
            "no test edges left in `{}` after removing shared nodes",
            test.name()
        )));
    }
    Ok(ScReport {
        removed_edges: test.n_edges() - cleaned.n_edges(),
        shared_drugs,
        shared_proteins,
        test: cleaned,
    })
}
