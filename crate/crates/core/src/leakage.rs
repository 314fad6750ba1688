//! Cross-dataset evaluation matrix exposing embedding leakage.
//!
//! Cell `(A, B)` trains the classifier on dataset `A` and scores dataset `B`.
//! Off the diagonal every dataset is embedded on its own, so a model trained
//! on `A`'s vector space meets `B`'s unrelated space and should score near
//! chance. On the diagonal the embedding is computed on the full graph before
//! a 70/30 split of the labeled pairs, which lets test edges shape the
//! training features.

use std::fmt;
use std::io::Write;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::{embed, pair_features, EmbeddingTable, Node2VecParams};
use crate::error::{Error, Result};
use crate::graph::{DtiGraph, EdgePair};
use crate::metrics::auroc;
use crate::model::{train, SnnModel, SnnParams};
use crate::negatives::sample_random;
use crate::seed;
use crate::split::LabeledPairs;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LeakageConfig {
    pub node2vec: Node2VecParams,
    pub snn: SnnParams,
    /// Held-out share of the labeled pairs for diagonal cells.
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for LeakageConfig {
    fn default() -> Self {
        LeakageConfig {
            node2vec: Node2VecParams {
                dim: 32,
                ..Default::default()
            },
            snn: SnnParams {
                hidden: 32,
                epochs: 50,
                batch_denominator: 16,
                learning_rate: 5e-3,
                ..Default::default()
            },
            test_fraction: 0.3,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    DiagonalSameGraph,
    CrossDataset,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::DiagonalSameGraph => "diagonal-same-graph",
            Regime::CrossDataset => "cross-dataset",
        })
    }
}

/// Square AUROC matrix; rows are training datasets, columns test datasets.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LeakageMatrix {
    pub labels: Vec<String>,
    pub values: Vec<f64>,
}

impl LeakageMatrix {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, train: usize, test: usize) -> f64 {
        self.values[train * self.len() + test]
    }

    pub fn regime(&self, train: usize, test: usize) -> Regime {
        if train == test {
            Regime::DiagonalSameGraph
        } else {
            Regime::CrossDataset
        }
    }

    pub fn diagonal_mean(&self) -> f64 {
        (0..self.len()).map(|i| self.get(i, i)).sum::<f64>() / self.len() as f64
    }

    pub fn off_diagonal_mean(&self) -> f64 {
        let n = self.len();
        let total: f64 = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|(i, j)| self.get(i, j))
            .sum();
        total / (n * (n - 1)) as f64
    }

    /// Matrix form: header `train\test,<labels…>`, one row per training set.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "train\\test")?;
        for l in &self.labels {
            write!(w, ",{l}")?;
        }
        writeln!(w)?;
        for (i, l) in self.labels.iter().enumerate() {
            write!(w, "{l}")?;
            for j in 0..self.len() {
                write!(w, ",{:.6}", self.get(i, j))?;
            }
            writeln!(w)?;
        }
        w.flush()
    }

    /// Long form `train,test,auroc`, suitable for heat-map plotting.
    pub fn write_long_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "train,test,auroc")?;
        for i in 0..self.len() {
            for j in 0..self.len() {
                writeln!(
                    w,
                    "{},{},{:.6}",
                    self.labels[i],
                    self.labels[j],
                    self.get(i, j)
                )?;
            }
        }
        w.flush()
    }
}

/// Positives of `g` plus an equal number of uniformly drawn non-edges.
pub fn balanced_pairs(g: &DtiGraph, seed_value: u64) -> Result<LabeledPairs> {
    Ok(sample_random(g, 1, seed_value)?.labeled_pairs())
}

/// Split labeled pairs so that each class keeps the same `test_fraction`.
pub fn stratified_holdout(
    pairs: &[EdgePair],
    labels: &[bool],
    test_fraction: f64,
    seed_value: u64,
) -> Result<(LabeledPairs, LabeledPairs)> {
    if !(0.0 < test_fraction && test_fraction < 1.0) {
        return Err(Error::Validation(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let mut rng = seed::rng(seed::derive(seed_value, "stratified-holdout"));
    let (mut train, mut test) = ((Vec::new(), Vec::new()), (Vec::new(), Vec::new()));
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        let n_test = (idx.len() as f64 * test_fraction).round() as usize;
        if n_test == 0 || n_test == idx.len() {
            return Err(Error::NotEnoughEdges(format!(
                "{} {} pairs cannot be split {:.0}/{:.0}",
                idx.len(),
                if class { "positive" } else { "negative" },
                100.0 * (1.0 - test_fraction),
                100.0 * test_fraction
            )));
        }
        for (k, &i) in idx.iter().enumerate() {
            let side = if k < n_test { &mut test } else { &mut train };
            side.0.push(pairs[i].clone());
            side.1.push(class);
        }
    }
    Ok((train, test))
}

fn score(
    model: &SnnModel,
    emb: &EmbeddingTable,
    pairs: &[EdgePair],
    labels: &[bool],
) -> Result<f64> {
    let z: Vec<f64> = model
        .logits(&pair_features(emb, pairs)?)?
        .iter()
        .copied()
        .collect();
    auroc(&z, labels)
}

struct Prepared {
    emb: EmbeddingTable,
    pairs: Vec<EdgePair>,
    labels: Vec<bool>,
    /// Trained on the whole balanced set; used for off-diagonal cells.
    full_model: SnnModel,
    diagonal: f64,
}

/// Train-on-row, test-on-column AUROC for every ordered pair of datasets.
pub fn leakage_matrix(graphs: &[DtiGraph], cfg: &LeakageConfig) -> Result<LeakageMatrix> {
    if graphs.len() < 2 {
        return Err(Error::Validation(
            "leakage matrix needs at least two datasets".into(),
        ));
    }
    let prepared: Vec<Prepared> = graphs
        .par_iter()
        .map(|g| {
            let s = seed::derive(cfg.seed, &format!("leakage/{}", g.name()));
            let n2v = Node2VecParams {
                seed: seed::derive(s, "embed"),
                ..cfg.node2vec.clone()
            };
            let emb = embed(g, &n2v)?;
            let (pairs, labels) = balanced_pairs(g, seed::derive(s, "negatives"))?;
            let snn = SnnParams {
                seed: seed::derive(s, "snn"),
                ..cfg.snn.clone()
            };
            let x = pair_features(&emb, &pairs)?;
            let (full_model, _) = train(&x, &labels, &snn, None)?;

            let (tr, te) =
                stratified_holdout(&pairs, &labels, cfg.test_fraction, seed::derive(s, "split"))?;
            let (diag_model, _) = train(&pair_features(&emb, &tr.0)?, &tr.1, &snn, None)?;
            let diagonal = score(&diag_model, &emb, &te.0, &te.1)?;
            Ok(Prepared {
                emb,
                pairs,
                labels,
                full_model,
                diagonal,
            })
        })
        .collect::<Result<_>>()?;

    let n = graphs.len();
    let values = (0..n * n)
        .into_par_iter()
        .map(|cell| {
            let (i, j) = (cell / n, cell % n);
            if i == j {
                Ok(prepared[i].diagonal)
            } else {
                let target = &prepared[j];
                score(
                    &prepared[i].full_model,
                    &target.emb,
                    &target.pairs,
                    &target.labels,
                )
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LeakageMatrix {
        labels: graphs.iter().map(|g| g.name().to_string()).collect(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::planted_blocks;

    #[test]
    fn stratified_split_keeps_class_ratios() {
        let pairs: Vec<EdgePair> = (0..20)
            .map(|i| EdgePair::new(format!("d{i}"), "p"))
            .collect();
        let labels: Vec<bool> = (0..20).map(|i| i < 10).collect();
        let (train, test) = stratified_holdout(&pairs, &labels, 0.3, 1).unwrap();
        assert_eq!(test.1.iter().filter(|&&y| y).count(), 3);
        assert_eq!(test.1.len(), 6);
        assert_eq!(train.1.len(), 14);
        assert!(stratified_holdout(&pairs[..2], &labels[..2], 0.3, 1).is_err());
        assert!(stratified_holdout(&pairs, &labels, 1.0, 1).is_err());
    }

    #[test]
    fn matrix_shape_and_regimes() {
        let graphs: Vec<DtiGraph> = ["A", "B", "C"]
            .iter()
            .enumerate()
            .map(|(k, p)| planted_blocks(p, 4, 5, 5, 0.8, 0.02, k as u64))
            .collect();
        let cfg = LeakageConfig {
            node2vec: Node2VecParams {
                dim: 16,
                walks_per_node: 5,
                walk_length: 30,
                ..Default::default()
            },
            ..Default::default()
        };
        let m = leakage_matrix(&graphs, &cfg).unwrap();
        assert_eq!(m.values.len(), 9);
        assert_eq!(m.regime(1, 1), Regime::DiagonalSameGraph);
        assert_eq!(m.regime(0, 2), Regime::CrossDataset);
        assert!(m.values.iter().all(|v| (0.0..=1.0).contains(v)));
        let mut long = Vec::new();
        m.write_long_csv(&mut long).unwrap();
        assert_eq!(String::from_utf8(long).unwrap().lines().count(), 10);
        assert!(leakage_matrix(&graphs[..1], &cfg).is_err());
    }
}
