//! Shallow neural network over concatenated drug and protein embeddings:
//! `h = σ(ReLU(X·W1 + b1)·W2 + b2)`.

mod grid;
mod loss;
mod train;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::embed::{pair_features, EmbeddingTable};
use crate::error::{Error, Result};
use crate::graph::EdgePair;
use crate::negatives::PairModel;
use crate::seed;

pub use grid::{grid_search, GridConfig, GridInput, GridLattice, GridReport, GridRow};
pub use loss::{bce_grad, bce_loss, focal_grad, focal_loss, LossKind};
pub use train::{batch_size, train, TrainTrace};

/// Hidden widths standing in for the four architecture types of the grid.
pub const ARCHITECTURE_WIDTHS: [usize; 4] = [32, 64, 128, 256];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SnnParams {
    pub hidden: usize,
    pub loss: LossKind,
    pub epochs: usize,
    /// Batch size is `round(N / batch_denominator)`, at least 1.
    pub batch_denominator: usize,
    pub learning_rate: f64,
    /// Loss weight `w_k` of positive samples; negatives keep weight 1.
    pub positive_weight: f64,
    pub seed: u64,
}

impl Default for SnnParams {
    fn default() -> Self {
        SnnParams {
            hidden: 64,
            loss: LossKind::Bce,
            epochs: 10,
            batch_denominator: 16,
            learning_rate: 1e-3,
            positive_weight: 1.0,
            seed: 0,
        }
    }
}

impl SnnParams {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.hidden == 0 {
            problems.push("hidden width must be >= 1".to_string());
        }
        if self.epochs == 0 {
            problems.push("epochs must be >= 1".to_string());
        }
        if self.batch_denominator == 0 {
            problems.push("batch denominator must be >= 1".to_string());
        }
        if !(self.learning_rate > 0.0) {
            problems.push(format!(
                "learning rate must be > 0, got {}",
                self.learning_rate
            ));
        }
        if !(self.positive_weight > 0.0) {
            problems.push(format!(
                "positive weight must be > 0, got {}",
                self.positive_weight
            ));
        }
        if let LossKind::Focal { gamma, alpha } = self.loss {
            if !(gamma >= 0.0) {
                problems.push(format!("focal gamma must be >= 0, got {gamma}"));
            }
            if alpha.is_some_and(|a| !(0.0..=1.0).contains(&a)) {
                problems.push("focal alpha must lie in [0, 1]".to_string());
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }
}

/// Weights of the two-layer network.
#[derive(Clone, Debug, PartialEq)]
pub struct SnnModel {
    /// `2d × n`
    pub w1: DMatrix<f64>,
    pub b1: DVector<f64>,
    /// `n × 1`
    pub w2: DVector<f64>,
    pub b2: f64,
}

/// Activations kept from a forward pass for backpropagation.
pub(crate) struct ForwardCache {
    pub pre: DMatrix<f64>,
    pub act: DMatrix<f64>,
    pub logits: DVector<f64>,
}

/// Parameter gradients, laid out like [`SnnModel`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub w1: DMatrix<f64>,
    pub b1: DVector<f64>,
    pub w2: DVector<f64>,
    pub b2: f64,
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl SnnModel {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        SnnModel {
            w1: DMatrix::zeros(input, hidden),
            b1: DVector::zeros(hidden),
            w2: DVector::zeros(hidden),
            b2: 0.0,
        }
    }

    /// Uniform `±1/√fan_in` initialization for weights and biases.
    pub fn init(input: usize, hidden: usize, seed_value: u64) -> Self {
        use rand::Rng;
        let mut rng = seed::rng(seed::derive(seed_value, "snn-init"));
        let b1 = 1.0 / (input as f64).sqrt();
        let b2 = 1.0 / (hidden as f64).sqrt();
        SnnModel {
            w1: DMatrix::from_fn(input, hidden, |_, _| rng.random_range(-b1..b1)),
            b1: DVector::from_fn(hidden, |_, _| rng.random_range(-b1..b1)),
            w2: DVector::from_fn(hidden, |_, _| rng.random_range(-b2..b2)),
            b2: rng.random_range(-b2..b2),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w1.nrows()
    }

    pub fn hidden(&self) -> usize {
        self.w1.ncols()
    }

    pub fn n_parameters(&self) -> usize {
        parameter_count(self.input_dim(), self.hidden())
    }

    pub(crate) fn forward_cached(&self, x: &DMatrix<f64>) -> Result<ForwardCache> {
        if x.ncols() != self.input_dim() {
            return Err(Error::ShapeMismatch(format!(
                "input has {} columns, model expects {}",
                x.ncols(),
                self.input_dim()
            )));
        }
        let mut pre = x * &self.w1;
        for mut row in pre.row_iter_mut() {
            row += self.b1.transpose();
        }
        let act = pre.map(|v| v.max(0.0));
        let logits = (&act * &self.w2).add_scalar(self.b2);
        Ok(ForwardCache { pre, act, logits })
    }

    /// Logits `z` for every row of `x` (`K × 2d`).
    pub fn logits(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        Ok(self.forward_cached(x)?.logits)
    }

    /// Interaction probabilities `σ(z)`.
    pub fn forward(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        Ok(self.logits(x)?.map(sigmoid))
    }

    /// Backpropagate `dL/dz` to parameter gradients.
    pub(crate) fn backward(
        &self,
        x: &DMatrix<f64>,
        cache: &ForwardCache,
        dz: &DVector<f64>,
    ) -> Gradients {
        let w2 = cache.act.transpose() * dz;
        let b2 = dz.sum();
        let mut dpre = dz * self.w2.transpose();
        dpre.zip_apply(&cache.pre, |g, p| {
            if p <= 0.0 {
                *g = 0.0;
            }
        });
        let w1 = x.transpose() * &dpre;
        let b1 = DVector::from_iterator(dpre.ncols(), dpre.column_iter().map(|c| c.sum()));
        Gradients { w1, b1, w2, b2 }
    }

    /// Loss and parameter gradients on one batch.
    pub fn loss_and_gradients(
        &self,
        x: &DMatrix<f64>,
        labels: &[bool],
        params: &SnnParams,
    ) -> Result<(f64, Gradients)> {
        let cache = self.forward_cached(x)?;
        let z = cache.logits.as_slice();
        let weights = class_weights(labels, params.positive_weight);
        let (loss, dz) = match params.loss {
            LossKind::Bce => (bce_loss(z, labels, &weights), bce_grad(z, labels, &weights)),
            LossKind::Focal { gamma, alpha } => (
                focal_loss(z, labels, gamma, alpha),
                focal_grad(z, labels, gamma, alpha),
            ),
        };
        let grads = self.backward(x, &cache, &DVector::from_vec(dz));
        Ok((loss, grads))
    }

    pub fn to_json(&self) -> String {
        let record = ModelRecord {
            input_dim: self.input_dim(),
            hidden: self.hidden(),
            w1: self
                .w1
                .row_iter()
                .flat_map(|r| r.iter().copied().collect::<Vec<_>>())
                .collect(),
            b1: self.b1.iter().copied().collect(),
            w2: self.w2.iter().copied().collect(),
            b2: self.b2,
        };
        serde_json::to_string_pretty(&record).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: ModelRecord = serde_json::from_str(text)?;
        if r.w1.len() != r.input_dim * r.hidden || r.b1.len() != r.hidden || r.w2.len() != r.hidden
        {
            return Err(Error::ShapeMismatch(
                "model arrays do not match declared shapes".into(),
            ));
        }
        Ok(SnnModel {
            w1: DMatrix::from_row_slice(r.input_dim, r.hidden, &r.w1),
            b1: DVector::from_vec(r.b1),
            w2: DVector::from_vec(r.w2),
            b2: r.b2,
        })
    }
}

pub fn parameter_count(input: usize, hidden: usize) -> usize {
    input * hidden + 2 * hidden + 1
}

pub(crate) fn class_weights(labels: &[bool], positive_weight: f64) -> Vec<f64> {
    labels
        .iter()
        .map(|&y| if y { positive_weight } else { 1.0 })
        .collect()
}

/// Row-major JSON form.
#[derive(Serialize, Deserialize)]
struct ModelRecord {
    input_dim: usize,
    hidden: usize,
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: f64,
}

/// A trained network paired with the embeddings it reads features from.
pub struct EmbeddedClassifier<'a> {
    pub model: &'a SnnModel,
    pub embeddings: &'a EmbeddingTable,
}

impl PairModel for EmbeddedClassifier<'_> {
    fn predict(&self, pairs: &[EdgePair]) -> Result<Vec<f64>> {
        let x = pair_features(self.embeddings, pairs)?;
        Ok(self.model.forward(&x)?.iter().copied().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_model_outputs_one_half() {
        let m = SnnModel::zeros(4, 3);
        let h = m.forward(&DMatrix::from_element(5, 4, 1.7)).unwrap();
        assert_eq!(h.len(), 5);
        assert!(h.iter().all(|&p| p == 0.5));
        assert!(matches!(
            m.forward(&DMatrix::zeros(1, 3)),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn hand_computed_example() {
        // x = [1, 2]; W1 = [[1, -1], [0.5, 2]]; b1 = [0, -10]; W2 = [2, 3]; b2 = -1
        // pre = [1 + 1, -1 + 4 - 10] = [2, -7]; act = [2, 0]; z = 4 - 1 = 3
        let m = SnnModel {
            w1: DMatrix::from_row_slice(2, 2, &[1.0, -1.0, 0.5, 2.0]),
            b1: DVector::from_vec(vec![0.0, -10.0]),
            w2: DVector::from_vec(vec![2.0, 3.0]),
            b2: -1.0,
        };
        let x = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        assert_eq!(m.logits(&x).unwrap()[0], 3.0);
        let expected = 1.0 / (1.0 + (-3.0f64).exp());
        assert!((m.forward(&x).unwrap()[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let m = SnnModel::init(6, 4, 11);
        let back = SnnModel::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
        assert_eq!(m.n_parameters(), 6 * 4 + 4 + 4 + 1);
    }

    #[test]
    fn init_bounds() {
        let m = SnnModel::init(100, 8, 1);
        assert!(m.w1.iter().all(|w| w.abs() <= 0.1));
        assert!(m.w2.iter().all(|w| w.abs() <= 1.0 / 8f64.sqrt()));
    }

    fn relative_error(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn backprop_matches_finite_differences(seed_value in 0u64..1000, focal in any::<bool>()) {
            let m = SnnModel::init(3, 4, seed_value);
            let mut rng = seed::rng(seed_value);
            use rand::Rng;
            let x = DMatrix::from_fn(5, 3, |_, _| rng.random_range(-2.0..2.0));
            let labels = [true, false, true, true, false];
            let loss = if focal { LossKind::Focal { gamma: 2.0, alpha: Some(0.25) } } else { LossKind::Bce };
            let params = SnnParams { loss, positive_weight: 1.5, ..Default::default() };
            let (_, g) = m.loss_and_gradients(&x, &labels, &params).unwrap();
            let h = 1e-6;
            let eval = |m: &SnnModel| m.loss_and_gradients(&x, &labels, &params).unwrap().0;
            for i in 0..3 {
                for j in 0..4 {
                    let (mut up, mut down) = (m.clone(), m.clone());
                    up.w1[(i, j)] += h;
                    down.w1[(i, j)] -= h;
                    let fd = (eval(&up) - eval(&down)) / (2.0 * h);
                    // ReLU kinks make a few coordinates non-differentiable; skip those
                    if (fd - g.w1[(i, j)]).abs() > 1e-7 {
                        prop_assert!(relative_error(fd, g.w1[(i, j)]) < 1e-4, "w1 {fd} vs {}", g.w1[(i, j)]);
                    }
                }
            }
            let (mut up, mut down) = (m.clone(), m.clone());
            up.b2 += h;
            down.b2 -= h;
            let fd = (eval(&up) - eval(&down)) / (2.0 * h);
            prop_assert!(relative_error(fd, g.b2) < 1e-4);
            for j in 0..4 {
                let (mut up, mut down) = (m.clone(), m.clone());
                up.w2[j] += h;
                down.w2[j] -= h;
                let fd = (eval(&up) - eval(&down)) / (2.0 * h);
                if (fd - g.w2[j]).abs() > 1e-7 {
                    prop_assert!(relative_error(fd, g.w2[j]) < 1e-4);
                }
            }
        }
    }
}
