use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use serde::Serialize;

use super::{Gradients, SnnModel, SnnParams};
use crate::error::{Error, Result};
use crate::metrics::auroc;
use crate::seed;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPSILON: f64 = 1e-8;

/// `round(n / denominator)`, never below one.
pub fn batch_size(n: usize, denominator: usize) -> usize {
    ((n as f64 / denominator as f64).round() as usize).max(1)
}

/// Per-epoch mean training loss and, when a validation set is given, its AUROC.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TrainTrace {
    pub epochs: Vec<(usize, f64, Option<f64>)>,
}

impl TrainTrace {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "epoch,mean_loss,val_auroc")?;
        for &(epoch, loss, val) in &self.epochs {
            match val {
                Some(v) => writeln!(w, "{epoch},{loss},{v}")?,
                None => writeln!(w, "{epoch},{loss},NA")?,
            }
        }
        w.flush()
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.1)
    }
}

struct Adam {
    t: i32,
    m: Gradients,
    v: Gradients,
}

fn zeros_like(m: &SnnModel) -> Gradients {
    Gradients {
        w1: DMatrix::zeros(m.w1.nrows(), m.w1.ncols()),
        b1: DVector::zeros(m.b1.len()),
        w2: DVector::zeros(m.w2.len()),
        b2: 0.0,
    }
}

impl Adam {
    fn new(model: &SnnModel) -> Self {
        Adam {
            t: 0,
            m: zeros_like(model),
            v: zeros_like(model),
        }
    }

    fn step(&mut self, model: &mut SnnModel, g: &Gradients, lr: f64) {
        self.t += 1;
        let c1 = 1.0 - BETA1.powi(self.t);
        let c2 = 1.0 - BETA2.powi(self.t);
        let update = |p: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
            *m = BETA1 * *m + (1.0 - BETA1) * g;
            *v = BETA2 * *v + (1.0 - BETA2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + EPSILON);
        };
        for (((p, m), v), &g) in model
            .w1
            .iter_mut()
            .zip(self.m.w1.iter_mut())
            .zip(self.v.w1.iter_mut())
            .zip(g.w1.iter())
        {
            update(p, m, v, g);
        }
        for (((p, m), v), &g) in model
            .b1
            .iter_mut()
            .zip(self.m.b1.iter_mut())
            .zip(self.v.b1.iter_mut())
            .zip(g.b1.iter())
        {
            update(p, m, v, g);
        }
        for (((p, m), v), &g) in model
            .w2
            .iter_mut()
            .zip(self.m.w2.iter_mut())
            .zip(self.v.w2.iter_mut())
            .zip(g.w2.iter())
        {
            update(p, m, v, g);
        }
        update(&mut model.b2, &mut self.m.b2, &mut self.v.b2, g.b2);
    }
}

fn select_rows(x: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), x.ncols(), |i, j| x[(rows[i], j)])
}

/// Mini-batch training with Adam. Each epoch shuffles the samples with its
/// own derived seed; the run is deterministic for fixed inputs and params.
pub fn train(
    x: &DMatrix<f64>,
    labels: &[bool],
    params: &SnnParams,
    validation: Option<(&DMatrix<f64>, &[bool])>,
) -> Result<(SnnModel, TrainTrace)> {
    params.validate()?;
    if x.nrows() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} feature rows for {} labels",
            x.nrows(),
            labels.len()
        )));
    }
    if !labels.contains(&true) || !labels.contains(&false) {
        return Err(Error::SingleClass);
    }
    let mut model = SnnModel::init(x.ncols(), params.hidden, params.seed);
    let mut adam = Adam::new(&model);
    let n = labels.len();
    let batch = batch_size(n, params.batch_denominator);
    let mut order: Vec<usize> = (0..n).collect();
    let mut trace = TrainTrace::default();

    for epoch in 0..params.epochs {
        order.shuffle(&mut seed::rng(seed::derive_indexed(
            params.seed,
            "snn-epoch",
            epoch as u64,
        )));
        let mut total = 0.0;
        for rows in order.chunks(batch) {
            let xb = select_rows(x, rows);
            let yb: Vec<bool> = rows.iter().map(|&r| labels[r]).collect();
            let (loss, grads) = model.loss_and_gradients(&xb, &yb, params)?;
            total += loss * rows.len() as f64;
            adam.step(&mut model, &grads, params.learning_rate);
        }
        let val = match validation {
            Some((xv, yv)) => {
                let scores: Vec<f64> = model.logits(xv)?.iter().copied().collect();
                Some(auroc(&scores, yv)?)
            }
            None => None,
        };
        trace.epochs.push((epoch + 1, total / n as f64, val));
    }
    if model
        .w1
        .iter()
        .chain(model.b1.iter())
        .chain(model.w2.iter())
        .any(|v| !v.is_finite())
        || !model.b2.is_finite()
    {
        return Err(Error::Validation(
            "training diverged to non-finite weights".into(),
        ));
    }
    Ok((model, trace))
}
