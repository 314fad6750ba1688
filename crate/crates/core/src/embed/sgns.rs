use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

use rand::Rng;
use rayon::prelude::*;

use super::Node2VecParams;
use crate::error::{Error, Result};
use crate::seed;

/// Trained skip-gram weights, row-major `n × dim`.
#[derive(Clone, Debug)]
pub struct SgnsModel {
    pub dim: usize,
    pub input: Vec<f64>,
    pub output: Vec<f64>,
}

impl SgnsModel {
    pub fn input_vector(&self, v: usize) -> &[f64] {
        &self.input[v * self.dim..(v + 1) * self.dim]
    }

    pub fn output_vector(&self, v: usize) -> &[f64] {
        &self.output[v * self.dim..(v + 1) * self.dim]
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log σ(x)` without overflow.
fn log_sigmoid(x: f64) -> f64 {
    -((-x).max(0.0) + (-x.abs()).exp().ln_1p())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Negative-sampling loss for one (center, context) pair:
/// `-log σ(u·v) - Σ_k log σ(-u·n_k)`.
pub fn sgns_loss(u: &[f64], v: &[f64], negs: &[&[f64]]) -> f64 {
    -log_sigmoid(dot(u, v)) - negs.iter().map(|n| log_sigmoid(-dot(u, n))).sum::<f64>()
}

/// Analytic gradient of [`sgns_loss`] with respect to `u`, `v` and each `n_k`.
pub fn sgns_grad(u: &[f64], v: &[f64], negs: &[&[f64]]) -> (Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
    let gp = sigmoid(dot(u, v)) - 1.0;
    let mut gu: Vec<f64> = v.iter().map(|x| gp * x).collect();
    let gv = u.iter().map(|x| gp * x).collect();
    let mut gn = Vec::with_capacity(negs.len());
    for n in negs {
        let s = sigmoid(dot(u, n));
        for (g, x) in gu.iter_mut().zip(n.iter()) {
            *g += s * x;
        }
        gn.push(u.iter().map(|x| s * x).collect());
    }
    (gu, gv, gn)
}

/// f64 weights stored as bits so that Hogwild updates need no locking.
struct Weights(Vec<AtomicU64>);

impl Weights {
    fn from_vec(v: Vec<f64>) -> Self {
        Weights(v.into_iter().map(|x| AtomicU64::new(x.to_bits())).collect())
    }

    fn get(&self, i: usize) -> f64 {
        f64::from_bits(self.0[i].load(Ordering::Relaxed))
    }

    fn add(&self, i: usize, delta: f64) {
        self.0[i].store((self.get(i) + delta).to_bits(), Ordering::Relaxed);
    }

    fn into_vec(self) -> Vec<f64> {
        self.0
            .into_iter()
            .map(|a| f64::from_bits(a.into_inner()))
            .collect()
    }
}

/// Cumulative unigram^0.75 distribution for drawing negatives.
struct NoiseTable {
    cumulative: Vec<f64>,
}

impl NoiseTable {
    fn new(walks: &[Vec<u32>], n: usize) -> Self {
        let mut counts = vec![0usize; n];
        for &v in walks.iter().flatten() {
            counts[v as usize] += 1;
        }
        let mut acc = 0.0;
        let cumulative = counts
            .iter()
            .map(|&c| {
                acc += (c as f64).powf(0.75);
                acc
            })
            .collect();
        NoiseTable { cumulative }
    }

    fn sample(&self, rng: &mut seed::Rng) -> usize {
        let total = *self.cumulative.last().expect("non-empty table");
        let r = rng.random::<f64>() * total;
        self.cumulative
            .partition_point(|&c| c <= r)
            .min(self.cumulative.len() - 1)
    }
}

struct Trainer<'a> {
    dim: usize,
    input: Weights,
    output: Weights,
    noise: NoiseTable,
    params: &'a Node2VecParams,
    processed: AtomicUsize,
    total: usize,
}

impl Trainer<'_> {
    /// One SGD step on the pair (center, context) plus sampled negatives.
    fn step(
        &self,
        center: usize,
        context: usize,
        negs: &[usize],
        lr: f64,
        u: &mut [f64],
        gu: &mut [f64],
    ) {
        let d = self.dim;
        for (j, x) in u.iter_mut().enumerate() {
            *x = self.input.get(center * d + j);
        }
        gu.fill(0.0);
        let targets = std::iter::once((context, 1.0)).chain(negs.iter().map(|&n| (n, 0.0)));
        for (t, label) in targets {
            let score: f64 = (0..d).map(|j| u[j] * self.output.get(t * d + j)).sum();
            let g = sigmoid(score) - label;
            for (j, (acc, &x)) in gu.iter_mut().zip(u.iter()).enumerate() {
                *acc += g * self.output.get(t * d + j);
                self.output.add(t * d + j, -lr * g * x);
            }
        }
        for (j, &g) in gu.iter().enumerate() {
            self.input.add(center * d + j, -lr * g);
        }
    }

    fn run_chunk(&self, walks: &[Vec<u32>], rng_seed: u64) {
        let p = self.params;
        let mut rng = seed::rng(rng_seed);
        let mut u = vec![0.0; self.dim];
        let mut gu = vec![0.0; self.dim];
        let mut negs = Vec::with_capacity(p.negatives);
        for walk in walks {
            let done = self.processed.fetch_add(walk.len(), Ordering::Relaxed);
            let lr = p.learning_rate * (1.0 - done as f64 / self.total as f64).max(1e-4);
            for (i, &c) in walk.iter().enumerate() {
                let lo = i.saturating_sub(p.window);
                let hi = (i + p.window + 1).min(walk.len());
                for (j, &o) in walk.iter().enumerate().take(hi).skip(lo) {
                    if j == i {
                        continue;
                    }
                    negs.clear();
                    while negs.len() < p.negatives {
                        let n = self.noise.sample(&mut rng);
                        if n != o as usize {
                            negs.push(n);
                        }
                    }
                    self.step(c as usize, o as usize, &negs, lr, &mut u, &mut gu);
                }
            }
        }
    }
}

const WALKS_PER_CHUNK: usize = 64;

/// Skip-gram with negative sampling over a walk corpus.
///
/// Input vectors start uniform in `±0.5/dim`, output vectors at zero. The
/// learning rate decays linearly with the number of processed tokens. With
/// `params.parallel` chunks of the corpus are trained concurrently without
/// locks; otherwise the same chunks run in order and the result is
/// reproducible bit for bit.
pub fn train_sgns(
    walks: &[Vec<u32>],
    n_nodes: usize,
    params: &Node2VecParams,
) -> Result<SgnsModel> {
    params.validate()?;
    if let Some(bad) = walks.iter().flatten().find(|&&v| v as usize >= n_nodes) {
        return Err(Error::Validation(format!(
            "walk visits node {bad} but only {n_nodes} nodes exist"
        )));
    }
    let dim = params.dim;
    let mut rng = seed::rng(seed::derive(params.seed, "sgns-init"));
    let bound = 0.5 / dim as f64;
    let input: Vec<f64> = (0..n_nodes * dim)
        .map(|_| rng.random_range(-bound..bound))
        .collect();
    let output = vec![0.0; n_nodes * dim];
    let tokens: usize = walks.iter().map(Vec::len).sum();
    if tokens == 0 || params.negatives > 0 && n_nodes < 2 {
        return Ok(SgnsModel { dim, input, output });
    }

    let trainer = Trainer {
        dim,
        input: Weights::from_vec(input),
        output: Weights::from_vec(output),
        noise: NoiseTable::new(walks, n_nodes),
        params,
        processed: AtomicUsize::new(0),
        total: tokens * params.epochs,
    };
    // fixed chunk size: chunk seeds must not depend on the worker count
    let chunk = WALKS_PER_CHUNK;
    for epoch in 0..params.epochs {
        let label = format!("sgns-neg/{epoch}");
        let run = |(k, part): (usize, &[Vec<u32>])| {
            trainer.run_chunk(part, seed::derive_indexed(params.seed, &label, k as u64))
        };
        if params.parallel {
            walks.par_chunks(chunk).enumerate().for_each(run);
        } else {
            walks.chunks(chunk).enumerate().for_each(run);
        }
    }
    Ok(SgnsModel {
        dim,
        input: trainer.input.into_vec(),
        output: trainer.output.into_vec(),
    })
}
