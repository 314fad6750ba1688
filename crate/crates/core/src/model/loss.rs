//! Classification losses computed from logits. Each returns the batch mean;
//! the matching `*_grad` returns `dL/dz` per sample, already divided by `K`.

use serde::{Deserialize, Serialize};

use super::sigmoid;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LossKind {
    Bce,
    /// `-α_t (1 - p_t)^γ log p_t`. `alpha = None` disables class weighting.
    Focal {
        gamma: f64,
        alpha: Option<f64>,
    },
}

impl LossKind {
    pub const FOCAL_DEFAULT: LossKind = LossKind::Focal {
        gamma: 2.0,
        alpha: Some(0.25),
    };

    pub fn name(&self) -> &'static str {
        match self {
            LossKind::Bce => "bce",
            LossKind::Focal { .. } => "focal",
        }
    }
}

/// `-log σ(x)` evaluated without overflow.
fn softplus_neg(x: f64) -> f64 {
    (-x).max(0.0) + (-x.abs()).exp().ln_1p()
}

fn label(y: bool) -> f64 {
    if y {
        1.0
    } else {
        0.0
    }
}

/// Weighted binary cross-entropy, `mean_k w_k [max(z,0) - z y + log(1 + e^{-|z|})]`.
pub fn bce_loss(logits: &[f64], labels: &[bool], weights: &[f64]) -> f64 {
    let k = logits.len() as f64;
    logits
        .iter()
        .zip(labels)
        .zip(weights)
        .map(|((&z, &y), &w)| w * (z.max(0.0) - z * label(y) + (-z.abs()).exp().ln_1p()))
        .sum::<f64>()
        / k
}

pub fn bce_grad(logits: &[f64], labels: &[bool], weights: &[f64]) -> Vec<f64> {
    let k = logits.len() as f64;
    logits
        .iter()
        .zip(labels)
        .zip(weights)
        .map(|((&z, &y), &w)| w * (sigmoid(z) - label(y)) / k)
        .collect()
}

fn alpha_t(alpha: Option<f64>, y: bool) -> f64 {
    match (alpha, y) {
        (None, _) => 1.0,
        (Some(a), true) => a,
        (Some(a), false) => 1.0 - a,
    }
}

pub fn focal_loss(logits: &[f64], labels: &[bool], gamma: f64, alpha: Option<f64>) -> f64 {
    let k = logits.len() as f64;
    logits
        .iter()
        .zip(labels)
        .map(|(&z, &y)| {
            // p_t = σ(±z); 1 - p_t = σ(∓z)
            let signed = if y { z } else { -z };
            alpha_t(alpha, y) * sigmoid(-signed).powf(gamma) * softplus_neg(signed)
        })
        .sum::<f64>()
        / k
}

pub fn focal_grad(logits: &[f64], labels: &[bool], gamma: f64, alpha: Option<f64>) -> Vec<f64> {
    let k = logits.len() as f64;
    logits
        .iter()
        .zip(labels)
        .map(|(&z, &y)| {
            let (s, q) = (sigmoid(z), sigmoid(-z));
            let a = alpha_t(alpha, y);
            let g = if y {
                // log s = -softplus(-z)
                a * q.powf(gamma) * (-gamma * s * softplus_neg(z) - q)
            } else {
                a * s.powf(gamma) * (s + gamma * q * softplus_neg(-z))
            };
            g / k
        })
        .collect()
}
