//! Least-squares rigid superposition.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 3];

/// Rigid transform mapping the moving set onto the target: `x ↦ R·x + t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Superposition {
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
    pub rmsd: f64,
    /// The cross-covariance has rank < 2 (collinear or coincident points);
    /// the rotation is then not unique, though the RMSD still is.
    pub degenerate: bool,
}

impl Superposition {
    pub fn apply(&self, x: Point) -> Point {
        let r = &self.rotation;
        let t = &self.translation;
        [
            r[0][0] * x[0] + r[0][1] * x[1] + r[0][2] * x[2] + t[0],
            r[1][0] * x[0] + r[1][1] * x[1] + r[1][2] * x[2] + t[1],
            r[2][0] * x[0] + r[2][1] * x[1] + r[2][2] * x[2] + t[2],
        ]
    }

    /// Per-pair distance after applying the transform to `moving`.
    pub fn deviations(&self, moving: &[Point], target: &[Point]) -> Vec<f64> {
        moving
            .iter()
            .zip(target)
            .map(|(&p, q)| {
                let x = self.apply(p);
                ((x[0] - q[0]).powi(2) + (x[1] - q[1]).powi(2) + (x[2] - q[2]).powi(2)).sqrt()
            })
            .collect()
    }
}

fn centroid(xs: &[Point]) -> Vector3<f64> {
    let sum = xs
        .iter()
        .fold(Vector3::zeros(), |acc, x| acc + Vector3::from(*x));
    sum / xs.len() as f64
}

/// Optimal proper rotation and translation superposing `moving` onto `target`
/// (Kabsch). Reflections are excluded by flipping the axis of the smallest
/// singular value when the unconstrained optimum is improper.
pub fn kabsch_superpose(moving: &[Point], target: &[Point]) -> Result<Superposition> {
    if moving.len() != target.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} vs {} points",
            moving.len(),
            target.len()
        )));
    }
    if moving.len() < 3 {
        return Err(Error::Validation(format!(
            "superposition needs at least 3 points, got {}",
            moving.len()
        )));
    }
    if moving
        .iter()
        .chain(target)
        .flatten()
        .any(|v| !v.is_finite())
    {
        return Err(Error::Validation("non-finite coordinate".into()));
    }
    let (pc, qc) = (centroid(moving), centroid(target));
    let mut h = Matrix3::zeros();
    for (p, q) in moving.iter().zip(target) {
        h += (Vector3::from(*p) - pc) * (Vector3::from(*q) - qc).transpose();
    }
    let svd = h.svd(true, true);
    let (u, v_t) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
    let s = svd.singular_values;
    let v = v_t.transpose();
    let mut flip = Matrix3::identity();
    if (v * u.transpose()).determinant() < 0.0 {
        let smallest = (0..3).min_by(|&a, &b| s[a].total_cmp(&s[b])).unwrap_or(2);
        flip[(smallest, smallest)] = -1.0;
    }
    let r = v * flip * u.transpose();
    let t = qc - r * pc;

    let mut sorted = [s[0], s[1], s[2]];
    sorted.sort_by(|a, b| b.total_cmp(a));
    let degenerate = sorted[0] <= f64::EPSILON || sorted[1] <= 1e-10 * sorted[0];

    let mut sup = Superposition {
        rotation: [
            [r[(0, 0)], r[(0, 1)], r[(0, 2)]],
            [r[(1, 0)], r[(1, 1)], r[(1, 2)]],
            [r[(2, 0)], r[(2, 1)], r[(2, 2)]],
        ],
        translation: [t[0], t[1], t[2]],
        rmsd: 0.0,
        degenerate,
    };
    let sq: f64 = sup.deviations(moving, target).iter().map(|d| d * d).sum();
    sup.rmsd = (sq / moving.len() as f64).sqrt();
    Ok(sup)
}
