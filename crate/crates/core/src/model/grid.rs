use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::{parameter_count, train, LossKind, SnnParams, ARCHITECTURE_WIDTHS};
use crate::embed::{pair_features, EmbeddingTable, DIM_LATTICE};
use crate::error::{Error, Result};
use crate::metrics::{aggregate, auroc, MeanStd};
use crate::seed;
use crate::split::LabeledFold;

/// Value lists whose full factorial product is searched.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridLattice {
    pub dims: Vec<usize>,
    pub hidden: Vec<usize>,
    pub epochs: Vec<usize>,
    pub losses: Vec<LossKind>,
    pub batch_denominators: Vec<usize>,
}

impl GridLattice {
    /// 6 dimensions × 4 architectures × 4 epoch counts × 2 losses × 2 batch sizes.
    pub fn full() -> Self {
        GridLattice {
            dims: DIM_LATTICE.to_vec(),
            hidden: ARCHITECTURE_WIDTHS.to_vec(),
            epochs: vec![2, 5, 10, 50],
            losses: vec![LossKind::Bce, LossKind::FOCAL_DEFAULT],
            batch_denominators: vec![16, 64],
        }
    }

    pub fn len(&self) -> usize {
        self.dims.len()
            * self.hidden.len()
            * self.epochs.len()
            * self.losses.len()
            * self.batch_denominators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every configuration in canonical order, dimension varying slowest.
    pub fn configs(&self) -> Vec<GridConfig> {
        let mut out = Vec::with_capacity(self.len());
        for &dim in &self.dims {
            for &hidden in &self.hidden {
                for &epochs in &self.epochs {
                    for &loss in &self.losses {
                        for &batch_denominator in &self.batch_denominators {
                            out.push(GridConfig {
                                id: out.len(),
                                dim,
                                hidden,
                                epochs,
                                loss,
                                batch_denominator,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridConfig {
    /// Position in canonical order.
    pub id: usize,
    pub dim: usize,
    pub hidden: usize,
    pub epochs: usize,
    pub loss: LossKind,
    pub batch_denominator: usize,
}

impl GridConfig {
    /// `type1`…`type4` for the standard widths, `custom` otherwise.
    pub fn architecture(&self) -> String {
        match ARCHITECTURE_WIDTHS.iter().position(|&w| w == self.hidden) {
            Some(i) => format!("type{}", i + 1),
            None => "custom".to_string(),
        }
    }

    pub fn n_parameters(&self) -> usize {
        parameter_count(2 * self.dim, self.hidden)
    }
}

/// Labeled pairs for the train, validation and test roles.
pub type GridInput = LabeledFold;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridRow {
    pub config: GridConfig,
    pub val_auroc: MeanStd,
    pub test_auroc: MeanStd,
}

/// Rows ranked by validation AUROC, best first.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridReport {
    pub rows: Vec<GridRow>,
}

impl GridReport {
    pub fn best(&self) -> Option<&GridRow> {
        self.rows.first()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "# architecture typeN is one hidden layer of width 32/64/128/256 for N = 1..4"
        )?;
        writeln!(
            w,
            "rank,config_id,dim,architecture,hidden,epochs,loss,batch_denominator,parameters,\
             val_auroc_mean,val_auroc_std,test_auroc_mean,test_auroc_std"
        )?;
        for (rank, row) in self.rows.iter().enumerate() {
            let c = &row.config;
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{:.6},{:.6},{:.6},{:.6}",
                rank + 1,
                c.id,
                c.dim,
                c.architecture(),
                c.hidden,
                c.epochs,
                c.loss.name(),
                c.batch_denominator,
                c.n_parameters(),
                row.val_auroc.mean,
                row.val_auroc.std,
                row.test_auroc.mean,
                row.test_auroc.std,
            )?;
        }
        w.flush()
    }
}

struct Features {
    train: DMatrix<f64>,
    val: DMatrix<f64>,
    test: DMatrix<f64>,
}

fn scores(model: &super::SnnModel, x: &DMatrix<f64>) -> Result<Vec<f64>> {
    Ok(model.logits(x)?.iter().copied().collect())
}

/// Full-factorial search. `embed(dim)` supplies node vectors for each
/// embedding dimension; every configuration is trained `repeats` times with
/// derived seeds, scored on validation and test, and ranked by mean
/// validation AUROC with ties going to the smaller model.
pub fn grid_search<F>(
    input: &GridInput,
    lattice: &GridLattice,
    base: &SnnParams,
    repeats: usize,
    seed_value: u64,
    embed: F,
) -> Result<GridReport>
where
    F: Fn(usize) -> Result<EmbeddingTable> + Sync,
{
    if repeats == 0 {
        return Err(Error::Validation("repeats must be >= 1".into()));
    }
    for (role, set) in [
        ("train", &input.train),
        ("validation", &input.val),
        ("test", &input.test),
    ] {
        if set.0.is_empty() {
            return Err(Error::NotEnoughEdges(format!("{role} set is empty")));
        }
    }
    let features: BTreeMap<usize, Features> = lattice
        .dims
        .par_iter()
        .map(|&dim| {
            let emb = embed(dim)?;
            if emb.dim() != dim {
                return Err(Error::ShapeMismatch(format!(
                    "asked for dimension {dim}, got {}",
                    emb.dim()
                )));
            }
            let f = Features {
                train: pair_features(&emb, &input.train.0)?,
                val: pair_features(&emb, &input.val.0)?,
                test: pair_features(&emb, &input.test.0)?,
            };
            Ok((dim, f))
        })
        .collect::<Result<_>>()?;

    let mut rows = lattice
        .configs()
        .into_par_iter()
        .map(|config| {
            let f = &features[&config.dim];
            let config_seed = seed::derive_indexed(seed_value, "grid", config.id as u64);
            let mut val = Vec::with_capacity(repeats);
            let mut test = Vec::with_capacity(repeats);
            for r in 0..repeats {
                let params = SnnParams {
                    hidden: config.hidden,
                    loss: config.loss,
                    epochs: config.epochs,
                    batch_denominator: config.batch_denominator,
                    seed: seed::derive_indexed(config_seed, "repeat", r as u64),
                    ..base.clone()
                };
                let (model, _) = train(&f.train, &input.train.1, &params, None)?;
                val.push(auroc(&scores(&model, &f.val)?, &input.val.1)?);
                test.push(auroc(&scores(&model, &f.test)?, &input.test.1)?);
            }
            Ok(GridRow {
                config,
                val_auroc: aggregate(&val)?,
                test_auroc: aggregate(&test)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| {
        b.val_auroc
            .mean
            .total_cmp(&a.val_auroc.mean)
            .then(a.config.n_parameters().cmp(&b.config.n_parameters()))
            .then(a.config.id.cmp(&b.config.id))
    });
    Ok(GridReport { rows })
}
