use std::fs;
use std::io::Write;
use std::path::Path;

use log::{debug, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{align_residues, kabsch_superpose, AlignParams, ProteinStructure, Superposition};
use crate::error::{Error, Result};
use crate::similarity::{MatrixKind, SimilarityMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RmsdParams {
    /// Outlier-rejection cycles.
    pub cycles: usize,
    /// Pairs deviating more than this (Å) after a fit are dropped.
    pub cutoff: f64,
    pub align: AlignParams,
}

impl Default for RmsdParams {
    fn default() -> Self {
        RmsdParams {
            cycles: 5,
            cutoff: 2.0,
            align: AlignParams::default(),
        }
    }
}

impl RmsdParams {
    fn cache_tag(&self) -> String {
        format!(
            "# rmsd cycles={} cutoff={} gap_open={} gap_extend={}",
            self.cycles, self.cutoff, self.align.gap_open, self.align.gap_extend
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefinedRmsd {
    pub rmsd: f64,
    pub aligned_pairs: usize,
    pub used_pairs: usize,
    pub cycles_run: usize,
}

/// C-alpha RMSD after sequence-based correspondence and iterative outlier
/// rejection.
///
/// Each cycle fits the current pair set and drops pairs deviating more than
/// `cutoff`; iteration stops after `cycles` cycles, when nothing is dropped,
/// or when fewer than three pairs would remain (the previous set is kept).
/// The arguments are processed in a canonical order, so the result does not
/// depend on which structure is passed first.
pub fn rmsd_refined(
    a: &ProteinStructure,
    b: &ProteinStructure,
    params: RmsdParams,
) -> Result<RefinedRmsd> {
    let (a, b) = if (a.sequence(), &a.id) <= (b.sequence(), &b.id) {
        (a, b)
    } else {
        (b, a)
    };
    let mapping = align_residues(a, b, params.align)?;
    let (ca, cb) = (a.coords(), b.coords());
    let mut moving: Vec<_> = mapping.0.iter().map(|&(i, _)| ca[i]).collect();
    let mut target: Vec<_> = mapping.0.iter().map(|&(_, j)| cb[j]).collect();

    let mut fit: Superposition = kabsch_superpose(&moving, &target)?;
    let mut cycles_run = 0;
    while cycles_run < params.cycles {
        cycles_run += 1;
        let dev = fit.deviations(&moving, &target);
        let keep: Vec<usize> = (0..dev.len())
            .filter(|&k| dev[k] <= params.cutoff)
            .collect();
        if keep.len() == dev.len() || keep.len() < 3 {
            break;
        }
        moving = keep.iter().map(|&k| moving[k]).collect();
        target = keep.iter().map(|&k| target[k]).collect();
        fit = kabsch_superpose(&moving, &target)?;
    }
    if fit.degenerate {
        debug!("{} vs {}: degenerate geometry", a.id, b.id);
    }
    Ok(RefinedRmsd {
        rmsd: fit.rmsd,
        aligned_pairs: mapping.len(),
        used_pairs: moving.len(),
        cycles_run,
    })
}

/// All-pairs RMSD over structures ordered by id. Pairs that cannot be
/// compared (too little overlap) are left as `NA`.
pub fn pairwise_rmsd(structures: &[ProteinStructure], params: RmsdParams) -> SimilarityMatrix {
    let mut sorted: Vec<&ProteinStructure> = structures.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    let n = sorted.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let values: Vec<Option<f64>> = pairs
        .par_iter()
        .map(|&(i, j)| match rmsd_refined(sorted[i], sorted[j], params) {
            Ok(r) => Some(r.rmsd),
            Err(e) => {
                warn!("{} vs {}: {}", sorted[i].id, sorted[j].id, e);
                None
            }
        })
        .collect();
    let mut m = SimilarityMatrix::new(
        MatrixKind::Rmsd,
        sorted.iter().map(|s| s.id.clone()).collect(),
    );
    for (&(i, j), v) in pairs.iter().zip(values) {
        m.set(i, j, v);
    }
    m
}

/// [`pairwise_rmsd`] backed by a TSV cache at `cache`.
///
/// The cache is reused when it was produced with the same parameters for the
/// same set of ids; otherwise it is recomputed and overwritten.
pub fn pairwise_rmsd_cached(
    structures: &[ProteinStructure],
    params: RmsdParams,
    cache: &Path,
) -> Result<SimilarityMatrix> {
    let mut ids: Vec<&str> = structures.iter().map(|s| s.id.as_str()).collect();
    ids.sort_unstable();
    if let Ok(text) = fs::read_to_string(cache) {
        if text.lines().next() == Some(params.cache_tag().as_str()) {
            let m = SimilarityMatrix::read_tsv(text.as_bytes(), MatrixKind::Rmsd, cache)?;
            if m.ids().iter().map(String::as_str).eq(ids.iter().copied()) {
                debug!("rmsd cache hit: {}", cache.display());
                return Ok(m);
            }
        }
    }
    let m = pairwise_rmsd(structures, params);
    let mut buf = Vec::new();
    writeln!(buf, "{}", params.cache_tag()).expect("write to Vec");
    m.write_tsv(&mut buf).expect("write to Vec");
    fs::write(cache, buf).map_err(|e| Error::io(format!("writing {}", cache.display()), e))?;
    Ok(m)
}
