//! Negative-edge construction.
//!
//! [`sample_random`] draws non-edges uniformly. [`sample_rmsd_window`] picks
//! negatives by structural distance to the protein of each positive: proteins
//! within [`WindowConfig::discard_max`] of the anchor are ignored, those up to
//! [`WindowConfig::holdout_max`] become evaluation-only holdout negatives, and
//! training negatives come from `[holdout_max, train_max]`.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::Write;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DtiGraph, EdgePair};
use crate::metrics::{aggregate, MeanStd};
use crate::seed;
use crate::similarity::SimilarityMatrix;
use crate::split::LabeledPairs;

/// Upper bound for widening the training window when it holds no candidate.
pub const MAX_TRAIN_WINDOW: f64 = 20.0;

/// Below this many candidate pairs the random sampler enumerates non-edges.
const ENUMERATION_LIMIT: usize = 1 << 22;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindowConfig {
    pub discard_max: f64,
    pub holdout_max: f64,
    pub train_max: f64,
    /// Training negatives drawn per positive.
    pub ratio: usize,
    pub seed: u64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            discard_max: 2.5,
            holdout_max: 5.0,
            train_max: 6.0,
            ratio: 1,
            seed: 0,
        }
    }
}

impl WindowConfig {
    pub fn with_train_max(&self, t: f64) -> Self {
        WindowConfig {
            train_max: t,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ordered = 0.0 < self.discard_max
            && self.discard_max < self.holdout_max
            && self.holdout_max < self.train_max
            && self.train_max <= MAX_TRAIN_WINDOW;
        if !ordered {
            return Err(Error::Validation(format!(
                "window bounds must satisfy 0 < {} < {} < {} <= {MAX_TRAIN_WINDOW}",
                self.discard_max, self.holdout_max, self.train_max
            )));
        }
        if self.ratio == 0 {
            return Err(Error::Validation("ratio must be >= 1".into()));
        }
        Ok(())
    }
}

/// How a negative was obtained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    /// Uniform draw from all non-edges.
    Random,
    /// Chosen by structural distance to `anchor`, the protein of a positive.
    /// `window_max` exceeds the configured bound when the window was widened.
    Window { anchor: String, window_max: f64 },
    /// No structural candidate up to the widest window; drawn uniformly among
    /// the drug's non-edges.
    FallbackRandom { anchor: String },
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Random => write!(f, "random"),
            Provenance::Window { anchor, window_max } => {
                write!(f, "anchor={anchor};t={window_max}")
            }
            Provenance::FallbackRandom { anchor } => write!(f, "fallback-random;anchor={anchor}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Negative {
    pub pair: EdgePair,
    /// Distance between the anchor protein and the sampled protein.
    pub rmsd: Option<f64>,
    pub provenance: Provenance,
}

impl Negative {
    pub fn is_fallback(&self) -> bool {
        match &self.provenance {
            Provenance::FallbackRandom { .. } => true,
            Provenance::Window { .. } | Provenance::Random => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledDataset {
    pub positives: Vec<EdgePair>,
    pub train_negatives: Vec<Negative>,
    /// Plausible interactions set aside for evaluation only.
    pub holdout_negatives: Vec<Negative>,
}

impl SampledDataset {
    pub fn fallback_count(&self) -> usize {
        self.train_negatives
            .iter()
            .filter(|n| n.is_fallback())
            .count()
    }

    /// Positives followed by training negatives, with their labels.
    pub fn labeled_pairs(&self) -> LabeledPairs {
        let pairs = self
            .positives
            .iter()
            .cloned()
            .chain(self.train_negatives.iter().map(|n| n.pair.clone()))
            .collect();
        let labels = std::iter::repeat_n(true, self.positives.len())
            .chain(std::iter::repeat_n(false, self.train_negatives.len()))
            .collect();
        (pairs, labels)
    }

    /// TSV with columns `drug_id protein_id label window rmsd provenance`.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "drug_id\tprotein_id\tlabel\twindow\trmsd\tprovenance")?;
        for p in &self.positives {
            writeln!(w, "{}\t{}\t1\tpositive\tNA\tgraph", p.drug(), p.protein())?;
        }
        let rows = self
            .train_negatives
            .iter()
            .map(|n| ("train", n))
            .chain(self.holdout_negatives.iter().map(|n| ("holdout", n)));
        for (window, n) in rows {
            let rmsd = n.rmsd.map_or_else(|| "NA".to_string(), |v| v.to_string());
            writeln!(
                w,
                "{}\t{}\t0\t{window}\t{rmsd}\t{}",
                n.pair.drug(),
                n.pair.protein(),
                n.provenance
            )?;
        }
        w.flush()
    }
}

fn check_capacity(g: &DtiGraph, ratio: usize) -> Result<usize> {
    let available = g.n_drugs() * g.n_proteins() - g.n_edges();
    let requested = ratio * g.n_edges();
    if requested > available {
        return Err(Error::InsufficientNonEdges {
            available,
            requested,
        });
    }
    Ok(requested)
}

/// Uniform sampling of `ratio · |E|` distinct non-edges.
pub fn sample_random(g: &DtiGraph, ratio: usize, seed_value: u64) -> Result<SampledDataset> {
    if ratio == 0 {
        return Err(Error::Validation("ratio must be >= 1".into()));
    }
    let requested = check_capacity(g, ratio)?;
    let mut rng = seed::rng(seed::derive(seed_value, "random-negatives"));
    let (nd, np) = (g.n_drugs() as u32, g.n_proteins() as u32);
    let available = g.n_drugs() * g.n_proteins() - g.n_edges();

    let mut chosen: Vec<(u32, u32)> =
        if g.n_drugs() * g.n_proteins() <= ENUMERATION_LIMIT || requested * 2 > available {
            let non_edges: Vec<(u32, u32)> = (0..nd)
                .flat_map(|d| (0..np).map(move |p| (d, p)))
                .filter(|&(d, p)| !g.has_edge(d, p))
                .collect();
            non_edges
                .choose_multiple(&mut rng, requested)
                .copied()
                .collect()
        } else {
            let mut seen = HashSet::with_capacity(requested);
            let mut out = Vec::with_capacity(requested);
            while out.len() < requested {
                let (d, p) = (rng.random_range(0..nd), rng.random_range(0..np));
                if !g.has_edge(d, p) && seen.insert((d, p)) {
                    out.push((d, p));
                }
            }
            out
        };
    chosen.sort_unstable();
    let train_negatives = chosen
        .into_iter()
        .map(|(d, p)| Negative {
            pair: EdgePair::new(g.drug_id(d), g.protein_id(p)),
            rmsd: None,
            provenance: Provenance::Random,
        })
        .collect();
    Ok(SampledDataset {
        positives: g.edge_pairs(),
        train_negatives,
        holdout_negatives: Vec::new(),
    })
}

/// Map from graph protein index to RMSD matrix index.
fn matrix_positions(g: &DtiGraph, rmsd: &SimilarityMatrix) -> Result<Vec<usize>> {
    g.proteins()
        .iter()
        .map(|id| {
            rmsd.index_of(id).ok_or_else(|| Error::MissingNode {
                kind: "protein",
                id: id.clone(),
            })
        })
        .collect()
}

struct DrugSample {
    train: Vec<Negative>,
    holdout: Vec<Negative>,
}

/// Structure-aware negatives anchored on each positive's drug.
///
/// Per positive `(d, t*)`, every protein `t′` of the graph at distance
/// `r = RMSD(t*, t′)` is classified as discarded (`r < discard_max`), holdout
/// (`r < holdout_max`) or train candidate (`r ≤ train_max`). `ratio` training
/// negatives are drawn uniformly among the candidates that are neither a
/// positive of `d`, an earlier negative of `d`, nor a holdout pair of `d`.
/// An empty candidate set widens the window by 1 Å up to 20 Å, then falls
/// back to a uniform non-edge of `d`.
pub fn sample_rmsd_window(
    g: &DtiGraph,
    rmsd: &SimilarityMatrix,
    cfg: &WindowConfig,
) -> Result<SampledDataset> {
    cfg.validate()?;
    let pos = matrix_positions(g, rmsd)?;
    check_capacity(g, cfg.ratio)?;
    let np = g.n_proteins() as u32;
    let distance = |a: u32, b: u32| rmsd.get(pos[a as usize], pos[b as usize]);

    let per_drug: Vec<Result<DrugSample>> = (0..g.n_drugs() as u32)
        .into_par_iter()
        .map(|d| {
            let drug = g.drug_id(d);
            let anchors = g.drug_neighbors(d);
            // holdout pairs first, so training draws can avoid them
            let mut holdout: BTreeMap<u32, (f64, u32)> = BTreeMap::new();
            for &a in anchors {
                for t in 0..np {
                    let Some(r) = distance(a, t) else { continue };
                    if r >= cfg.discard_max && r < cfg.holdout_max && !g.has_edge(d, t) {
                        let entry = holdout.entry(t).or_insert((r, a));
                        if r < entry.0 {
                            *entry = (r, a);
                        }
                    }
                }
            }

            let mut rng = seed::rng(seed::derive(cfg.seed, &format!("window/{drug}")));
            let mut taken: HashSet<u32> = HashSet::new();
            let mut train = Vec::with_capacity(anchors.len() * cfg.ratio);
            let usable = |t: u32, taken: &HashSet<u32>, holdout: &BTreeMap<u32, (f64, u32)>| {
                !g.has_edge(d, t) && !taken.contains(&t) && !holdout.contains_key(&t)
            };
            for &a in anchors {
                for _ in 0..cfg.ratio {
                    let mut t_max = cfg.train_max;
                    let picked = loop {
                        let candidates: Vec<(u32, f64)> = (0..np)
                            .filter_map(|t| distance(a, t).map(|r| (t, r)))
                            .filter(|&(t, r)| {
                                r >= cfg.holdout_max && r <= t_max && usable(t, &taken, &holdout)
                            })
                            .collect();
                        if let Some(&(t, r)) = candidates.choose(&mut rng) {
                            break Some((t, r, t_max));
                        }
                        if t_max >= MAX_TRAIN_WINDOW {
                            break None;
                        }
                        t_max = (t_max + 1.0).min(MAX_TRAIN_WINDOW);
                    };
                    let anchor = g.protein_id(a).to_string();
                    let negative = match picked {
                        Some((t, r, window_max)) => {
                            taken.insert(t);
                            Negative {
                                pair: EdgePair::new(drug, g.protein_id(t)),
                                rmsd: Some(r),
                                provenance: Provenance::Window { anchor, window_max },
                            }
                        }
                        None => {
                            let mut free: Vec<u32> =
                                (0..np).filter(|&t| usable(t, &taken, &holdout)).collect();
                            if free.is_empty() {
                                // last resort: a held-out pair moves to training
                                free = holdout
                                    .keys()
                                    .copied()
                                    .filter(|t| !taken.contains(t))
                                    .collect();
                            }
                            let &t = free.choose(&mut rng).ok_or_else(|| {
                                Error::InsufficientNonEdges {
                                    available: np as usize - anchors.len(),
                                    requested: anchors.len() * cfg.ratio,
                                }
                            })?;
                            holdout.remove(&t);
                            taken.insert(t);
                            Negative {
                                pair: EdgePair::new(drug, g.protein_id(t)),
                                rmsd: distance(a, t),
                                provenance: Provenance::FallbackRandom { anchor },
                            }
                        }
                    };
                    train.push(negative);
                }
            }
            let holdout = holdout
                .into_iter()
                .map(|(t, (r, a))| Negative {
                    pair: EdgePair::new(drug, g.protein_id(t)),
                    rmsd: Some(r),
                    provenance: Provenance::Window {
                        anchor: g.protein_id(a).to_string(),
                        window_max: cfg.holdout_max,
                    },
                })
                .collect();
            Ok(DrugSample { train, holdout })
        })
        .collect();

    let mut train_negatives = Vec::new();
    let mut holdout_negatives = Vec::new();
    for sample in per_drug {
        let sample = sample?;
        train_negatives.extend(sample.train);
        holdout_negatives.extend(sample.holdout);
    }
    train_negatives.sort_by(|a, b| a.pair.cmp(&b.pair));
    holdout_negatives.sort_by(|a, b| a.pair.cmp(&b.pair));
    Ok(SampledDataset {
        positives: g.edge_pairs(),
        train_negatives,
        holdout_negatives,
    })
}

/// One row of a window sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    /// `None` for the random-subsampling baseline.
    pub train_max: Option<f64>,
    pub aurocs: Vec<f64>,
    pub summary: MeanStd,
    /// Fallback negatives summed over repeats.
    pub fallbacks: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Kendall's tau between window bound and mean AUROC over the window
    /// rows. Negative when AUROC tends to fall as the window widens.
    pub trend_tau: Option<f64>,
}

impl SweepTable {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "window,mean_auroc,std_auroc,runs,fallbacks")?;
        for row in &self.rows {
            let label = row
                .train_max
                .map_or_else(|| "random".to_string(), |t| t.to_string());
            writeln!(
                w,
                "{label},{:.6},{:.6},{},{}",
                row.summary.mean, row.summary.std, row.summary.n, row.fallbacks
            )?;
        }
        w.flush()
    }
}

/// Kendall's tau-b; `None` when either series is constant.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len().min(y.len());
    let (mut concordant, mut discordant, mut ties_x, mut ties_y) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = (x[i] - x[j]).partial_cmp(&0.0)? as i64;
            let dy = (y[i] - y[j]).partial_cmp(&0.0)? as i64;
            match (dx, dy) {
                (0, 0) => {}
                (0, _) => ties_x += 1,
                (_, 0) => ties_y += 1,
                _ if dx == dy => concordant += 1,
                _ => discordant += 1,
            }
        }
    }
    let denom =
        (((concordant + discordant + ties_x) * (concordant + discordant + ties_y)) as f64).sqrt();
    (denom > 0.0).then(|| (concordant - discordant) as f64 / denom)
}

/// Evaluate a model over RMSD windows `t_values` and a random baseline.
///
/// `runner(dataset, seed)` trains and scores one repeat and returns its
/// AUROC. Repeat `r` uses the same derived seed for every window, so rows
/// differ only in the negatives they were given.
pub fn window_sweep<F>(
    g: &DtiGraph,
    rmsd: &SimilarityMatrix,
    base: &WindowConfig,
    t_values: &[f64],
    repeats: usize,
    runner: F,
) -> Result<SweepTable>
where
    F: Fn(&SampledDataset, u64) -> Result<f64> + Sync,
{
    if repeats == 0 {
        return Err(Error::Validation("repeats must be >= 1".into()));
    }
    let seeds: Vec<u64> = (0..repeats as u64)
        .map(|r| seed::derive_indexed(base.seed, "sweep", r))
        .collect();
    let settings: Vec<Option<f64>> = t_values.iter().copied().map(Some).chain([None]).collect();
    let rows = settings
        .par_iter()
        .map(|&t| {
            let mut aurocs = Vec::with_capacity(repeats);
            let mut fallbacks = 0;
            for &s in &seeds {
                let data = match t {
                    Some(t) => sample_rmsd_window(
                        g,
                        rmsd,
                        &WindowConfig {
                            seed: s,
                            ..base.with_train_max(t)
                        },
                    )?,
                    None => sample_random(g, base.ratio, s)?,
                };
                fallbacks += data.fallback_count();
                aurocs.push(runner(&data, s)?);
            }
            Ok(SweepRow {
                train_max: t,
                summary: aggregate(&aurocs)?,
                aurocs,
                fallbacks,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let window_rows: Vec<&SweepRow> = rows.iter().filter(|r| r.train_max.is_some()).collect();
    let ts: Vec<f64> = window_rows.iter().filter_map(|r| r.train_max).collect();
    let means: Vec<f64> = window_rows.iter().map(|r| r.summary.mean).collect();
    Ok(SweepTable {
        trend_tau: kendall_tau(&ts, &means),
        rows,
    })
}

/// Anything that maps drug–protein pairs to interaction probabilities.
pub trait PairModel {
    fn predict(&self, pairs: &[EdgePair]) -> Result<Vec<f64>>;
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HoldoutScore {
    pub pair: EdgePair,
    pub probabilities: Vec<f64>,
    pub summary: MeanStd,
}

/// Score holdout pairs with several independently trained models. Rows are
/// sorted by mean probability, highest first.
pub fn score_holdout<M: PairModel + ?Sized>(
    models: &[&M],
    pairs: &[EdgePair],
) -> Result<Vec<HoldoutScore>> {
    if models.is_empty() {
        return Err(Error::Validation("need at least one model run".into()));
    }
    let runs: Vec<Vec<f64>> = models
        .iter()
        .map(|m| m.predict(pairs))
        .collect::<Result<_>>()?;
    if let Some(bad) = runs.iter().find(|r| r.len() != pairs.len()) {
        return Err(Error::ShapeMismatch(format!(
            "{} predictions for {} pairs",
            bad.len(),
            pairs.len()
        )));
    }
    let mut rows = pairs
        .iter()
        .enumerate()
        .map(|(k, pair)| {
            let probabilities: Vec<f64> = runs.iter().map(|r| r[k]).collect();
            Ok(HoldoutScore {
                pair: pair.clone(),
                summary: aggregate(&probabilities)?,
                probabilities,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| {
        b.summary
            .mean
            .total_cmp(&a.summary.mean)
            .then_with(|| a.pair.cmp(&b.pair))
    });
    Ok(rows)
}

/// TSV with one probability column per run.
pub fn write_holdout_scores<W: Write>(rows: &[HoldoutScore], mut w: W) -> std::io::Result<()> {
    let runs = rows.first().map_or(0, |r| r.probabilities.len());
    write!(w, "drug_id\tprotein_id")?;
    for i in 0..runs {
        write!(w, "\trun{}", i + 1)?;
    }
    writeln!(w, "\tmean\tstd")?;
    for row in rows {
        write!(w, "{}\t{}", row.pair.drug(), row.pair.protein())?;
        for p in &row.probabilities {
            write!(w, "\t{p}")?;
        }
        writeln!(w, "\t{}\t{}", row.summary.mean, row.summary.std)?;
    }
    w.flush()
}

/// Shuffle-based reference used by tests: enumerate all non-edges, shuffle,
/// keep the first `count`.
#[doc(hidden)]
pub fn reference_random_non_edges(
    g: &DtiGraph,
    count: usize,
    rng: &mut seed::Rng,
) -> Vec<EdgePair> {
    let mut all: Vec<EdgePair> = (0..g.n_drugs() as u32)
        .flat_map(|d| (0..g.n_proteins() as u32).map(move |p| (d, p)))
        .filter(|&(d, p)| !g.has_edge(d, p))
        .map(|(d, p)| EdgePair::new(g.drug_id(d), g.protein_id(p)))
        .collect();
    all.shuffle(rng);
    all.truncate(count);
    all
}
