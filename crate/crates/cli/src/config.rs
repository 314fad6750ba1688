//! Run configuration: a JSON document whose keys command-line flags may
//! override. Validation reports every problem at once.

use std::fs;
use std::path::{Path, PathBuf};

use fairdti::embed::Node2VecParams;
use fairdti::leakage::LeakageConfig;
use fairdti::model::{GridLattice, SnnParams};
use fairdti::negatives::WindowConfig;
use fairdti::split::{Ratios, SplitMode};
use fairdti::structure::{QualityThresholds, RmsdParams};
use fairdti::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Edge lists, one graph each.
    pub edges: Vec<PathBuf>,
    /// Affinity tables (`drug protein kd`), binarized at `kd_threshold`.
    pub affinities: Vec<PathBuf>,
    pub kd_threshold: Option<f64>,
    /// Read edge lists as `protein drug`.
    pub swap_columns: bool,
    pub fingerprints: Option<PathBuf>,
    pub structures: Option<PathBuf>,
    /// Precomputed RMSD matrix; takes precedence over `structures`.
    pub rmsd_matrix: Option<PathBuf>,
    pub chain: Option<char>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub mode: SplitMode,
    pub ratios: Ratios,
    /// k-fold cross-validation when set, otherwise a single holdout split.
    pub k: Option<usize>,
    pub repeats: usize,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            mode: SplitMode::Sp,
            ratios: Ratios::BASELINE,
            k: None,
            repeats: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerMode {
    #[default]
    Random,
    Rmsd,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub mode: SamplerMode,
    pub window: WindowConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfigFile {
    pub dims: Vec<usize>,
    pub hidden: Vec<usize>,
    pub epochs: Vec<usize>,
    pub batch_denominators: Vec<usize>,
    pub repeats: usize,
}

impl Default for GridConfigFile {
    fn default() -> Self {
        let full = GridLattice::full();
        GridConfigFile {
            dims: full.dims,
            hidden: full.hidden,
            epochs: full.epochs,
            batch_denominators: full.batch_denominators,
            repeats: 1,
        }
    }
}

impl GridConfigFile {
    pub fn lattice(&self) -> GridLattice {
        GridLattice {
            dims: self.dims.clone(),
            hidden: self.hidden.clone(),
            epochs: self.epochs.clone(),
            batch_denominators: self.batch_denominators.clone(),
            ..GridLattice::full()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub t_min: u32,
    pub t_max: u32,
    pub repeats: usize,
    /// Models trained to score the holdout negatives at the base window.
    pub holdout_runs: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            t_min: 6,
            t_max: 20,
            repeats: 5,
            holdout_runs: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataConfig,
    pub split: SplitConfig,
    pub sampler: SamplerConfig,
    pub node2vec: Node2VecParams,
    pub snn: SnnParams,
    pub grid: GridConfigFile,
    pub rmsd: RmsdParams,
    pub quality: Option<QualityThresholds>,
    /// Bin width of similarity histograms.
    pub histogram_bin_width: f64,
    /// Bin width of RMSD histograms, in Å.
    pub rmsd_bin_width: f64,
    pub leakage_test_fraction: f64,
    pub sweep: SweepConfig,
    /// Root of every random stream. Required by commands that draw randomness.
    pub seed: Option<u64>,
    pub output: PathBuf,
    /// Worker threads; all cores when unset.
    pub jobs: Option<usize>,
    /// Bit-reproducible mode: forces single-threaded embedding training.
    pub deterministic: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: DataConfig::default(),
            split: SplitConfig::default(),
            sampler: SamplerConfig::default(),
            node2vec: Node2VecParams::default(),
            snn: SnnParams::default(),
            grid: GridConfigFile::default(),
            rmsd: RmsdParams::default(),
            quality: None,
            histogram_bin_width: 0.05,
            rmsd_bin_width: 0.5,
            leakage_test_fraction: 0.3,
            sweep: SweepConfig::default(),
            seed: None,
            output: PathBuf::from("out"),
            jobs: None,
            deterministic: true,
        }
    }
}

/// What a command needs from the configuration.
#[derive(Clone, Copy, Debug, Default)]
pub struct Needs {
    pub seed: bool,
    pub edges: usize,
    pub fingerprints: bool,
    pub structures: bool,
    pub rmsd: bool,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Config(vec![format!("{}: {e}", path.display())]))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Seed for randomized commands; validation guarantees it is set.
    pub fn seed(&self) -> u64 {
        self.seed.expect("validated config has a seed")
    }

    pub fn leakage(&self) -> LeakageConfig {
        LeakageConfig {
            node2vec: self.embedding_params(),
            snn: self.snn.clone(),
            test_fraction: self.leakage_test_fraction,
            seed: self.seed(),
        }
    }

    pub fn embedding_params(&self) -> Node2VecParams {
        Node2VecParams {
            parallel: self.node2vec.parallel && !self.deterministic,
            ..self.node2vec.clone()
        }
    }

    /// Collect every problem instead of stopping at the first.
    pub fn validate(&self, needs: Needs) -> Result<()> {
        let mut problems = Vec::new();
        let mut check = |r: Result<()>| match r {
            Ok(()) => {}
            Err(Error::Config(p)) => problems.extend(p),
            Err(e) => problems.push(e.to_string()),
        };
        if needs.seed && self.seed.is_none() {
            check(Err(Error::Validation(
                "a seed is required (--seed or \"seed\" in the config)".into(),
            )));
        }
        let graphs = self.data.edges.len() + self.data.affinities.len();
        if graphs < needs.edges {
            check(Err(Error::Validation(format!(
                "need at least {} edge list(s), {} given",
                needs.edges, graphs
            ))));
        }
        for path in self.data.edges.iter().chain(&self.data.affinities) {
            if !path.is_file() {
                check(Err(Error::Validation(format!(
                    "edge file {} does not exist",
                    path.display()
                ))));
            }
        }
        let mut need_path = |wanted: bool, p: &Option<PathBuf>, what: &str, dir: bool| match p {
            Some(p) if dir && !p.is_dir() => check(Err(Error::Validation(format!(
                "{what} directory {} does not exist",
                p.display()
            )))),
            Some(p) if !dir && !p.is_file() => check(Err(Error::Validation(format!(
                "{what} file {} does not exist",
                p.display()
            )))),
            None if wanted => check(Err(Error::Validation(format!("{what} input is required")))),
            _ => {}
        };
        need_path(
            needs.fingerprints,
            &self.data.fingerprints,
            "fingerprint",
            false,
        );
        need_path(needs.structures, &self.data.structures, "structure", true);
        need_path(false, &self.data.rmsd_matrix, "RMSD matrix", false);
        if needs.rmsd && self.data.rmsd_matrix.is_none() && self.data.structures.is_none() {
            check(Err(Error::Validation(
                "an RMSD matrix or a structure directory is required".into(),
            )));
        }
        check(self.split.ratios.validate());
        if self.split.k.is_some_and(|k| k < 2) {
            check(Err(Error::Validation("k must be at least 2".into())));
        }
        if self.split.repeats == 0 {
            check(Err(Error::Validation("split repeats must be >= 1".into())));
        }
        check(self.sampler.window.validate());
        check(self.node2vec.validate());
        check(self.snn.validate());
        if self.grid.repeats == 0 || self.grid.lattice().is_empty() {
            check(Err(Error::Validation(
                "grid lattice and repeats must be non-empty".into(),
            )));
        }
        if !(self.histogram_bin_width > 0.0) || !(self.rmsd_bin_width > 0.0) {
            check(Err(Error::Validation(
                "histogram bin width must be > 0".into(),
            )));
        }
        if !(0.0 < self.leakage_test_fraction && self.leakage_test_fraction < 1.0) {
            check(Err(Error::Validation(
                "leakage test fraction must lie in (0, 1)".into(),
            )));
        }
        let s = &self.sweep;
        if s.t_min < 6 || s.t_max > 20 || s.t_min > s.t_max || s.repeats == 0 {
            check(Err(Error::Validation(format!(
                "sweep needs 6 <= t_min <= t_max <= 20 and repeats >= 1, got {}..{} x{}",
                s.t_min, s.t_max, s.repeats
            ))));
        }
        if self.jobs == Some(0) {
            check(Err(Error::Validation("jobs must be >= 1".into())));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }
}
