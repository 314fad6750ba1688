//! Argument parsing and dispatch.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fairdti::split::SplitMode;
use fairdti::{Error, Result};
use serde_json::json;

use crate::artifacts::{unix_now, Artifacts, RunRecord};
use crate::commands;
use crate::config::{Needs, RunConfig, SamplerMode};

#[derive(Debug, Parser)]
#[command(
    name = "fairdti",
    version,
    about = "Leakage-aware drug-target interaction benchmarking"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON run configuration; flags override its keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Edge-list file; repeat for several graphs.
    #[arg(long, global = true)]
    pub edges: Vec<PathBuf>,
    /// Affinity table to binarize; repeat for several graphs.
    #[arg(long, global = true)]
    pub affinities: Vec<PathBuf>,
    /// Affinity threshold below which a pair counts as an interaction.
    #[arg(long, global = true)]
    pub kd_threshold: Option<f64>,
    /// Edge lists list the protein first.
    #[arg(long, global = true)]
    pub swap_columns: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    Sp,
    Sd,
    St,
}

impl From<ModeArg> for SplitMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Sp => SplitMode::Sp,
            ModeArg::Sd => SplitMode::Sd,
            ModeArg::St => SplitMode::St,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SamplerArg {
    Random,
    Rmsd,
}

#[derive(Debug, Default, Args)]
pub struct SplitArgs {
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Number of folds; a single train/val/test split when absent.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub repeats: Option<usize>,
}

#[derive(Debug, Default, Args)]
pub struct StructureArgs {
    /// Directory of PDB files.
    #[arg(long)]
    pub structures: Option<PathBuf>,
    /// Precomputed RMSD matrix (TSV).
    #[arg(long)]
    pub rmsd_matrix: Option<PathBuf>,
    #[arg(long)]
    pub chain: Option<char>,
}

#[derive(Debug, Default, Args)]
pub struct SamplerArgs {
    #[arg(long, value_enum)]
    pub sampler: Option<SamplerArg>,
    /// Upper bound of the training window, in Angstrom.
    #[arg(long)]
    pub train_max: Option<f64>,
    /// Negatives per positive.
    #[arg(long)]
    pub ratio: Option<usize>,
}

#[derive(Debug, Default, Args)]
pub struct ModelArgs {
    /// Embedding dimension.
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Summary statistics for each input graph.
    Stats,
    /// Write constrained fold plans.
    Split {
        #[command(flatten)]
        split: SplitArgs,
    },
    /// Check a plan file against the first input graph.
    VerifyPlan { plan: PathBuf },
    /// Sample negative pairs.
    Sample {
        #[command(flatten)]
        sampler: SamplerArgs,
        #[command(flatten)]
        structures: StructureArgs,
    },
    /// All-pairs protein RMSD and its histogram.
    Rmsd {
        #[command(flatten)]
        structures: StructureArgs,
    },
    /// All-pairs drug Tanimoto similarity and its histogram.
    Tanimoto {
        #[arg(long)]
        fingerprints: Option<PathBuf>,
    },
    /// node2vec embedding of the first input graph.
    Embed {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Train and evaluate the baseline classifier on one split.
    Train {
        #[command(flatten)]
        split: SplitArgs,
        #[command(flatten)]
        sampler: SamplerArgs,
        #[command(flatten)]
        structures: StructureArgs,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Grid search over embedding and classifier settings.
    Gridsearch {
        #[command(flatten)]
        split: SplitArgs,
        #[command(flatten)]
        sampler: SamplerArgs,
        #[command(flatten)]
        structures: StructureArgs,
        /// Embedding dimensions to search, comma separated.
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
    },
    /// Cross-dataset AUROC matrix.
    Leakage {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// AUROC across RMSD training windows.
    Sweep {
        #[command(flatten)]
        structures: StructureArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        repeats: Option<usize>,
        /// Independent runs used to score the held-out negatives.
        #[arg(long)]
        holdout_runs: Option<usize>,
    },
    /// Download or copy a registered dataset into the cache.
    Fetch {
        name: String,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        cache: Option<PathBuf>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Stats => "stats",
            Command::Split { .. } => "split",
            Command::VerifyPlan { .. } => "verify-plan",
            Command::Sample { .. } => "sample",
            Command::Rmsd { .. } => "rmsd",
            Command::Tanimoto { .. } => "tanimoto",
            Command::Embed { .. } => "embed",
            Command::Train { .. } => "train",
            Command::Gridsearch { .. } => "gridsearch",
            Command::Leakage { .. } => "leakage",
            Command::Sweep { .. } => "sweep",
            Command::Fetch { .. } => "fetch",
        }
    }

    fn needs(&self, cfg: &RunConfig) -> Needs {
        let rmsd_sampler = cfg.sampler.mode == SamplerMode::Rmsd;
        let graph = Needs {
            edges: 1,
            ..Needs::default()
        };
        let random = Needs {
            seed: true,
            ..graph
        };
        match self {
            Command::Stats | Command::VerifyPlan { .. } => graph,
            Command::Split { .. } | Command::Embed { .. } => random,
            Command::Sample { .. } | Command::Train { .. } | Command::Gridsearch { .. } => Needs {
                rmsd: rmsd_sampler,
                ..random
            },
            Command::Rmsd { .. } => Needs {
                rmsd: true,
                ..Needs::default()
            },
            Command::Tanimoto { .. } => Needs {
                fingerprints: true,
                ..Needs::default()
            },
            Command::Leakage { .. } => Needs { edges: 2, ..random },
            Command::Sweep { .. } => Needs {
                rmsd: true,
                ..random
            },
            Command::Fetch { .. } => Needs::default(),
        }
    }
}

fn apply_split(cfg: &mut RunConfig, a: &SplitArgs) {
    if let Some(m) = a.mode {
        cfg.split.mode = m.into();
    }
    if a.k.is_some() {
        cfg.split.k = a.k;
    }
    if let Some(r) = a.repeats {
        cfg.split.repeats = r;
    }
}

fn apply_structures(cfg: &mut RunConfig, a: &StructureArgs) {
    if a.structures.is_some() {
        cfg.data.structures = a.structures.clone();
    }
    if a.rmsd_matrix.is_some() {
        cfg.data.rmsd_matrix = a.rmsd_matrix.clone();
    }
    if a.chain.is_some() {
        cfg.data.chain = a.chain;
    }
}

fn apply_sampler(cfg: &mut RunConfig, a: &SamplerArgs) {
    match a.sampler {
        Some(SamplerArg::Random) => cfg.sampler.mode = SamplerMode::Random,
        Some(SamplerArg::Rmsd) => cfg.sampler.mode = SamplerMode::Rmsd,
        None => {}
    }
    if let Some(t) = a.train_max {
        cfg.sampler.window.train_max = t;
    }
    if let Some(r) = a.ratio {
        cfg.sampler.window.ratio = r;
    }
}

fn apply_model(cfg: &mut RunConfig, a: &ModelArgs) {
    if let Some(d) = a.dim {
        cfg.node2vec.dim = d;
    }
    if let Some(h) = a.hidden {
        cfg.snn.hidden = h;
    }
    if let Some(e) = a.epochs {
        cfg.snn.epochs = e;
    }
    if let Some(lr) = a.learning_rate {
        cfg.snn.learning_rate = lr;
    }
}

/// Merge the config file (if any) with command-line overrides.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let g = &cli.global;
    let mut cfg = match &g.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if g.seed.is_some() {
        cfg.seed = g.seed;
    }
    if let Some(out) = &g.out {
        cfg.output = out.clone();
    }
    if g.jobs.is_some() {
        cfg.jobs = g.jobs;
    }
    if !g.edges.is_empty() {
        cfg.data.edges = g.edges.clone();
    }
    if !g.affinities.is_empty() {
        cfg.data.affinities = g.affinities.clone();
    }
    if g.kd_threshold.is_some() {
        cfg.data.kd_threshold = g.kd_threshold;
    }
    if g.swap_columns {
        cfg.data.swap_columns = true;
    }
    match &cli.command {
        Command::Split { split } => apply_split(&mut cfg, split),
        Command::Sample {
            sampler,
            structures,
        } => {
            apply_sampler(&mut cfg, sampler);
            apply_structures(&mut cfg, structures);
        }
        Command::Rmsd { structures } => apply_structures(&mut cfg, structures),
        Command::Tanimoto { fingerprints } => {
            if fingerprints.is_some() {
                cfg.data.fingerprints = fingerprints.clone();
            }
        }
        Command::Embed { model } | Command::Leakage { model } => apply_model(&mut cfg, model),
        Command::Train {
            split,
            sampler,
            structures,
            model,
        } => {
            apply_split(&mut cfg, split);
            apply_sampler(&mut cfg, sampler);
            apply_structures(&mut cfg, structures);
            apply_model(&mut cfg, model);
        }
        Command::Gridsearch {
            split,
            sampler,
            structures,
            dims,
        } => {
            apply_split(&mut cfg, split);
            apply_sampler(&mut cfg, sampler);
            apply_structures(&mut cfg, structures);
            if let Some(d) = dims {
                cfg.grid.dims = d.clone();
            }
        }
        Command::Sweep {
            structures,
            model,
            repeats,
            holdout_runs,
        } => {
            apply_structures(&mut cfg, structures);
            apply_model(&mut cfg, model);
            if let Some(r) = repeats {
                cfg.sweep.repeats = *r;
            }
            if let Some(h) = holdout_runs {
                cfg.sweep.holdout_runs = *h;
            }
        }
        Command::Stats | Command::VerifyPlan { .. } | Command::Fetch { .. } => {}
    }
    Ok(cfg)
}

fn dispatch(command: &Command, cfg: &RunConfig, out: &mut Artifacts) -> Result<()> {
    match command {
        Command::Stats => commands::cmd_stats(cfg, out).map(drop),
        Command::Split { .. } => commands::cmd_split(cfg, out).map(drop),
        Command::VerifyPlan { plan } => commands::cmd_verify_plan(cfg, plan, out).map(drop),
        Command::Sample { .. } => commands::cmd_sample(cfg, out).map(drop),
        Command::Rmsd { .. } => commands::cmd_rmsd(cfg, out).map(drop),
        Command::Tanimoto { .. } => commands::cmd_tanimoto(cfg, out).map(drop),
        Command::Embed { .. } => commands::cmd_embed(cfg, out).map(drop),
        Command::Train { .. } => commands::cmd_train(cfg, out).map(drop),
        Command::Gridsearch { .. } => commands::cmd_gridsearch(cfg, out).map(drop),
        Command::Leakage { .. } => commands::cmd_leakage(cfg, out).map(drop),
        Command::Sweep { .. } => commands::cmd_sweep(cfg, out).map(drop),
        Command::Fetch {
            name,
            manifest,
            cache,
        } => commands::cmd_fetch(manifest, name, cache.as_deref(), out).map(drop),
    }
}

/// Run a parsed command: validate, execute in a sized thread pool, and
/// record `run.json` next to the artifacts.
pub fn run(cli: &Cli, argv: &[String]) -> Result<Artifacts> {
    let started = unix_now();
    let cfg = resolve_config(cli)?;
    cfg.validate(cli.command.needs(&cfg))?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = cfg.jobs {
        builder = builder.num_threads(jobs);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Validation(format!("thread pool: {e}")))?;
    let mut out = Artifacts::create(&cfg.output)?;
    pool.install(|| dispatch(&cli.command, &cfg, &mut out))?;
    let files = out.files().to_vec();
    let record = RunRecord {
        command: cli.command.name(),
        arguments: json!(argv),
        seed: cfg.seed,
        config: &cfg,
        versions: RunRecord::versions(),
        started_unix: started,
        finished_unix: unix_now(),
        artifacts: &files,
    };
    out.write_json("run.json", &record)?;
    Ok(out)
}

/// Machine-readable error document printed on failure.
pub fn error_json(e: &Error) -> serde_json::Value {
    let problems = match e {
        Error::Config(p) => p.clone(),
        _ => Vec::new(),
    };
    json!({ "error": { "kind": e.kind(), "message": e.to_string(), "problems": problems } })
}

/// Entry point shared by the binary and the tests. Returns the exit code:
/// 0 on success, 1 on a pipeline error, 2 on a usage error.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let argv: Vec<String> = args
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    match run(&cli, &argv) {
        Ok(out) => {
            log::info!("{} artifacts in {}", out.files().len(), out.dir().display());
            0
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            1
        }
    }
}
