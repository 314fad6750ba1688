//! Output directory handling and the `run.json` provenance record.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use fairdti::{Error, Result};
use serde::Serialize;

use crate::config::RunConfig;

/// Files written by one command, relative to the output directory.
#[derive(Debug)]
pub struct Artifacts {
    dir: PathBuf,
    files: Vec<String>,
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
        Ok(Artifacts {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    /// Record a file some other routine wrote.
    pub fn record(&mut self, name: &str) {
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
    }

    pub fn write(
        &mut self,
        name: &str,
        body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
    ) -> Result<PathBuf> {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)
                .map_err(|e| Error::io(format!("creating {}", parent.display()), e))?;
        }
        let f = File::create(&path)
            .map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
        let mut w = BufWriter::new(f);
        body(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
        self.record(name);
        Ok(path)
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<PathBuf> {
        self.write(name, |w| w.write_all(text.as_bytes()))
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let text = serde_json::to_string_pretty(value)? + "\n";
        self.write_text(name, &text)
    }
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

#[derive(Debug, Serialize)]
pub struct Versions {
    pub fairdti: &'static str,
    pub fairdti_cli: &'static str,
}

/// Everything needed to repeat a run: the command, its arguments and the
/// full configuration after flag overrides.
#[derive(Debug, Serialize)]
pub struct RunRecord<'a> {
    pub command: &'a str,
    pub arguments: serde_json::Value,
    pub seed: Option<u64>,
    pub config: &'a RunConfig,
    pub versions: Versions,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub artifacts: &'a [String],
}

impl RunRecord<'_> {
    pub fn versions() -> Versions {
        Versions {
            fairdti: fairdti_version(),
            fairdti_cli: env!("CARGO_PKG_VERSION"),
        }
    }
}

fn fairdti_version() -> &'static str {
    // both crates are versioned in lockstep by the workspace
    env!("CARGO_PKG_VERSION")
}
