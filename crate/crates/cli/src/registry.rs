//! Dataset manifest and a content-addressed download cache.
//!
//! Files are stored as `<cache>/sha256/<digest>` and verified on every
//! fetch, so a cached entry never needs the network again.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use fairdti::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Environment variable naming the cache directory.
pub const CACHE_ENV: &str = "FAIRDTI_CACHE";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    /// `http(s)://` URL or local path. Relative paths resolve against the manifest.
    pub source: String,
    pub sha256: String,
    #[serde(default)]
    pub license: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub datasets: BTreeMap<String, ManifestEntry>,
    #[serde(skip)]
    base: Option<PathBuf>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let mut m: Manifest = serde_json::from_str(&text)?;
        m.base = path.parent().map(Path::to_path_buf);
        Ok(m)
    }

    pub fn entry(&self, name: &str) -> Result<&ManifestEntry> {
        self.datasets
            .get(name)
            .ok_or_else(|| Error::UnknownDataset {
                name: name.to_string(),
                available: self.datasets.keys().cloned().collect(),
            })
    }
}

/// Cache directory from [`CACHE_ENV`], else `.fairdti-cache` in the working directory.
pub fn default_cache_dir() -> PathBuf {
    std::env::var_os(CACHE_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(".fairdti-cache"))
}

fn sha256_file(path: &Path) -> Result<String> {
    let mut f =
        File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f
            .read(&mut buf)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

/// Outcome of [`fetch`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Fetched {
    pub path: PathBuf,
    pub cache_hit: bool,
}

fn copy_into(mut reader: impl Read, dest: &Path) -> Result<()> {
    let mut f =
        File::create(dest).map_err(|e| Error::io(format!("creating {}", dest.display()), e))?;
    io::copy(&mut reader, &mut f)
        .map_err(|e| Error::io(format!("writing {}", dest.display()), e))?;
    f.flush()
        .map_err(|e| Error::io(format!("writing {}", dest.display()), e))
}

/// Resolve `name` to a verified local file, downloading or copying it into
/// the cache on a miss. A checksum mismatch removes the partial file.
pub fn fetch(manifest: &Manifest, name: &str, cache: &Path) -> Result<Fetched> {
    let entry = manifest.entry(name)?;
    let expected = entry.sha256.to_ascii_lowercase();
    let store = cache.join("sha256");
    let target = store.join(&expected);
    if target.is_file() && sha256_file(&target)? == expected {
        return Ok(Fetched {
            path: target,
            cache_hit: true,
        });
    }
    fs::create_dir_all(&store)
        .map_err(|e| Error::io(format!("creating {}", store.display()), e))?;
    let partial = store.join(format!("{expected}.partial"));
    let source = &entry.source;
    let result = if source.starts_with("http://") || source.starts_with("https://") {
        log::info!("downloading {name} from {source}");
        match ureq::get(source).call() {
            Ok(response) => copy_into(response.into_body().into_reader(), &partial),
            Err(e) => Err(Error::io(
                format!("downloading {source}"),
                io::Error::other(e.to_string()),
            )),
        }
    } else {
        let path = match &manifest.base {
            Some(base) if Path::new(source).is_relative() => base.join(source),
            _ => PathBuf::from(source),
        };
        File::open(&path)
            .map_err(|e| Error::io(format!("opening {}", path.display()), e))
            .and_then(|f| copy_into(f, &partial))
    };
    if let Err(e) = result {
        let _ = fs::remove_file(&partial);
        return Err(e);
    }
    let actual = sha256_file(&partial)?;
    if actual != expected {
        let _ = fs::remove_file(&partial);
        return Err(Error::ChecksumMismatch {
            name: name.to_string(),
            expected,
            actual,
        });
    }
    fs::rename(&partial, &target)
        .map_err(|e| Error::io(format!("finalizing {}", target.display()), e))?;
    Ok(Fetched {
        path: target,
        cache_hit: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest_for(dir: &Path, content: &[u8], checksum: Option<&str>) -> Manifest {
        fs::write(dir.join("nr.tsv"), content).unwrap();
        let sha = checksum
            .map(str::to_string)
            .unwrap_or_else(|| hex::encode(Sha256::digest(content)));
        let text =
            format!(r#"{{"datasets": {{"nr": {{"source": "nr.tsv", "sha256": "{sha}"}}}}}}"#);
        fs::write(dir.join("manifest.json"), text).unwrap();
        Manifest::load(&dir.join("manifest.json")).unwrap()
    }

    #[test]
    fn fetch_then_cache_hit() {
        let dir = tempfile::tempdir().unwrap();
        let m = manifest_for(dir.path(), b"d1\tp1\n", None);
        let cache = dir.path().join("cache");
        let first = fetch(&m, "nr", &cache).unwrap();
        assert!(!first.cache_hit);
        // the source disappearing proves the second fetch never reads it
        fs::remove_file(dir.path().join("nr.tsv")).unwrap();
        let second = fetch(&m, "nr", &cache).unwrap();
        assert!(second.cache_hit);
        assert_eq!(fs::read(second.path).unwrap(), b"d1\tp1\n");
    }

    #[test]
    fn tampered_file_is_rejected_and_removed() {
        let dir = tempfile::tempdir().unwrap();
        let m = manifest_for(dir.path(), b"tampered", Some(&"0".repeat(64)));
        let cache = dir.path().join("cache");
        assert!(matches!(
            fetch(&m, "nr", &cache),
            Err(Error::ChecksumMismatch { .. })
        ));
        assert_eq!(fs::read_dir(cache.join("sha256")).unwrap().count(), 0);
    }

    #[test]
    fn unknown_name_lists_available() {
        let dir = tempfile::tempdir().unwrap();
        let m = manifest_for(dir.path(), b"x", None);
        let err = fetch(&m, "davis", dir.path()).unwrap_err();
        assert!(err.to_string().contains("nr"), "{err}");
    }
}
