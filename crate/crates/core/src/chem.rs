//! Drug fingerprints and Tanimoto similarity.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use log::warn;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::similarity::{MatrixKind, SimilarityMatrix};

pub const FINGERPRINT_BITS: usize = 2048;

/// A fixed-width bit vector attached to a drug.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fingerprint {
    pub id: String,
    width: usize,
    words: Vec<u64>,
}

impl Fingerprint {
    pub fn zeros(id: impl Into<String>, width: usize) -> Self {
        Fingerprint {
            id: id.into(),
            width,
            words: vec![0; width.div_ceil(64)],
        }
    }

    pub fn from_bits(id: impl Into<String>, bits: &[bool]) -> Self {
        let mut fp = Fingerprint::zeros(id, bits.len());
        for (i, _) in bits.iter().enumerate().filter(|(_, b)| **b) {
            fp.set(i);
        }
        fp
    }

    /// Decode a big-endian hex string; bit 0 is the most significant bit of
    /// the first character.
    pub fn from_hex(id: impl Into<String>, hex: &str, width: usize) -> Option<Self> {
        if hex.len() * 4 != width {
            return None;
        }
        let mut fp = Fingerprint::zeros(id, width);
        for (c, ch) in hex.chars().enumerate() {
            let nibble = ch.to_digit(16)?;
            for b in 0..4 {
                if nibble & (8 >> b) != 0 {
                    fp.set(c * 4 + b);
                }
            }
        }
        Some(fp)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn set(&mut self, bit: usize) {
        assert!(bit < self.width);
        self.words[bit / 64] |= 1 << (bit % 64);
    }

    pub fn get(&self, bit: usize) -> bool {
        self.words[bit / 64] >> (bit % 64) & 1 == 1
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }
}

pub fn load_fingerprints(path: impl AsRef<Path>, width: usize) -> Result<Vec<Fingerprint>> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    read_fingerprints(f, width, path)
}

/// Parse `drug_id<TAB>hex` rows; one fingerprint per distinct id, sorted by id.
///
/// Repeating an id with identical bits is allowed; differing bits are an error.
pub fn read_fingerprints<R: Read>(
    reader: R,
    width: usize,
    source: &Path,
) -> Result<Vec<Fingerprint>> {
    let mut out: BTreeMap<String, Fingerprint> = BTreeMap::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(format!("reading {}", source.display()), e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        let (Some(id), Some(hex)) = (fields.next(), fields.next()) else {
            return Err(Error::parse(source, line_no, "expected `drug_id<TAB>hex`"));
        };
        let hex = hex.trim();
        if hex.len() * 4 != width {
            return Err(Error::parse(
                source,
                line_no,
                format!("expected {} hex characters, found {}", width / 4, hex.len()),
            ));
        }
        let fp = Fingerprint::from_hex(id.trim(), hex, width)
            .ok_or_else(|| Error::parse(source, line_no, "invalid hex digit"))?;
        if fp.is_zero() {
            warn!(
                "{}:{}: fingerprint `{}` has no bits set",
                source.display(),
                line_no,
                fp.id
            );
        }
        match out.get(&fp.id) {
            Some(prev) if *prev != fp => {
                return Err(Error::DuplicateFingerprint {
                    id: fp.id,
                    line: line_no,
                })
            }
            Some(_) => {}
            None => {
                out.insert(fp.id.clone(), fp);
            }
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyInput(source.to_path_buf()));
    }
    Ok(out.into_values().collect())
}

/// `|a ∧ b| / |a ∨ b|`. Two empty fingerprints are defined to be identical (1.0).
pub fn tanimoto(a: &Fingerprint, b: &Fingerprint) -> Result<f64> {
    if a.width != b.width {
        return Err(Error::WidthMismatch(a.width, b.width));
    }
    let (mut both, mut either) = (0u32, 0u32);
    for (x, y) in a.words.iter().zip(&b.words) {
        both += (x & y).count_ones();
        either += (x | y).count_ones();
    }
    if either == 0 {
        warn!("tanimoto({}, {}): both fingerprints are empty", a.id, b.id);
        return Ok(1.0);
    }
    Ok(both as f64 / either as f64)
}

/// All-pairs Tanimoto over fingerprints ordered by id.
pub fn pairwise_tanimoto(fps: &[Fingerprint]) -> Result<SimilarityMatrix> {
    if fps.len() < 2 {
        return Err(Error::Validation(
            "at least two fingerprints are required".into(),
        ));
    }
    let mut sorted: Vec<&Fingerprint> = fps.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    let ids: Vec<String> = sorted.iter().map(|f| f.id.clone()).collect();
    let n = sorted.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| tanimoto(sorted[i], sorted[j]))
        .collect::<Result<_>>()?;
    let mut m = SimilarityMatrix::new(MatrixKind::Tanimoto, ids);
    for (&(i, j), v) in pairs.iter().zip(values) {
        m.set(i, j, Some(v));
    }
    Ok(m)
}
