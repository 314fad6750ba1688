//! Symmetric pairwise matrices and histogram emission.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixKind {
    /// Similarity in [0, 1], unit diagonal.
    Tanimoto,
    /// Distance in Å, zero diagonal.
    Rmsd,
}

impl MatrixKind {
    fn diagonal(self) -> f64 {
        match self {
            MatrixKind::Tanimoto => 1.0,
            MatrixKind::Rmsd => 0.0,
        }
    }
}

/// Symmetric matrix over an ordered id list. `None` marks an incomparable
/// pair (written as `NA`).
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityMatrix {
    kind: MatrixKind,
    ids: Vec<String>,
    values: Vec<Option<f64>>,
}

impl SimilarityMatrix {
    /// Matrix with the kind's diagonal and every off-diagonal entry `NA`.
    pub fn new(kind: MatrixKind, ids: Vec<String>) -> Self {
        let n = ids.len();
        let mut values = vec![None; n * n];
        for i in 0..n {
            values[i * n + i] = Some(kind.diagonal());
        }
        SimilarityMatrix { kind, ids, values }
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i * self.ids.len() + j]
    }

    pub fn get_by_id(&self, a: &str, b: &str) -> Option<f64> {
        self.get(self.index_of(a)?, self.index_of(b)?)
    }

    /// Set both `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, value: Option<f64>) {
        let n = self.ids.len();
        self.values[i * n + j] = value;
        self.values[j * n + i] = value;
    }

    /// Entries strictly above the diagonal, row-major, `NA` included.
    pub fn upper_triangle(&self) -> impl Iterator<Item = (usize, usize, Option<f64>)> + '_ {
        let n = self.ids.len();
        (0..n).flat_map(move |i| ((i + 1)..n).map(move |j| (i, j, self.get(i, j))))
    }

    /// Defined upper-triangle values.
    pub fn pair_values(&self) -> Vec<f64> {
        self.upper_triangle().filter_map(|(_, _, v)| v).collect()
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "id")?;
        for id in &self.ids {
            write!(w, "\t{id}")?;
        }
        writeln!(w)?;
        let n = self.ids.len();
        for (i, id) in self.ids.iter().enumerate() {
            write!(w, "{id}")?;
            for j in 0..n {
                match self.get(i, j) {
                    Some(v) => write!(w, "\t{v}")?,
                    None => write!(w, "\tNA")?,
                }
            }
            writeln!(w)?;
        }
        w.flush()
    }

    pub fn save_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f =
            File::create(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
        self.write_tsv(BufWriter::new(f))
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    /// Parse a matrix written by [`write_tsv`](Self::write_tsv). Lines
    /// starting with `#` are ignored.
    pub fn read_tsv<R: Read>(reader: R, kind: MatrixKind, source: &Path) -> Result<Self> {
        let mut lines = BufReader::new(reader)
            .lines()
            .enumerate()
            .filter(|(_, l)| !matches!(l, Ok(s) if s.starts_with('#') || s.trim().is_empty()));
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::EmptyInput(source.to_path_buf()))?;
        let header = header.map_err(|e| Error::io(format!("reading {}", source.display()), e))?;
        let ids: Vec<String> = header
            .trim_end()
            .split('\t')
            .skip(1)
            .map(str::to_string)
            .collect();
        let mut m = SimilarityMatrix::new(kind, ids.clone());
        let n = ids.len();
        let mut rows = 0;
        for (i, line) in lines {
            let line = line.map_err(|e| Error::io(format!("reading {}", source.display()), e))?;
            let fields: Vec<&str> = line.trim_end().split('\t').collect();
            if fields.len() != n + 1 || rows >= n || fields[0] != ids[rows] {
                return Err(Error::parse(source, i + 1, "row does not match header ids"));
            }
            for (j, f) in fields[1..].iter().enumerate() {
                m.values[rows * n + j] = if *f == "NA" {
                    None
                } else {
                    Some(
                        f.parse()
                            .map_err(|_| Error::parse(source, i + 1, format!("bad value `{f}`")))?,
                    )
                };
            }
            rows += 1;
        }
        if rows != n {
            return Err(Error::parse(
                source,
                rows + 1,
                format!("expected {n} rows, found {rows}"),
            ));
        }
        Ok(m)
    }

    pub fn load_tsv(path: impl AsRef<Path>, kind: MatrixKind) -> Result<Self> {
        let path = path.as_ref();
        let f =
            File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
        Self::read_tsv(f, kind, path)
    }
}

/// Fixed-width histogram anchored at zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width: f64,
    /// `(low, high, count)`; every bin is `[low, high)` except the last, which is closed.
    pub bins: Vec<(f64, f64, usize)>,
}

impl Histogram {
    pub fn total(&self) -> usize {
        self.bins.iter().map(|b| b.2).sum()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "bin_low,bin_high,count")?;
        for (lo, hi, c) in &self.bins {
            writeln!(w, "{lo},{hi},{c}")?;
        }
        w.flush()
    }
}

/// Bin non-negative values into `[k·w, (k+1)·w)` buckets covering `[0, upper]`.
///
/// `upper` defaults to the largest value; pass `Some(1.0)` for similarities.
pub fn emit_histogram(values: &[f64], bin_width: f64, upper: Option<f64>) -> Result<Histogram> {
    if !(bin_width > 0.0) {
        return Err(Error::Validation(format!(
            "bin width must be > 0, got {bin_width}"
        )));
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::Validation(format!("cannot bin value {bad}")));
    }
    let max = values.iter().copied().fold(0.0, f64::max);
    let upper = upper.unwrap_or(max).max(max);
    // tolerance keeps exact multiples such as 0.15/0.05 in the right bin
    let slot = |v: f64| (v / bin_width + 1e-9).floor() as usize;
    let n_bins = ((upper / bin_width) - 1e-9).ceil().max(1.0) as usize;
    let mut counts = vec![0usize; n_bins];
    for &v in values {
        counts[slot(v).min(n_bins - 1)] += 1;
    }
    let bins = counts
        .into_iter()
        .enumerate()
        .map(|(k, c)| (k as f64 * bin_width, (k + 1) as f64 * bin_width, c))
        .collect();
    Ok(Histogram { bin_width, bins })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    #[test]
    fn histogram_two_bins() {
        let h = emit_histogram(&[0.1, 0.1, 0.9], 0.5, Some(1.0)).unwrap();
        assert_eq!(h.bins, vec![(0.0, 0.5, 2), (0.5, 1.0, 1)]);
    }

    #[test]
    fn upper_edge_lands_in_last_bin() {
        let h = emit_histogram(&[1.0, 0.0], 0.05, Some(1.0)).unwrap();
        assert_eq!(h.bins.len(), 20);
        assert_eq!(h.bins[19].2, 1);
        assert_eq!(h.bins[0].2, 1);
        let h = emit_histogram(&[0.15], 0.05, Some(1.0)).unwrap();
        assert_eq!(h.bins[3].2, 1);
    }

    #[test]
    fn histogram_rejects_bad_width() {
        assert!(emit_histogram(&[0.1], 0.0, None).is_err());
        assert!(emit_histogram(&[-0.1], 0.1, None).is_err());
    }

    #[test]
    fn histogram_csv() {
        let h = emit_histogram(&[0.1, 0.6], 0.5, Some(1.0)).unwrap();
        let mut out = Vec::new();
        h.write_csv(&mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "bin_low,bin_high,count\n0,0.5,1\n0.5,1,1\n"
        );
    }

    #[test]
    fn tsv_round_trip_with_na() {
        let mut m =
            SimilarityMatrix::new(MatrixKind::Rmsd, vec!["a".into(), "b".into(), "c".into()]);
        m.set(0, 1, Some(1.0 / 3.0));
        m.set(1, 2, Some(7.25));
        let mut buf = Vec::new();
        m.write_tsv(&mut buf).unwrap();
        let back =
            SimilarityMatrix::read_tsv(buf.as_slice(), MatrixKind::Rmsd, &PathBuf::from("m"))
                .unwrap();
        assert_eq!(back, m);
        assert_eq!(back.get_by_id("a", "c"), None);
        assert_eq!(back.get_by_id("c", "b"), Some(7.25));
        assert_eq!(m.pair_values().len(), 2);
    }
}
