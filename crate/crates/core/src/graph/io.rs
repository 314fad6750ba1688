use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use log::warn;

use super::{validate_id, DtiGraph, GraphBuilder};
use crate::error::{Error, Result};

/// Binarization cutoff for dissociation constants.
pub const DEFAULT_KD_THRESHOLD: f64 = 30.0;

#[derive(Clone, Copy, Debug, Default)]
pub struct EdgeListOptions {
    /// Columns are `protein<TAB>drug` instead of `drug<TAB>protein`.
    pub swap_columns: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub rows: usize,
    pub duplicates: usize,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    Ok(BufReader::new(f))
}

/// Data rows of a tab-separated file as `(line number, fields)`.
/// `#` lines and blank lines are skipped.
fn data_rows<'a, R: Read + 'a>(
    reader: R,
    source: &'a Path,
) -> impl Iterator<Item = Result<(usize, Vec<String>)>> + 'a {
    BufReader::new(reader)
        .lines()
        .enumerate()
        .filter_map(move |(i, line)| {
            let line_no = i + 1;
            let line = match line {
                Ok(l) => l,
                Err(e) => return Some(Err(Error::io(format!("reading {}", source.display()), e))),
            };
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                return None;
            }
            Some(Ok((
                line_no,
                line.split('\t').map(str::to_string).collect(),
            )))
        })
}

/// Load a tab-separated `drug_id<TAB>protein_id` edge list.
///
/// The graph is named after the file stem.
pub fn load_edge_list(
    path: impl AsRef<Path>,
    opts: EdgeListOptions,
) -> Result<(DtiGraph, LoadReport)> {
    let path = path.as_ref();
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_edge_list(open(path)?, name, path, opts)
}

pub fn read_edge_list<R: Read>(
    reader: R,
    name: impl Into<String>,
    source: &Path,
    opts: EdgeListOptions,
) -> Result<(DtiGraph, LoadReport)> {
    let mut builder = GraphBuilder::new(name);
    let mut rows = 0;
    for row in data_rows(reader, source) {
        let (line, fields) = row?;
        if fields.len() < 2 {
            return Err(Error::parse(
                source,
                line,
                format!("expected 2 tab-separated columns, found {}", fields.len()),
            ));
        }
        let (mut drug, mut protein) = (fields[0].trim(), fields[1].trim());
        if opts.swap_columns {
            std::mem::swap(&mut drug, &mut protein);
        }
        for id in [drug, protein] {
            validate_id(id).map_err(|m| Error::parse(source, line, m))?;
        }
        builder.add_edge(drug, protein)?;
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::EmptyInput(source.to_path_buf()));
    }
    let report = LoadReport {
        rows,
        duplicates: builder.duplicates(),
    };
    if report.duplicates > 0 {
        warn!(
            "{}: collapsed {} duplicate rows",
            source.display(),
            report.duplicates
        );
    }
    Ok((builder.build(), report))
}

/// Write edges sorted by `(drug, protein)` under a `#` header.
pub fn write_edge_list<W: Write>(g: &DtiGraph, mut w: W) -> std::io::Result<()> {
    writeln!(w, "#drug_id\tprotein_id")?;
    for &e in g.edges() {
        writeln!(w, "{}\t{}", g.drug_id(e.drug), g.protein_id(e.protein))?;
    }
    w.flush()
}

pub fn save_edge_list(g: &DtiGraph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
    write_edge_list(g, BufWriter::new(f))
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

/// One measured binding affinity.
#[derive(Clone, Debug, PartialEq)]
pub struct AffinityRecord {
    pub drug: String,
    pub protein: String,
    pub kd: f64,
}

pub fn load_affinities(path: impl AsRef<Path>) -> Result<Vec<AffinityRecord>> {
    let path = path.as_ref();
    read_affinities(open(path)?, path)
}

/// Parse `drug_id<TAB>protein_id<TAB>kd` rows.
pub fn read_affinities<R: Read>(reader: R, source: &Path) -> Result<Vec<AffinityRecord>> {
    let mut out = Vec::new();
    for row in data_rows(reader, source) {
        let (line, fields) = row?;
        if fields.len() < 3 {
            return Err(Error::parse(
                source,
                line,
                format!("expected 3 tab-separated columns, found {}", fields.len()),
            ));
        }
        let kd: f64 = fields[2]
            .trim()
            .parse()
            .map_err(|_| Error::parse(source, line, format!("invalid kd `{}`", fields[2])))?;
        let (drug, protein) = (fields[0].trim(), fields[1].trim());
        for id in [drug, protein] {
            validate_id(id).map_err(|m| Error::parse(source, line, m))?;
        }
        out.push(AffinityRecord {
            drug: drug.to_string(),
            protein: protein.to_string(),
            kd,
        });
    }
    if out.is_empty() {
        return Err(Error::EmptyInput(source.to_path_buf()));
    }
    Ok(out)
}

/// Turn affinity measurements into a binary interaction graph.
///
/// A pair is an interaction iff its smallest recorded `kd` is strictly below
/// `threshold`. Every drug and protein that appears in `records` is kept as a
/// node, including those left without any interaction.
pub fn binarize_affinities(
    name: impl Into<String>,
    records: &[AffinityRecord],
    threshold: f64,
) -> Result<DtiGraph> {
    if !(threshold > 0.0) {
        return Err(Error::Validation(format!(
            "kd threshold must be > 0, got {threshold}"
        )));
    }
    let mut best: BTreeMap<(&str, &str), f64> = BTreeMap::new();
    for r in records {
        if !(r.kd >= 0.0) {
            return Err(Error::Validation(format!(
                "negative or NaN kd {} for ({}, {})",
                r.kd, r.drug, r.protein
            )));
        }
        best.entry((&r.drug, &r.protein))
            .and_modify(|kd| *kd = kd.min(r.kd))
            .or_insert(r.kd);
    }
    let mut b = GraphBuilder::new(name);
    for (&(d, p), &kd) in &best {
        b.add_drug(d)?;
        b.add_protein(p)?;
        if kd < threshold {
            b.add_edge(d, p)?;
        }
    }
    Ok(b.build())
}
