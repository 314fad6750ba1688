use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use super::{ProteinStructure, Residue, StructureSource};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default)]
pub struct PdbOptions {
    /// Chain to extract; the first chain with a C-alpha atom when `None`.
    pub chain: Option<char>,
}

fn one_letter(res_name: &str) -> u8 {
    match res_name {
        "ALA" => b'A',
        "ARG" => b'R',
        "ASN" => b'N',
        "ASP" => b'D',
        "CYS" => b'C',
        "GLN" => b'Q',
        "GLU" => b'E',
        "GLY" => b'G',
        "HIS" => b'H',
        "ILE" => b'I',
        "LEU" => b'L',
        "LYS" => b'K',
        "MET" | "MSE" => b'M',
        "PHE" => b'F',
        "PRO" => b'P',
        "SER" => b'S',
        "THR" => b'T',
        "TRP" => b'W',
        "TYR" => b'Y',
        "VAL" => b'V',
        "ASX" => b'B',
        "GLX" => b'Z',
        _ => b'X',
    }
}

/// 1-based inclusive PDB column range, clipped to the line.
fn cols(line: &str, from: usize, to: usize) -> &str {
    let end = to.min(line.len());
    if from > end {
        return "";
    }
    line.get(from - 1..end).unwrap_or("")
}

pub fn parse_pdb_ca(path: impl AsRef<Path>, opts: PdbOptions) -> Result<ProteinStructure> {
    let path = path.as_ref();
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let f = File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    read_pdb_ca(f, id, path, opts)
}

/// Extract one C-alpha per residue from PDB `ATOM` records.
///
/// Only the first model is read. For a residue listed with several alternate
/// locations the first one encountered is kept.
pub fn read_pdb_ca<R: Read>(
    reader: R,
    id: impl Into<String>,
    source: &Path,
    opts: PdbOptions,
) -> Result<ProteinStructure> {
    let id = id.into();
    let mut chain = opts.chain;
    let mut seen: HashSet<(String, char)> = HashSet::new();
    let mut residues = Vec::new();
    let mut b_factors = Vec::new();
    let mut resolution = None;
    let mut xray = false;
    let mut predicted = false;

    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(format!("reading {}", source.display()), e))?;
        let record = cols(&line, 1, 6).trim_end();
        match record {
            "ENDMDL" => break,
            "HEADER" | "TITLE" | "KEYWDS" | "REMARK"
                if line.to_ascii_uppercase().contains("ALPHAFOLD") =>
            {
                predicted = true;
            }
            "EXPDTA" if line.contains("X-RAY") => xray = true,
            _ => {}
        }
        if record == "REMARK" && cols(&line, 8, 10).trim() == "2" {
            if let Some(rest) = line.split("RESOLUTION.").nth(1) {
                resolution = rest
                    .split_whitespace()
                    .next()
                    .and_then(|t| t.parse::<f64>().ok());
            }
            continue;
        }
        if record != "ATOM" || cols(&line, 13, 16).trim() != "CA" {
            continue;
        }
        let atom_chain = cols(&line, 22, 22).chars().next().unwrap_or(' ');
        match chain {
            None => chain = Some(atom_chain),
            Some(c) if c != atom_chain => continue,
            Some(_) => {}
        }
        let res_seq = cols(&line, 23, 26).trim().to_string();
        let icode = cols(&line, 27, 27).chars().next().unwrap_or(' ');
        if !seen.insert((res_seq, icode)) {
            continue;
        }
        let coord = |from, to, axis| -> Result<f64> {
            let field = cols(&line, from, to).trim();
            field
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    Error::parse(
                        source,
                        line_no,
                        format!("malformed {axis} coordinate `{field}`"),
                    )
                })
        };
        let ca = [
            coord(31, 38, "x")?,
            coord(39, 46, "y")?,
            coord(47, 54, "z")?,
        ];
        if let Ok(b) = cols(&line, 61, 66).trim().parse::<f64>() {
            b_factors.push(b);
        }
        residues.push(Residue {
            code: one_letter(cols(&line, 18, 20).trim()),
            ca,
        });
    }
    if residues.is_empty() {
        return Err(Error::EmptyStructure(id));
    }
    let (src, quality) = if predicted {
        let mean = (b_factors.len() == residues.len())
            .then(|| b_factors.iter().sum::<f64>() / b_factors.len() as f64);
        (Some(StructureSource::AlphaFold), mean)
    } else if xray || resolution.is_some() {
        (Some(StructureSource::XRay), resolution)
    } else {
        (None, None)
    };
    Ok(ProteinStructure {
        id,
        residues,
        source: src,
        quality,
    })
}

/// Parse every `*.pdb` / `*.ent` file in `dir`, ordered by file name.
/// Structure ids are the file stems.
pub fn load_structures_dir(
    dir: impl AsRef<Path>,
    opts: PdbOptions,
) -> Result<Vec<ProteinStructure>> {
    let dir = dir.as_ref();
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(format!("listing {}", dir.display()), e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("pdb" | "ent")))
        .collect();
    paths.sort();
    paths.iter().map(|p| parse_pdb_ca(p, opts)).collect()
}
