//! Global residue alignment (Needleman–Wunsch with affine gaps, BLOSUM62).

use serde::{Deserialize, Serialize};

use super::ProteinStructure;
use crate::error::{Error, Result};

const ALPHABET: &[u8; 24] = b"ARNDCQEGHILKMFPSTWYVBZX*";

#[rustfmt::skip]
const BLOSUM62: [[i8; 24]; 24] = [
    [4, -1, -2, -2, 0, -1, -1, 0, -2, -1, -1, -1, -1, -2, -1, 1, 0, -3, -2, 0, -2, -1, 0, -4],
    [-1, 5, 0, -2, -3, 1, 0, -2, 0, -3, -2, 2, -1, -3, -2, -1, -1, -3, -2, -3, -1, 0, -1, -4],
    [-2, 0, 6, 1, -3, 0, 0, 0, 1, -3, -3, 0, -2, -3, -2, 1, 0, -4, -2, -3, 3, 0, -1, -4],
    [-2, -2, 1, 6, -3, 0, 2, -1, -1, -3, -4, -1, -3, -3, -1, 0, -1, -4, -3, -3, 4, 1, -1, -4],
    [0, -3, -3, -3, 9, -3, -4, -3, -3, -1, -1, -3, -1, -2, -3, -1, -1, -2, -2, -1, -3, -3, -2, -4],
    [-1, 1, 0, 0, -3, 5, 2, -2, 0, -3, -2, 1, 0, -3, -1, 0, -1, -2, -1, -2, 0, 3, -1, -4],
    [-1, 0, 0, 2, -4, 2, 5, -2, 0, -3, -3, 1, -2, -3, -1, 0, -1, -3, -2, -2, 1, 4, -1, -4],
    [0, -2, 0, -1, -3, -2, -2, 6, -2, -4, -4, -2, -3, -3, -2, 0, -2, -2, -3, -3, -1, -2, -1, -4],
    [-2, 0, 1, -1, -3, 0, 0, -2, 8, -3, -3, -1, -2, -1, -2, -1, -2, -2, 2, -3, 0, 0, -1, -4],
    [-1, -3, -3, -3, -1, -3, -3, -4, -3, 4, 2, -3, 1, 0, -3, -2, -1, -3, -1, 3, -3, -3, -1, -4],
    [-1, -2, -3, -4, -1, -2, -3, -4, -3, 2, 4, -2, 2, 0, -3, -2, -1, -2, -1, 1, -4, -3, -1, -4],
    [-1, 2, 0, -1, -3, 1, 1, -2, -1, -3, -2, 5, -1, -3, -1, 0, -1, -3, -2, -2, 0, 1, -1, -4],
    [-1, -1, -2, -3, -1, 0, -2, -3, -2, 1, 2, -1, 5, 0, -2, -1, -1, -1, -1, 1, -3, -1, -1, -4],
    [-2, -3, -3, -3, -2, -3, -3, -3, -1, 0, 0, -3, 0, 6, -4, -2, -2, 1, 3, -1, -3, -3, -1, -4],
    [-1, -2, -2, -1, -3, -1, -1, -2, -2, -3, -3, -1, -2, -4, 7, -1, -1, -4, -3, -2, -2, -1, -2, -4],
    [1, -1, 1, 0, -1, 0, 0, 0, -1, -2, -2, 0, -1, -2, -1, 4, 1, -3, -2, -2, 0, 0, 0, -4],
    [0, -1, 0, -1, -1, -1, -1, -2, -2, -1, -1, -1, -1, -2, -1, 1, 5, -2, -2, 0, -1, -1, 0, -4],
    [-3, -3, -4, -4, -2, -2, -3, -2, -2, -3, -2, -3, -1, 1, -4, -3, -2, 11, 2, -3, -4, -3, -2, -4],
    [-2, -2, -2, -3, -2, -1, -2, -3, 2, -1, -1, -2, -1, 3, -3, -2, -2, 2, 7, -1, -3, -2, -1, -4],
    [0, -3, -3, -3, -1, -2, -2, -3, -3, 3, 1, -2, 1, -1, -2, -2, 0, -3, -1, 4, -3, -2, -1, -4],
    [-2, -1, 3, 4, -3, 0, 1, -1, 0, -3, -4, 0, -3, -3, -2, 0, -1, -4, -3, -3, 4, 1, -1, -4],
    [-1, 0, 0, 1, -3, 3, 4, -2, 0, -3, -3, 1, -1, -3, -1, 0, -1, -3, -2, -2, 1, 4, -1, -4],
    [0, -1, -1, -1, -2, -1, -1, -1, -1, -1, -1, -1, -1, -1, -2, 0, 0, -2, -1, -1, -1, -1, -1, -4],
    [-4, -4, -4, -4, -4, -4, -4, -4, -4, -4, -4, -4, -4, -4, -4, -4, -4, -4, -4, -4, -4, -4, -4, 1],
];

fn residue_index(code: u8) -> usize {
    let code = code.to_ascii_uppercase();
    ALPHABET.iter().position(|&c| c == code).unwrap_or(22)
}

/// BLOSUM62 substitution score; unknown residues score as `X`.
pub fn blosum62(a: u8, b: u8) -> i32 {
    BLOSUM62[residue_index(a)][residue_index(b)] as i32
}

/// Gap scoring: a gap of length `L` scores `gap_open + (L - 1) * gap_extend`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignParams {
    pub gap_open: i32,
    pub gap_extend: i32,
}

impl Default for AlignParams {
    fn default() -> Self {
        AlignParams {
            gap_open: -10,
            gap_extend: -1,
        }
    }
}

/// Aligned index pairs `(i in A, j in B)`, strictly increasing in both.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResidueMapping(pub Vec<(usize, usize)>);

impl ResidueMapping {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alignment {
    pub score: i32,
    pub mapping: ResidueMapping,
}

const NEG: i32 = i32::MIN / 4;

#[derive(Clone, Copy, PartialEq, Eq)]
enum State {
    Match,
    /// residue of A against a gap
    GapB,
    /// residue of B against a gap
    GapA,
}

fn best(cands: [(i32, State); 3]) -> (i32, State) {
    // first maximum wins: Match > GapB > GapA
    let mut top = cands[0];
    for c in &cands[1..] {
        if c.0 > top.0 {
            top = *c;
        }
    }
    top
}

/// Global alignment of two residue sequences. End gaps are penalized.
pub fn align_sequences(a: &[u8], b: &[u8], params: AlignParams) -> Alignment {
    let (n, m) = (a.len(), b.len());
    let w = m + 1;
    let idx = |i: usize, j: usize| i * w + j;
    let mut mat = vec![NEG; (n + 1) * w];
    let mut gap_b = vec![NEG; (n + 1) * w];
    let mut gap_a = vec![NEG; (n + 1) * w];
    let mut tb_m = vec![State::Match; (n + 1) * w];
    let mut tb_b = vec![State::Match; (n + 1) * w];
    let mut tb_a = vec![State::Match; (n + 1) * w];
    let (open, ext) = (params.gap_open, params.gap_extend);

    mat[idx(0, 0)] = 0;
    for i in 1..=n {
        gap_b[idx(i, 0)] = open + (i as i32 - 1) * ext;
        tb_b[idx(i, 0)] = if i == 1 { State::Match } else { State::GapB };
    }
    for j in 1..=m {
        gap_a[idx(0, j)] = open + (j as i32 - 1) * ext;
        tb_a[idx(0, j)] = if j == 1 { State::Match } else { State::GapA };
    }
    for i in 1..=n {
        for j in 1..=m {
            let d = idx(i - 1, j - 1);
            let (s, st) = best([
                (mat[d], State::Match),
                (gap_b[d], State::GapB),
                (gap_a[d], State::GapA),
            ]);
            mat[idx(i, j)] = s + blosum62(a[i - 1], b[j - 1]);
            tb_m[idx(i, j)] = st;

            let u = idx(i - 1, j);
            let (s, st) = best([
                (mat[u] + open, State::Match),
                (gap_b[u] + ext, State::GapB),
                (gap_a[u] + open, State::GapA),
            ]);
            gap_b[idx(i, j)] = s;
            tb_b[idx(i, j)] = st;

            let l = idx(i, j - 1);
            let (s, st) = best([
                (mat[l] + open, State::Match),
                (gap_b[l] + open, State::GapB),
                (gap_a[l] + ext, State::GapA),
            ]);
            gap_a[idx(i, j)] = s;
            tb_a[idx(i, j)] = st;
        }
    }

    let end = idx(n, m);
    let (score, mut state) = best([
        (mat[end], State::Match),
        (gap_b[end], State::GapB),
        (gap_a[end], State::GapA),
    ]);
    let (mut i, mut j) = (n, m);
    let mut pairs = Vec::new();
    while i > 0 || j > 0 {
        let k = idx(i, j);
        match state {
            State::Match => {
                pairs.push((i - 1, j - 1));
                state = tb_m[k];
                i -= 1;
                j -= 1;
            }
            State::GapB => {
                state = tb_b[k];
                i -= 1;
            }
            State::GapA => {
                state = tb_a[k];
                j -= 1;
            }
        }
    }
    pairs.reverse();
    Alignment {
        score,
        mapping: ResidueMapping(pairs),
    }
}

/// Residue correspondence between two structures.
pub fn align_residues(
    a: &ProteinStructure,
    b: &ProteinStructure,
    params: AlignParams,
) -> Result<ResidueMapping> {
    let mapping = align_sequences(&a.sequence(), &b.sequence(), params).mapping;
    if mapping.len() < 3 {
        return Err(Error::InsufficientOverlap {
            a: a.id.clone(),
            b: b.id.clone(),
            pairs: mapping.len(),
        });
    }
    Ok(mapping)
}
