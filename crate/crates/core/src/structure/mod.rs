//! Protein structures: C-alpha extraction, quality filtering, residue
//! correspondence, rigid superposition and all-pairs RMSD.

mod align;
mod kabsch;
mod pdb;
mod quality;
mod rmsd;

use serde::{Deserialize, Serialize};

pub use align::{
    align_residues, align_sequences, blosum62, AlignParams, Alignment, ResidueMapping,
};
pub use kabsch::{kabsch_superpose, Point, Superposition};
pub use pdb::{load_structures_dir, parse_pdb_ca, read_pdb_ca, PdbOptions};
pub use quality::{quality_filter, QualityReport, QualityThresholds, RejectReason, Rejection};
pub use rmsd::{pairwise_rmsd, pairwise_rmsd_cached, rmsd_refined, RefinedRmsd, RmsdParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StructureSource {
    XRay,
    AlphaFold,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Residue {
    /// One-letter amino-acid code (`X` when unknown).
    pub code: u8,
    pub ca: Point,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProteinStructure {
    pub id: String,
    pub residues: Vec<Residue>,
    pub source: Option<StructureSource>,
    /// Resolution in Å for X-ray models, mean pLDDT for predicted models.
    pub quality: Option<f64>,
}

impl ProteinStructure {
    pub fn new(id: impl Into<String>, residues: Vec<Residue>) -> Self {
        ProteinStructure {
            id: id.into(),
            residues,
            source: None,
            quality: None,
        }
    }

    pub fn sequence(&self) -> Vec<u8> {
        self.residues.iter().map(|r| r.code).collect()
    }

    pub fn coords(&self) -> Vec<Point> {
        self.residues.iter().map(|r| r.ca).collect()
    }
}
