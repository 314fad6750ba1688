use serde::{Deserialize, Serialize};

use super::{ProteinStructure, StructureSource};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityThresholds {
    /// X-ray models are kept iff resolution is strictly below this (Å).
    pub max_resolution: f64,
    /// Predicted models are kept iff mean pLDDT is strictly above this.
    pub min_plddt: f64,
}

impl Default for QualityThresholds {
    fn default() -> Self {
        QualityThresholds {
            max_resolution: 2.0,
            min_plddt: 70.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    Resolution,
    Confidence,
    UnknownQuality,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub id: String,
    pub reason: RejectReason,
}

#[derive(Clone, Debug, Default)]
pub struct QualityReport {
    pub kept: Vec<ProteinStructure>,
    pub rejected: Vec<Rejection>,
}

pub fn quality_filter(structures: Vec<ProteinStructure>, t: QualityThresholds) -> QualityReport {
    let mut report = QualityReport::default();
    for s in structures {
        let verdict = match (s.source, s.quality) {
            (Some(StructureSource::XRay), Some(res)) if res < t.max_resolution => None,
            (Some(StructureSource::XRay), Some(_)) => Some(RejectReason::Resolution),
            (Some(StructureSource::AlphaFold), Some(plddt)) if plddt > t.min_plddt => None,
            (Some(StructureSource::AlphaFold), Some(_)) => Some(RejectReason::Confidence),
            _ => Some(RejectReason::UnknownQuality),
        };
        match verdict {
            None => report.kept.push(s),
            Some(reason) => report.rejected.push(Rejection { id: s.id, reason }),
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(id: &str, source: Option<StructureSource>, q: Option<f64>) -> ProteinStructure {
        ProteinStructure {
            source,
            quality: q,
            ..ProteinStructure::new(id, vec![])
        }
    }

    #[test]
    fn boundaries() {
        use StructureSource::*;
        let r = quality_filter(
            vec![
                s("x18", Some(XRay), Some(1.8)),
                s("x20", Some(XRay), Some(2.0)),
                s("x25", Some(XRay), Some(2.5)),
                s("af70", Some(AlphaFold), Some(70.0)),
                s("af85", Some(AlphaFold), Some(85.0)),
                s("unk", None, None),
                s("xnone", Some(XRay), None),
            ],
            QualityThresholds::default(),
        );
        let kept: Vec<_> = r.kept.iter().map(|s| s.id.as_str()).collect();
        assert_eq!(kept, ["x18", "af85"]);
        let rejected: Vec<_> = r
            .rejected
            .iter()
            .map(|x| (x.id.as_str(), x.reason))
            .collect();
        assert_eq!(
            rejected,
            [
                ("x20", RejectReason::Resolution),
                ("x25", RejectReason::Resolution),
                ("af70", RejectReason::Confidence),
                ("unk", RejectReason::UnknownQuality),
                ("xnone", RejectReason::UnknownQuality),
            ]
        );
    }
}
