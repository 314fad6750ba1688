//! Bipartite drug–target interaction graph.

mod io;
mod stats;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{
    binarize_affinities, load_affinities, load_edge_list, read_affinities, read_edge_list,
    save_edge_list, write_edge_list, AffinityRecord, EdgeListOptions, LoadReport,
    DEFAULT_KD_THRESHOLD,
};
pub use stats::{compute_stats, compute_stats_with, degree_histogram, GraphStats, StatsOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Drug,
    Protein,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Drug => "drug",
            NodeKind::Protein => "protein",
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeRef {
    pub kind: NodeKind,
    pub id: String,
}

impl NodeRef {
    pub fn drug(id: impl Into<String>) -> Self {
        NodeRef {
            kind: NodeKind::Drug,
            id: id.into(),
        }
    }

    pub fn protein(id: impl Into<String>) -> Self {
        NodeRef {
            kind: NodeKind::Protein,
            id: id.into(),
        }
    }
}

/// An interaction addressed by node indices into one particular graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub drug: u32,
    pub protein: u32,
}

/// An interaction addressed by identifiers, `(drug, protein)`.
///
/// This is the graph-independent form used in plans, samples and reports.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgePair(pub String, pub String);

impl EdgePair {
    pub fn new(drug: impl Into<String>, protein: impl Into<String>) -> Self {
        EdgePair(drug.into(), protein.into())
    }

    pub fn drug(&self) -> &str {
        &self.0
    }

    pub fn protein(&self) -> &str {
        &self.1
    }
}

pub(crate) fn validate_id(id: &str) -> std::result::Result<(), String> {
    if id.is_empty() {
        return Err("empty identifier".into());
    }
    if id.chars().any(char::is_whitespace) {
        return Err(format!("identifier `{id}` contains whitespace"));
    }
    Ok(())
}

/// Immutable bipartite graph of drugs and proteins.
///
/// Node tables are kept sorted by identifier so that every derived artifact
/// is independent of input row order. Edges can only join a drug to a
/// protein; the representation cannot express anything else.
#[derive(Clone, Debug)]
pub struct DtiGraph {
    name: String,
    drugs: Vec<String>,
    proteins: Vec<String>,
    drug_index: HashMap<String, u32>,
    protein_index: HashMap<String, u32>,
    edges: Vec<Edge>,
    drug_adj: Vec<Vec<u32>>,
    protein_adj: Vec<Vec<u32>>,
}

impl DtiGraph {
    pub fn builder(name: impl Into<String>) -> GraphBuilder {
        GraphBuilder::new(name)
    }

    /// Build a graph from `(drug, protein)` pairs. Duplicates are collapsed.
    pub fn from_pairs<I, D, P>(name: impl Into<String>, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (D, P)>,
        D: Into<String>,
        P: Into<String>,
    {
        let mut b = GraphBuilder::new(name);
        for (d, p) in pairs {
            b.add_edge(d, p)?;
        }
        Ok(b.build())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn drugs(&self) -> &[String] {
        &self.drugs
    }

    pub fn proteins(&self) -> &[String] {
        &self.proteins
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn n_drugs(&self) -> usize {
        self.drugs.len()
    }

    pub fn n_proteins(&self) -> usize {
        self.proteins.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.drugs.len() + self.proteins.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn drug_id(&self, i: u32) -> &str {
        &self.drugs[i as usize]
    }

    pub fn protein_id(&self, i: u32) -> &str {
        &self.proteins[i as usize]
    }

    pub fn drug_index(&self, id: &str) -> Option<u32> {
        self.drug_index.get(id).copied()
    }

    pub fn protein_index(&self, id: &str) -> Option<u32> {
        self.protein_index.get(id).copied()
    }

    /// Proteins adjacent to drug `d`, sorted.
    pub fn drug_neighbors(&self, d: u32) -> &[u32] {
        &self.drug_adj[d as usize]
    }

    /// Drugs adjacent to protein `p`, sorted.
    pub fn protein_neighbors(&self, p: u32) -> &[u32] {
        &self.protein_adj[p as usize]
    }

    pub fn has_edge(&self, d: u32, p: u32) -> bool {
        self.drug_adj[d as usize].binary_search(&p).is_ok()
    }

    pub fn contains_pair(&self, pair: &EdgePair) -> bool {
        self.edge_from_pair(pair)
            .is_some_and(|e| self.has_edge(e.drug, e.protein))
    }

    pub fn edge_pair(&self, e: Edge) -> EdgePair {
        EdgePair::new(self.drug_id(e.drug), self.protein_id(e.protein))
    }

    /// Resolve identifiers to indices. The pair need not be an edge.
    pub fn edge_from_pair(&self, pair: &EdgePair) -> Option<Edge> {
        Some(Edge {
            drug: self.drug_index(pair.drug())?,
            protein: self.protein_index(pair.protein())?,
        })
    }

    pub fn edge_pairs(&self) -> Vec<EdgePair> {
        self.edges.iter().map(|&e| self.edge_pair(e)).collect()
    }

    pub fn degree(&self, kind: NodeKind, i: u32) -> usize {
        match kind {
            NodeKind::Drug => self.drug_adj[i as usize].len(),
            NodeKind::Protein => self.protein_adj[i as usize].len(),
        }
    }

    /// Copy of this graph without the given drugs and proteins (and their edges).
    pub fn without_nodes(&self, drugs: &BTreeSet<String>, proteins: &BTreeSet<String>) -> DtiGraph {
        let mut b = GraphBuilder::new(self.name.clone());
        for d in self.drugs.iter().filter(|d| !drugs.contains(*d)) {
            b.drugs.insert(d.clone());
        }
        for p in self.proteins.iter().filter(|p| !proteins.contains(*p)) {
            b.proteins.insert(p.clone());
        }
        for &e in &self.edges {
            let (d, p) = (self.drug_id(e.drug), self.protein_id(e.protein));
            if !drugs.contains(d) && !proteins.contains(p) {
                b.edges.insert((d.to_string(), p.to_string()));
            }
        }
        b.build()
    }
}

/// Accumulates nodes and edges; `build` freezes them into a [`DtiGraph`].
#[derive(Clone, Debug, Default)]
pub struct GraphBuilder {
    name: String,
    drugs: BTreeSet<String>,
    proteins: BTreeSet<String>,
    edges: BTreeSet<(String, String)>,
    duplicates: usize,
}

impl GraphBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        GraphBuilder {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn add_drug(&mut self, id: impl Into<String>) -> Result<()> {
        let id = id.into();
        validate_id(&id).map_err(Error::Validation)?;
        self.drugs.insert(id);
        Ok(())
    }

    pub fn add_protein(&mut self, id: impl Into<String>) -> Result<()> {
        let id = id.into();
        validate_id(&id).map_err(Error::Validation)?;
        self.proteins.insert(id);
        Ok(())
    }

    /// Add an edge (and its endpoints). Returns `false` for a duplicate.
    pub fn add_edge(
        &mut self,
        drug: impl Into<String>,
        protein: impl Into<String>,
    ) -> Result<bool> {
        let (drug, protein) = (drug.into(), protein.into());
        self.add_drug(drug.clone())?;
        self.add_protein(protein.clone())?;
        let fresh = self.edges.insert((drug, protein));
        if !fresh {
            self.duplicates += 1;
        }
        Ok(fresh)
    }

    pub fn duplicates(&self) -> usize {
        self.duplicates
    }

    pub fn build(self) -> DtiGraph {
        let drugs: Vec<String> = self.drugs.into_iter().collect();
        let proteins: Vec<String> = self.proteins.into_iter().collect();
        let drug_index: HashMap<String, u32> = drugs
            .iter()
            .enumerate()
            .map(|(i, d)| (d.clone(), i as u32))
            .collect();
        let protein_index: HashMap<String, u32> = proteins
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i as u32))
            .collect();
        let mut drug_adj = vec![Vec::new(); drugs.len()];
        let mut protein_adj = vec![Vec::new(); proteins.len()];
        // BTreeSet iteration is sorted by (drug, protein) name, which matches index order.
        let edges: Vec<Edge> = self
            .edges
            .iter()
            .map(|(d, p)| Edge {
                drug: drug_index[d],
                protein: protein_index[p],
            })
            .collect();
        for e in &edges {
            drug_adj[e.drug as usize].push(e.protein);
            protein_adj[e.protein as usize].push(e.drug);
        }
        for adj in protein_adj.iter_mut() {
            adj.sort_unstable();
        }
        DtiGraph {
            name: self.name,
            drugs,
            proteins,
            drug_index,
            protein_index,
            edges,
            drug_adj,
            protein_adj,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builder_collapses_duplicates() {
        let mut b = DtiGraph::builder("t");
        assert!(b.add_edge("d1", "p1").unwrap());
        assert!(!b.add_edge("d1", "p1").unwrap());
        assert_eq!(b.duplicates(), 1);
        let g = b.build();
        assert_eq!(g.n_edges(), 1);
    }

    #[test]
    fn same_id_may_name_a_drug_and_a_protein() {
        let g = DtiGraph::from_pairs("t", [("x", "x")]).unwrap();
        assert_eq!((g.n_drugs(), g.n_proteins(), g.n_edges()), (1, 1, 1));
    }

    #[test]
    fn rejects_whitespace_ids() {
        assert!(DtiGraph::from_pairs("t", [("d 1", "p1")]).is_err());
        assert!(DtiGraph::from_pairs("t", [("", "p1")]).is_err());
    }

    #[test]
    fn adjacency_is_sorted_and_consistent() {
        let g = DtiGraph::from_pairs("t", [("d2", "p1"), ("d1", "p2"), ("d1", "p1")]).unwrap();
        let d1 = g.drug_index("d1").unwrap();
        let p1 = g.protein_index("p1").unwrap();
        assert_eq!(g.drug_neighbors(d1).len(), 2);
        assert_eq!(g.protein_neighbors(p1), &[0, 1]);
        assert!(g.has_edge(d1, p1));
        assert!(g.contains_pair(&EdgePair::new("d2", "p1")));
        assert!(!g.contains_pair(&EdgePair::new("d2", "p2")));
        assert!(g.edges().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn without_nodes_drops_incident_edges() {
        let g = DtiGraph::from_pairs("t", [("d1", "p1"), ("d1", "p2"), ("d2", "p1")]).unwrap();
        let drop: BTreeSet<String> = ["d1".to_string()].into();
        let h = g.without_nodes(&drop, &BTreeSet::new());
        assert_eq!(h.n_drugs(), 1);
        assert_eq!(h.n_proteins(), 2);
        assert_eq!(h.edge_pairs(), vec![EdgePair::new("d2", "p1")]);
    }
}
