//! node2vec embeddings: second-order biased random walks followed by
//! skip-gram training with negative sampling.

mod sgns;
mod walks;

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DtiGraph, EdgePair, NodeKind, NodeRef};

pub use sgns::{sgns_grad, sgns_loss, train_sgns, SgnsModel};
pub use walks::{generate_walks, Adjacency};

/// Embedding dimensions explored by the grid search.
pub const DIM_LATTICE: [usize; 6] = [25, 90, 180, 256, 480, 720];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Node2VecParams {
    pub dim: usize,
    /// Return bias: weight `1/p` for stepping back to the previous node.
    pub p: f64,
    /// In-out bias: weight `1/q` for moving away from the previous node.
    pub q: f64,
    pub walks_per_node: usize,
    pub walk_length: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    /// Initial learning rate, decayed linearly towards zero.
    pub learning_rate: f64,
    pub seed: u64,
    /// Lock-free multi-threaded training. Faster, but not bit-reproducible.
    pub parallel: bool,
}

impl Default for Node2VecParams {
    fn default() -> Self {
        Node2VecParams {
            dim: 90,
            p: 1.0,
            q: 1.0,
            walks_per_node: 10,
            walk_length: 80,
            window: 10,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            seed: 0,
            parallel: false,
        }
    }
}

impl Node2VecParams {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.dim == 0 {
            problems.push("dim must be >= 1".to_string());
        }
        if !(self.p > 0.0) || !(self.q > 0.0) {
            problems.push(format!("p and q must be > 0 (p={}, q={})", self.p, self.q));
        }
        if self.walk_length < 2 {
            problems.push(format!(
                "walk_length must be >= 2, got {}",
                self.walk_length
            ));
        }
        if self.walks_per_node == 0 || self.window == 0 || self.epochs == 0 {
            problems.push("walks_per_node, window and epochs must be >= 1".to_string());
        }
        if !(self.learning_rate > 0.0) {
            problems.push(format!(
                "learning_rate must be > 0, got {}",
                self.learning_rate
            ));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }
}

/// Per-node vectors for one graph.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    index: HashMap<NodeRef, usize>,
    nodes: Vec<NodeRef>,
    vectors: Vec<f64>,
    /// Nodes without edges; their vectors are zero.
    pub isolated: Vec<NodeRef>,
    pub params: Option<Node2VecParams>,
}

impl EmbeddingTable {
    pub fn new(dim: usize, nodes: Vec<NodeRef>, vectors: Vec<f64>) -> Result<Self> {
        if vectors.len() != nodes.len() * dim {
            return Err(Error::ShapeMismatch(format!(
                "{} values for {} nodes of dimension {dim}",
                vectors.len(),
                nodes.len()
            )));
        }
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation(
                "embedding contains non-finite values".into(),
            ));
        }
        let index = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        Ok(EmbeddingTable {
            dim,
            index,
            nodes,
            vectors,
            isolated: Vec::new(),
            params: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes(&self) -> &[NodeRef] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn get(&self, node: &NodeRef) -> Option<&[f64]> {
        self.index
            .get(node)
            .map(|&i| &self.vectors[i * self.dim..(i + 1) * self.dim])
    }

    fn require(&self, kind: NodeKind, id: &str) -> Result<&[f64]> {
        self.get(&NodeRef {
            kind,
            id: id.to_string(),
        })
        .ok_or_else(|| Error::MissingNode {
            kind: kind.as_str(),
            id: id.to_string(),
        })
    }

    /// Word2vec text format: a `count dim` header, then one `token v1 … vd`
    /// line per node with tokens `drug:<id>` / `protein:<id>`.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.nodes.len(), self.dim)?;
        for (i, node) in self.nodes.iter().enumerate() {
            write!(w, "{}:{}", node.kind, node.id)?;
            for v in &self.vectors[i * self.dim..(i + 1) * self.dim] {
                write!(w, " {v}")?;
            }
            writeln!(w)?;
        }
        w.flush()
    }

    pub fn save_text(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f =
            File::create(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
        self.write_text(BufWriter::new(f))
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn read_text<R: Read>(reader: R, source: &Path) -> Result<Self> {
        let mut lines = BufReader::new(reader).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::EmptyInput(source.to_path_buf()))?
            .map_err(|e| Error::io(format!("reading {}", source.display()), e))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .filter_map(|t| t.parse().ok())
            .collect();
        let [count, dim] = dims[..] else {
            return Err(Error::parse(source, 1, "expected `count dim` header"));
        };
        let mut nodes = Vec::with_capacity(count);
        let mut vectors = Vec::with_capacity(count * dim);
        for (i, line) in lines.enumerate() {
            let line_no = i + 2;
            let line = line.map_err(|e| Error::io(format!("reading {}", source.display()), e))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut tokens = line.split_whitespace();
            let token = tokens.next().unwrap_or_default();
            let node = match token.split_once(':') {
                Some(("drug", id)) => NodeRef::drug(id),
                Some(("protein", id)) => NodeRef::protein(id),
                _ => {
                    return Err(Error::parse(
                        source,
                        line_no,
                        format!("bad node token `{token}`"),
                    ))
                }
            };
            let values: Vec<f64> = tokens
                .map(|t| {
                    t.parse()
                        .map_err(|_| Error::parse(source, line_no, format!("bad value `{t}`")))
                })
                .collect::<Result<_>>()?;
            if values.len() != dim {
                return Err(Error::parse(
                    source,
                    line_no,
                    format!("expected {dim} values, found {}", values.len()),
                ));
            }
            nodes.push(node);
            vectors.extend(values);
        }
        if nodes.len() != count {
            return Err(Error::parse(
                source,
                1,
                format!("header announces {count} nodes, found {}", nodes.len()),
            ));
        }
        EmbeddingTable::new(dim, nodes, vectors)
    }

    pub fn load_text(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f =
            File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
        Self::read_text(f, path)
    }
}

/// Embed every node of `g` with node2vec.
pub fn embed(g: &DtiGraph, params: &Node2VecParams) -> Result<EmbeddingTable> {
    params.validate()?;
    if g.n_nodes() == 0 {
        return Err(Error::Validation("cannot embed an empty graph".into()));
    }
    let adj = Adjacency::from_graph(g);
    let walks = generate_walks(&adj, params);
    let model = train_sgns(&walks, adj.len(), params)?;
    let mut vectors = model.input;
    let nodes: Vec<NodeRef> = g
        .drugs()
        .iter()
        .map(NodeRef::drug)
        .chain(g.proteins().iter().map(NodeRef::protein))
        .collect();
    let mut isolated = Vec::new();
    for (v, node) in nodes.iter().enumerate() {
        if adj.neighbors(v as u32).is_empty() {
            vectors[v * params.dim..(v + 1) * params.dim].fill(0.0);
            isolated.push(node.clone());
        }
    }
    let mut table = EmbeddingTable::new(params.dim, nodes, vectors)?;
    table.isolated = isolated;
    table.params = Some(params.clone());
    Ok(table)
}

/// Feature rows `drug vector ‖ protein vector` for each pair (K × 2d).
pub fn pair_features(emb: &EmbeddingTable, pairs: &[EdgePair]) -> Result<DMatrix<f64>> {
    let d = emb.dim;
    let mut x = DMatrix::zeros(pairs.len(), 2 * d);
    for (k, pair) in pairs.iter().enumerate() {
        let drug = emb.require(NodeKind::Drug, pair.drug())?;
        let protein = emb.require(NodeKind::Protein, pair.protein())?;
        for j in 0..d {
            x[(k, j)] = drug[j];
            x[(k, d + j)] = protein[j];
        }
    }
    Ok(x)
}
