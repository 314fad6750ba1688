use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use super::Node2VecParams;
use crate::graph::DtiGraph;
use crate::seed;

/// Undirected adjacency over a single node index space: drugs first,
/// proteins after them. Neighbor lists are sorted.
#[derive(Clone, Debug)]
pub struct Adjacency {
    neighbors: Vec<Vec<u32>>,
}

impl Adjacency {
    pub fn from_graph(g: &DtiGraph) -> Self {
        let nd = g.n_drugs() as u32;
        let mut neighbors = Vec::with_capacity(g.n_nodes());
        for d in 0..nd {
            neighbors.push(g.drug_neighbors(d).iter().map(|p| p + nd).collect());
        }
        for p in 0..g.n_proteins() as u32 {
            neighbors.push(g.protein_neighbors(p).to_vec());
        }
        Adjacency { neighbors }
    }

    /// Build from an explicit undirected edge list (used for non-bipartite checks).
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Self {
        let mut neighbors = vec![Vec::new(); n];
        for &(a, b) in edges {
            neighbors[a as usize].push(b);
            neighbors[b as usize].push(a);
        }
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }
        Adjacency { neighbors }
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn neighbors(&self, v: u32) -> &[u32] {
        &self.neighbors[v as usize]
    }

    fn adjacent(&self, a: u32, b: u32) -> bool {
        self.neighbors[a as usize].binary_search(&b).is_ok()
    }

    /// Normalized transition probabilities out of `cur`, given the node the
    /// walk arrived from. Unnormalized weights are `1/p` back to `prev`, `1`
    /// to neighbors of `prev`, `1/q` elsewhere; the first step is uniform.
    pub fn transition_probs(&self, prev: Option<u32>, cur: u32, p: f64, q: f64) -> Vec<(u32, f64)> {
        let weights: Vec<(u32, f64)> = self
            .neighbors(cur)
            .iter()
            .map(|&x| {
                let w = match prev {
                    None => 1.0,
                    Some(t) if x == t => 1.0 / p,
                    Some(t) if self.adjacent(t, x) => 1.0,
                    Some(_) => 1.0 / q,
                };
                (x, w)
            })
            .collect();
        let total: f64 = weights.iter().map(|w| w.1).sum();
        weights.into_iter().map(|(x, w)| (x, w / total)).collect()
    }

    fn walk(&self, start: u32, params: &Node2VecParams, rng: &mut seed::Rng) -> Vec<u32> {
        let mut walk = Vec::with_capacity(params.walk_length);
        walk.push(start);
        let mut prev = None;
        while walk.len() < params.walk_length {
            let cur = *walk.last().expect("non-empty walk");
            let probs = self.transition_probs(prev, cur, params.p, params.q);
            if probs.is_empty() {
                break;
            }
            let mut r: f64 = rng.random();
            let mut next = probs[probs.len() - 1].0;
            for &(x, pr) in &probs {
                if r < pr {
                    next = x;
                    break;
                }
                r -= pr;
            }
            prev = Some(cur);
            walk.push(next);
        }
        walk
    }
}

/// `walks_per_node` walks from every non-isolated node. Each round visits the
/// start nodes in a seeded random order; each walk draws from its own
/// derived seed, so the corpus does not depend on thread scheduling.
pub fn generate_walks(adj: &Adjacency, params: &Node2VecParams) -> Vec<Vec<u32>> {
    let starts: Vec<u32> = (0..adj.len() as u32)
        .filter(|&v| !adj.neighbors(v).is_empty())
        .collect();
    let mut corpus = Vec::with_capacity(starts.len() * params.walks_per_node);
    for round in 0..params.walks_per_node {
        let mut order = starts.clone();
        order.shuffle(&mut seed::rng(seed::derive_indexed(
            params.seed,
            "walk-order",
            round as u64,
        )));
        let walks: Vec<Vec<u32>> = order
            .par_iter()
            .map(|&v| {
                let s = seed::derive_indexed(params.seed, &format!("walk/{round}"), v as u64);
                adj.walk(v, params, &mut seed::rng(s))
            })
            .collect();
        corpus.extend(walks);
    }
    corpus
}
