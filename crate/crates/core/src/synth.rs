//! Seeded synthetic bipartite graphs for tests, benchmarks and examples.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{DtiGraph, GraphBuilder};
use crate::seed;

/// Erdős–Rényi bipartite graph: every drug–protein pair is an edge with
/// probability `p`. Ids are `d<i>` and `p<j>`; isolated nodes are kept.
pub fn random_bipartite(
    name: &str,
    n_drugs: usize,
    n_proteins: usize,
    p: f64,
    seed_value: u64,
) -> DtiGraph {
    let mut rng = seed::rng(seed::derive(seed_value, "random-bipartite"));
    let mut b = GraphBuilder::new(name);
    for i in 0..n_drugs {
        b.add_drug(format!("d{i}")).expect("valid id");
    }
    for j in 0..n_proteins {
        b.add_protein(format!("p{j}")).expect("valid id");
    }
    for i in 0..n_drugs {
        for j in 0..n_proteins {
            if rng.random_bool(p) {
                b.add_edge(format!("d{i}"), format!("p{j}"))
                    .expect("valid id");
            }
        }
    }
    b.build()
}

/// Planted-block graph: `blocks` groups of drugs and proteins, with edges
/// inside a block drawn with probability `p_in` and across blocks with
/// `p_out`. Ids are prefixed with `prefix` so that graphs built with
/// different prefixes share no nodes; the block of a node is the number
/// after `b` in its id (`<prefix>_b3_d1`).
pub fn planted_blocks(
    prefix: &str,
    blocks: usize,
    drugs_per_block: usize,
    proteins_per_block: usize,
    p_in: f64,
    p_out: f64,
    seed_value: u64,
) -> DtiGraph {
    let mut rng = seed::rng(seed::derive(seed_value, "planted-blocks"));
    let drug = |b: usize, i: usize| format!("{prefix}_b{b}_d{i}");
    let protein = |b: usize, j: usize| format!("{prefix}_b{b}_p{j}");
    let mut g = GraphBuilder::new(prefix);
    for b in 0..blocks {
        for i in 0..drugs_per_block {
            g.add_drug(drug(b, i)).expect("valid id");
        }
        for j in 0..proteins_per_block {
            g.add_protein(protein(b, j)).expect("valid id");
        }
    }
    for bd in 0..blocks {
        for i in 0..drugs_per_block {
            for bp in 0..blocks {
                for j in 0..proteins_per_block {
                    let p = if bd == bp { p_in } else { p_out };
                    if rng.random_bool(p) {
                        g.add_edge(drug(bd, i), protein(bp, j)).expect("valid id");
                    }
                }
            }
        }
    }
    g.build()
}

/// A graph with exactly the requested node, edge and component counts.
///
/// `components - 1` components are single drug–protein edges; the remaining
/// nodes form one connected component built from a random spanning tree plus
/// random extra edges.
pub fn with_statistics(
    name: &str,
    n_drugs: usize,
    n_proteins: usize,
    n_edges: usize,
    components: usize,
    seed_value: u64,
) -> Result<DtiGraph> {
    let small = components.saturating_sub(1);
    let infeasible = |why: &str| {
        Error::Validation(format!(
            "cannot build {n_drugs} drugs, {n_proteins} proteins, {n_edges} edges, {components} components: {why}"
        ))
    };
    if components == 0 || n_drugs <= small || n_proteins <= small {
        return Err(infeasible("too few nodes"));
    }
    let (gd, gp) = (n_drugs - small, n_proteins - small);
    let tree = gd + gp - 1;
    if n_edges < small + tree {
        return Err(infeasible("too few edges to connect the giant component"));
    }
    let extra = n_edges - small - tree;
    if extra > gd * gp - tree {
        return Err(infeasible("too many edges for the giant component"));
    }

    let mut rng = seed::rng(seed::derive(seed_value, "with-statistics"));
    let mut edges: HashSet<(usize, usize)> = HashSet::with_capacity(n_edges);
    // giant component over drugs 0..gd and proteins 0..gp
    let mut order: Vec<(bool, usize)> = (1..gd)
        .map(|i| (true, i))
        .chain((1..gp).map(|j| (false, j)))
        .collect();
    order.shuffle(&mut rng);
    let (mut placed_d, mut placed_p) = (vec![0usize], vec![0usize]);
    edges.insert((0, 0));
    for (is_drug, v) in order {
        if is_drug {
            let p = placed_p[rng.random_range(0..placed_p.len())];
            edges.insert((v, p));
            placed_d.push(v);
        } else {
            let d = placed_d[rng.random_range(0..placed_d.len())];
            edges.insert((d, v));
            placed_p.push(v);
        }
    }
    let target = tree + extra;
    if extra * 2 > gd * gp {
        let mut free: Vec<(usize, usize)> = (0..gd)
            .flat_map(|d| (0..gp).map(move |p| (d, p)))
            .filter(|e| !edges.contains(e))
            .collect();
        free.shuffle(&mut rng);
        edges.extend(free.into_iter().take(extra));
    } else {
        while edges.len() < target {
            edges.insert((rng.random_range(0..gd), rng.random_range(0..gp)));
        }
    }
    for k in 0..small {
        edges.insert((gd + k, gp + k));
    }

    let mut b = GraphBuilder::new(name);
    for i in 0..n_drugs {
        b.add_drug(format!("D{i}"))?;
    }
    for j in 0..n_proteins {
        b.add_protein(format!("T{j}"))?;
    }
    let mut sorted: Vec<_> = edges.into_iter().collect();
    sorted.sort_unstable();
    for (d, p) in sorted {
        b.add_edge(format!("D{d}"), format!("T{p}"))?;
    }
    Ok(b.build())
}
