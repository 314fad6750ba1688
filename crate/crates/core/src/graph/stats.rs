use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{DtiGraph, NodeKind};

/// The network summary reported for each dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub n_drugs: usize,
    pub n_proteins: usize,
    pub n_nodes: usize,
    pub n_edges: usize,
    /// Percentage of the `n(n-1)/2` possible node pairs that are edges.
    pub density_pct: f64,
    pub n_components: usize,
}

impl GraphStats {
    pub const CSV_HEADER: &'static str = "Dataset,Number of drugs,Number of proteins,Total number of nodes,Total number of edges,Density (%),# of connected components";

    /// Density rounded to two decimals, as reported in tables.
    pub fn density_rounded(&self) -> f64 {
        (self.density_pct * 100.0).round() / 100.0
    }

    pub fn csv_row(&self, dataset: &str) -> String {
        format!(
            "{},{},{},{},{},{:.2},{}",
            dataset,
            self.n_drugs,
            self.n_proteins,
            self.n_nodes,
            self.n_edges,
            self.density_pct,
            self.n_components
        )
    }
}

#[derive(Clone, Copy, Debug)]
pub struct StatsOptions {
    /// Count isolated nodes as singleton components.
    pub count_isolated: bool,
}

impl Default for StatsOptions {
    fn default() -> Self {
        StatsOptions {
            count_isolated: true,
        }
    }
}

struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

pub fn compute_stats(g: &DtiGraph) -> GraphStats {
    compute_stats_with(g, StatsOptions::default())
}

pub fn compute_stats_with(g: &DtiGraph, opts: StatsOptions) -> GraphStats {
    let n_nodes = g.n_nodes();
    let n_edges = g.n_edges();
    let pairs = n_nodes as f64 * (n_nodes as f64 - 1.0) / 2.0;
    let density_pct = if pairs > 0.0 {
        100.0 * n_edges as f64 / pairs
    } else {
        0.0
    };

    // Drugs occupy 0..n_drugs, proteins follow.
    let offset = g.n_drugs();
    let mut dsu = DisjointSet::new(n_nodes);
    let mut components = n_nodes;
    for e in g.edges() {
        if dsu.union(e.drug as usize, offset + e.protein as usize) {
            components -= 1;
        }
    }
    if !opts.count_isolated {
        let isolated = (0..g.n_drugs() as u32)
            .filter(|&d| g.degree(NodeKind::Drug, d) == 0)
            .count()
            + (0..g.n_proteins() as u32)
                .filter(|&p| g.degree(NodeKind::Protein, p) == 0)
                .count();
        components -= isolated;
    }
    GraphStats {
        n_drugs: g.n_drugs(),
        n_proteins: g.n_proteins(),
        n_nodes,
        n_edges,
        density_pct,
        n_components: components,
    }
}

/// Node counts keyed by degree for one side of the graph.
pub fn degree_histogram(g: &DtiGraph, side: NodeKind) -> BTreeMap<usize, usize> {
    let n = match side {
        NodeKind::Drug => g.n_drugs(),
        NodeKind::Protein => g.n_proteins(),
    };
    let mut hist = BTreeMap::new();
    for i in 0..n as u32 {
        *hist.entry(g.degree(side, i)).or_insert(0) += 1;
    }
    hist
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphBuilder;
    use proptest::prelude::*;
    use std::collections::VecDeque;

    fn toy() -> DtiGraph {
        DtiGraph::from_pairs("toy", [("d1", "p1"), ("d1", "p2"), ("d2", "p1")]).unwrap()
    }

    fn isolated(n_drugs: usize, n_proteins: usize) -> DtiGraph {
        let mut b = GraphBuilder::new("iso");
        for i in 0..n_drugs {
            b.add_drug(format!("d{i}")).unwrap();
        }
        for i in 0..n_proteins {
            b.add_protein(format!("p{i}")).unwrap();
        }
        b.build()
    }

    /// Independent component count by breadth-first labelling.
    fn bfs_components(g: &DtiGraph) -> usize {
        let nd = g.n_drugs();
        let n = g.n_nodes();
        let mut seen = vec![false; n];
        let mut count = 0;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            let mut queue = VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                let next: Vec<usize> = if v < nd {
                    g.drug_neighbors(v as u32)
                        .iter()
                        .map(|&p| nd + p as usize)
                        .collect()
                } else {
                    g.protein_neighbors((v - nd) as u32)
                        .iter()
                        .map(|&d| d as usize)
                        .collect()
                };
                for w in next {
                    if !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
        }
        count
    }

    #[test]
    fn empty_edge_set() {
        let s = compute_stats(&isolated(2, 1));
        assert_eq!(s.density_pct, 0.0);
        assert_eq!(s.n_components, 3);
        let s = compute_stats_with(
            &isolated(2, 1),
            StatsOptions {
                count_isolated: false,
            },
        );
        assert_eq!(s.n_components, 0);
    }

    #[test]
    fn toy_stats() {
        let s = compute_stats(&toy());
        assert_eq!((s.n_nodes, s.n_edges, s.n_components), (4, 3, 1));
        assert!((s.density_pct - 50.0).abs() < 1e-12);
        assert_eq!(s.csv_row("toy"), "toy,2,2,4,3,50.00,1");
    }

    #[test]
    fn histograms() {
        let star = DtiGraph::from_pairs("s", (1..=5).map(|i| ("d1".to_string(), format!("p{i}"))))
            .unwrap();
        assert_eq!(
            degree_histogram(&star, NodeKind::Drug),
            BTreeMap::from([(5, 1)])
        );
        assert_eq!(
            degree_histogram(&star, NodeKind::Protein),
            BTreeMap::from([(1, 5)])
        );
        assert_eq!(
            degree_histogram(&isolated(4, 0), NodeKind::Drug),
            BTreeMap::from([(0, 4)])
        );
        assert_eq!(
            degree_histogram(&toy(), NodeKind::Drug),
            BTreeMap::from([(1, 1), (2, 1)])
        );
    }

    fn arb_graph() -> impl Strategy<Value = DtiGraph> {
        (1usize..30, 1usize..30)
            .prop_flat_map(|(nd, np)| {
                (
                    Just(nd),
                    Just(np),
                    proptest::collection::vec((0..nd, 0..np), 0..60),
                )
            })
            .prop_map(|(nd, np, edges)| {
                let mut b = GraphBuilder::new("r");
                for i in 0..nd {
                    b.add_drug(format!("d{i}")).unwrap();
                }
                for i in 0..np {
                    b.add_protein(format!("p{i}")).unwrap();
                }
                for (d, p) in edges {
                    b.add_edge(format!("d{d}"), format!("p{p}")).unwrap();
                }
                b.build()
            })
    }

    proptest! {
        #[test]
        fn components_match_bfs(g in arb_graph()) {
            prop_assert_eq!(compute_stats(&g).n_components, bfs_components(&g));
        }

        #[test]
        fn density_matches_pair_count(g in arb_graph()) {
            let s = compute_stats(&g);
            // brute-force enumeration of unordered node pairs
            let n = g.n_nodes();
            let mut pairs = 0u64;
            for i in 0..n {
                for _ in (i + 1)..n {
                    pairs += 1;
                }
            }
            let brute = if pairs == 0 { 0.0 } else { 100.0 * g.n_edges() as f64 / pairs as f64 };
            prop_assert!((s.density_pct - brute).abs() <= 1e-12);
            prop_assert_eq!(s.n_edges, g.edges().len());
            prop_assert_eq!(s.n_nodes, s.n_drugs + s.n_proteins);
        }

        #[test]
        fn histogram_counts_sum_to_side_size(g in arb_graph()) {
            let h = degree_histogram(&g, NodeKind::Protein);
            prop_assert_eq!(h.values().sum::<usize>(), g.n_proteins());
        }
    }
}
