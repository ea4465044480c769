//! Fixtures and brute-force oracles shared by the integration tests.
//!
//! Nothing here calls into the library's modularity code: weights, node
//! strengths and modularity are recomputed from the raw link lists.

#![allow(dead_code)]

use clembed::graph::{parse_edge_list, Graph, NodeLabelMap};
use rand::Rng;

pub const KARATE: &[u8] = include_bytes!("../data/karate.txt");
/// Two triangles joined by the link 2-3.
pub const BARBELL: &str = "0 1\n1 2\n0 2\n2 3\n3 4\n4 5\n3 5\n";

pub fn karate() -> Graph {
    parse_edge_list(KARATE, false).unwrap()
}

pub fn barbell() -> Graph {
    parse_edge_list(BARBELL.as_bytes(), false).unwrap()
}

/// Distinct undirected links `(a, b, w)` with `a <= b`.
#[derive(Clone, Debug)]
pub struct RawGraph {
    pub n: usize,
    pub links: Vec<(usize, usize, f64)>,
}

impl RawGraph {
    /// Each pair is linked with probability `p`; each node gets a self-loop
    /// with probability `loops`. At least one link is always present.
    pub fn random<R: Rng>(rng: &mut R, n: usize, p: f64, loops: f64, weighted: bool) -> RawGraph {
        let weight = |rng: &mut R| if weighted { rng.gen_range(0.1..3.0) } else { 1.0 };
        let mut links = Vec::new();
        for a in 0..n {
            if rng.gen_bool(loops) {
                links.push((a, a, weight(rng)));
            }
            for b in a + 1..n {
                if rng.gen_bool(p) {
                    links.push((a, b, weight(rng)));
                }
            }
        }
        if links.is_empty() {
            let a = rng.gen_range(0..n - 1);
            links.push((a, a + 1, weight(rng)));
        }
        RawGraph { n, links }
    }

    pub fn graph(&self) -> Graph {
        Graph::from_links(NodeLabelMap::identity(self.n), self.links.iter().copied()).unwrap()
    }

    pub fn from_graph(g: &Graph) -> RawGraph {
        RawGraph { n: g.node_count(), links: g.links().collect() }
    }

    /// Total link weight, self-loops once.
    pub fn total(&self) -> f64 {
        self.links.iter().map(|l| l.2).sum()
    }

    /// Node strengths with self-loops counted once.
    pub fn strengths(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.n];
        for &(a, b, w) in &self.links {
            s[a] += w;
            if a != b {
                s[b] += w;
            }
        }
        s
    }

    /// Symmetric weight matrix, self-loop weight on the diagonal.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.n]; self.n];
        for &(a, b, w) in &self.links {
            m[a][b] = w;
            m[b][a] = w;
        }
        m
    }

    /// `sum_ij [B_ij - gamma k_i k_j / 2w] delta(c_i, c_j) / 2w`, where
    /// `B` doubles the self-loops so that an internal loop counts like an
    /// internal link.
    pub fn modularity(&self, assignment: &[usize], gamma: f64) -> f64 {
        let w = self.total();
        let k = self.strengths();
        let m = self.matrix();
        let mut q = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                if assignment[i] != assignment[j] {
                    continue;
                }
                let b = if i == j { 2.0 * m[i][i] } else { m[i][j] };
                q += b - gamma * k[i] * k[j] / (2.0 * w);
            }
        }
        q / (2.0 * w)
    }

    /// Maximum modularity over every partition of the nodes.
    pub fn best_modularity(&self, gamma: f64) -> f64 {
        set_partitions(self.n).iter().map(|a| self.modularity(a, gamma)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smallest link weight.
    pub fn min_weight(&self) -> f64 {
        self.links.iter().map(|l| l.2).fold(f64::INFINITY, f64::min)
    }
}

/// All set partitions of `0..n` as restricted growth strings.
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn grow(prefix: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        let next = prefix.iter().max().map_or(0, |m| m + 1);
        for c in 0..=next {
            prefix.push(c);
            grow(prefix, n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    grow(&mut Vec::with_capacity(n), n, &mut out);
    out
}

/// Cluster index of every node.
pub fn assignment(clusters: &[Vec<usize>], n: usize) -> Vec<usize> {
    let mut a = vec![usize::MAX; n];
    for (c, members) in clusters.iter().enumerate() {
        for &m in members {
            a[m] = c;
        }
    }
    assert!(!a.contains(&usize::MAX), "clusters do not cover every node");
    a
}

/// Random partition with at most `k` clusters.
pub fn random_assignment<R: Rng>(rng: &mut R, n: usize, k: usize) -> Vec<usize> {
    (0..n).map(|_| rng.gen_range(0..k)).collect()
}
