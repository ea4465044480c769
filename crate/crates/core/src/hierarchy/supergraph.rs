use crate::error::{Error, Result};
use crate::graph::Graph;

/// Graph of super-nodes processed by one agglomeration pass.
///
/// Each super-node carries its accumulated weight (the sum of the weights of
/// the original nodes it covers) and its internal weight, recorded as a
/// self-loop. The total weight `w` of the original graph is preserved.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperGraph {
    node_weight: Vec<f64>,
    self_weight: Vec<f64>,
    /// Links between distinct super-nodes, sorted by neighbor.
    adjacency: Vec<Vec<(usize, f64)>>,
    total_weight: f64,
}

impl SuperGraph {
    pub fn from_graph(graph: &Graph) -> SuperGraph {
        let n = graph.node_count();
        let mut self_weight = vec![0.0; n];
        let adjacency = (0..n)
            .map(|i| {
                graph
                    .neighbors(i)
                    .iter()
                    .filter(|&&(j, w)| {
                        if j == i {
                            self_weight[i] = w;
                        }
                        j != i
                    })
                    .copied()
                    .collect()
            })
            .collect();
        SuperGraph {
            node_weight: graph.node_weights().to_vec(),
            self_weight,
            adjacency,
            total_weight: graph.total_weight(),
        }
    }

    /// Builds a super-node graph from explicit parts; `links` lists each
    /// undirected link between distinct super-nodes once.
    pub fn from_parts(
        node_weight: Vec<f64>,
        self_weight: Vec<f64>,
        links: &[(usize, usize, f64)],
        total_weight: f64,
    ) -> Result<SuperGraph> {
        let n = node_weight.len();
        if self_weight.len() != n {
            return Err(Error::domain("node and self-loop weight lengths differ"));
        }
        let mut canonical = Vec::with_capacity(links.len());
        for &(a, b, w) in links {
            if a >= n || b >= n || a == b || !(w > 0.0) {
                return Err(Error::domain(format!("invalid super-node link ({a}, {b}, {w})")));
            }
            canonical.push((a.min(b), a.max(b), w));
        }
        Ok(SuperGraph {
            adjacency: accumulate_links(n, canonical),
            node_weight,
            self_weight,
            total_weight,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_weight.len()
    }

    pub fn node_weight(&self, node: usize) -> f64 {
        self.node_weight[node]
    }

    pub fn node_weights(&self) -> &[f64] {
        &self.node_weight
    }

    /// Internal weight of the super-node (its self-loop).
    pub fn self_weight(&self, node: usize) -> f64 {
        self.self_weight[node]
    }

    pub fn neighbors(&self, node: usize) -> &[(usize, f64)] {
        &self.adjacency[node]
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn link_weight(&self, a: usize, b: usize) -> f64 {
        let list = &self.adjacency[a];
        list.binary_search_by_key(&b, |&(j, _)| j).map(|pos| list[pos].1).unwrap_or(0.0)
    }

    pub fn has_links(&self) -> bool {
        self.adjacency.iter().any(|l| !l.is_empty())
    }
}

/// Sums canonical `(a, b, w)` triples (`a < b`) per pair in a fixed order and
/// mirrors them, so both directions hold the bit-identical weight.
fn accumulate_links(n: usize, mut canonical: Vec<(usize, usize, f64)>) -> Vec<Vec<(usize, f64)>> {
    canonical.sort_unstable_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)).then(x.2.total_cmp(&y.2)));
    let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut iter = canonical.into_iter().peekable();
    while let Some((a, b, mut w)) = iter.next() {
        while let Some(&(na, nb, nw)) = iter.peek() {
            if na != a || nb != b {
                break;
            }
            w += nw;
            iter.next();
        }
        adjacency[a].push((b, w));
        adjacency[b].push((a, w));
    }
    for list in &mut adjacency {
        list.sort_unstable_by_key(|&(j, _)| j);
    }
    adjacency
}

/// Collapses each group of super-nodes into one super-node.
///
/// `groups` must partition `0..graph.node_count()`. Link weights between
/// groups accumulate and links inside a group become its self-loop.
pub fn contract(graph: &SuperGraph, groups: &[Vec<usize>]) -> Result<SuperGraph> {
    let n = graph.node_count();
    let mut group_of = vec![usize::MAX; n];
    for (g, members) in groups.iter().enumerate() {
        for &node in members {
            if node >= n || group_of[node] != usize::MAX {
                return Err(Error::domain(format!("super-node {node} is missing or grouped twice")));
            }
            group_of[node] = g;
        }
    }
    if group_of.contains(&usize::MAX) {
        return Err(Error::domain("groups do not cover every super-node"));
    }

    let k = groups.len();
    let mut node_weight = vec![0.0; k];
    let mut self_weight = vec![0.0; k];
    for (g, members) in groups.iter().enumerate() {
        for &node in members {
            node_weight[g] += graph.node_weight[node];
            self_weight[g] += graph.self_weight[node];
        }
    }
    let mut inter = Vec::new();
    for (a, list) in graph.adjacency.iter().enumerate() {
        for &(b, w) in list.iter().filter(|&&(b, _)| b > a) {
            let (ga, gb) = (group_of[a], group_of[b]);
            if ga == gb {
                self_weight[ga] += w;
            } else {
                inter.push((ga.min(gb), ga.max(gb), w));
            }
        }
    }
    Ok(SuperGraph {
        adjacency: accumulate_links(k, inter),
        node_weight,
        self_weight,
        total_weight: graph.total_weight,
    })
}
