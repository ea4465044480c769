//! Modularity-family scalars: generalized modularity, merge gain, the optimal
//! resolution estimate and the upper bound of the resolution schedule.

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Compensated (Neumaier) summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = KahanSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// A non-overlapping assignment of every node to one cluster, with the
/// per-cluster weight `sum_{i in c} w_i` and internal link weight.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    cluster_of: Vec<usize>,
    clusters: Vec<Vec<usize>>,
    weight: Vec<f64>,
    internal_weight: Vec<f64>,
}

impl Partition {
    /// Builds a partition from a per-node cluster label. Labels are renumbered
    /// densely in order of first appearance.
    pub fn new(graph: &Graph, assignment: &[usize]) -> Result<Partition> {
        if assignment.len() != graph.node_count() {
            return Err(Error::domain(format!(
                "partition covers {} nodes but the graph has {}",
                assignment.len(),
                graph.node_count()
            )));
        }
        let mut remap = std::collections::HashMap::new();
        let mut clusters: Vec<Vec<usize>> = Vec::new();
        let mut cluster_of = Vec::with_capacity(assignment.len());
        for (node, &label) in assignment.iter().enumerate() {
            let c = *remap.entry(label).or_insert_with(|| {
                clusters.push(Vec::new());
                clusters.len() - 1
            });
            clusters[c].push(node);
            cluster_of.push(c);
        }
        let mut weight = vec![0.0; clusters.len()];
        for (node, &c) in cluster_of.iter().enumerate() {
            weight[c] += graph.node_weight(node);
        }
        let mut internal_weight = vec![0.0; clusters.len()];
        for (i, j, w) in graph.links() {
            if cluster_of[i] == cluster_of[j] {
                internal_weight[cluster_of[i]] += w;
            }
        }
        Ok(Partition { cluster_of, clusters, weight, internal_weight })
    }

    /// Builds a partition from explicit member lists.
    pub fn from_clusters(graph: &Graph, clusters: &[Vec<usize>]) -> Result<Partition> {
        let n = graph.node_count();
        let mut assignment = vec![usize::MAX; n];
        for (c, members) in clusters.iter().enumerate() {
            for &node in members {
                if node >= n || assignment[node] != usize::MAX {
                    return Err(Error::domain(format!("node {node} is missing or assigned twice")));
                }
                assignment[node] = c;
            }
        }
        if assignment.contains(&usize::MAX) {
            return Err(Error::domain("partition does not cover every node"));
        }
        Partition::new(graph, &assignment)
    }

    pub fn singletons(graph: &Graph) -> Partition {
        let assignment: Vec<usize> = (0..graph.node_count()).collect();
        Partition::new(graph, &assignment).expect("singletons cover the graph")
    }

    pub fn node_count(&self) -> usize {
        self.cluster_of.len()
    }

    pub fn cluster_count(&self) -> usize {
        self.clusters.len()
    }

    pub fn cluster_of(&self, node: usize) -> usize {
        self.cluster_of[node]
    }

    pub fn members(&self, cluster: usize) -> &[usize] {
        &self.clusters[cluster]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weight
    }

    pub fn internal_weights(&self) -> &[f64] {
        &self.internal_weight
    }

    /// Total internal weight of all clusters.
    pub fn total_internal_weight(&self) -> f64 {
        self.internal_weight.iter().copied().collect::<KahanSum>().total()
    }
}

/// Generalized modularity of `partition` at resolution `gamma`:
/// `sum_c [ win_c / w - gamma * (wc / 2w)^2 ]`.
pub fn modularity(graph: &Graph, partition: &Partition, gamma: f64) -> Result<f64> {
    if partition.node_count() != graph.node_count() {
        return Err(Error::domain("partition and graph sizes differ"));
    }
    if !(gamma > 0.0) {
        return Err(Error::domain(format!("resolution must be positive, got {gamma}")));
    }
    let w = graph.total_weight();
    if !(w > 0.0) {
        return Err(Error::domain("modularity is undefined for a graph without links"));
    }
    let mut acc = KahanSum::new();
    for (&wc, &win) in partition.weight.iter().zip(&partition.internal_weight) {
        let share = wc / (2.0 * w);
        acc.add(win / w - gamma * share * share);
    }
    Ok(acc.total())
}

/// Change of generalized modularity caused by merging two disjoint groups
/// joined by `w_ij` total link weight, with group weights `w_i`, `w_j`.
///
/// Equals `Q(merged) - Q(separate)` exactly: `(2 w_ij - gamma w_i w_j / w) / 2w`.
pub fn modularity_gain(w_ij: f64, w_i: f64, w_j: f64, w: f64, gamma: f64) -> f64 {
    (2.0 * w_ij - gamma * (w_i * w_j) / w) / (2.0 * w)
}

/// Optimal resolution from the intra/inter-cluster link probabilities.
///
/// Returns `p_in` itself when the two probabilities coincide (within `1e-9`
/// relative), the limit of `(x - y) / (ln x - ln y)`.
pub fn resolution_from_probabilities(p_in: f64, p_out: f64) -> Result<f64> {
    if !(p_out > 0.0) || !p_out.is_finite() {
        return Err(Error::DegeneratePartition(format!("inter-cluster link probability is {p_out}")));
    }
    if !(p_in > 0.0) || !p_in.is_finite() {
        return Err(Error::DegeneratePartition(format!("intra-cluster link probability is {p_in}")));
    }
    if (p_in - p_out).abs() <= 1e-9 * p_in.max(p_out) {
        return Ok(p_in);
    }
    Ok((p_in - p_out) / (p_in.ln() - p_out.ln()))
}

/// Optimal resolution from the graph weight `w`, the total internal weight and
/// the sum of squared cluster weights.
pub fn optimal_gamma_from_totals(w: f64, internal: f64, sum_sq_weights: f64) -> Result<f64> {
    let expected = sum_sq_weights / (2.0 * w);
    if !(internal > 0.0) {
        return Err(Error::DegeneratePartition("no intra-cluster links".into()));
    }
    let outside = 2.0 * w - expected;
    if !(outside > 0.0) {
        return Err(Error::DegeneratePartition("null model places all weight inside clusters".into()));
    }
    let p_in = 2.0 * internal / expected;
    let p_out = (2.0 * w - 2.0 * internal) / outside;
    resolution_from_probabilities(p_in, p_out)
}

pub fn optimal_gamma(graph: &Graph, partition: &Partition) -> Result<f64> {
    if partition.node_count() != graph.node_count() {
        return Err(Error::domain("partition and graph sizes differ"));
    }
    if partition.cluster_count() < 2 {
        return Err(Error::DegeneratePartition("fewer than two clusters".into()));
    }
    let sum_sq = partition.weight.iter().map(|&x| x * x).collect::<KahanSum>().total();
    optimal_gamma_from_totals(graph.total_weight(), partition.total_internal_weight(), sum_sq)
}

/// Upper bound of the resolution: `cbrt(w / w_min) / 4`, never below `1`.
pub fn gamma_max_from(w: f64, min_link_weight: f64) -> f64 {
    if !(min_link_weight > 0.0) || !(w > 0.0) {
        return 1.0;
    }
    ((w / min_link_weight).cbrt() / 4.0).max(1.0)
}

pub fn gamma_max(graph: &Graph) -> f64 {
    gamma_max_from(graph.total_weight(), graph.min_link_weight())
}
