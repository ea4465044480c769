//! Embedding dimensions formed from salient clusters and the node values
//! `v_ij = w_{i,D_j} / w_i`, where `w_{i,D_j}` is the weight of the links of
//! node `i` towards the members of dimension `D_j`.
//!
//! Export formats (values printed with 6 decimals):
//!
//! * `w2v`: header `n d`, then `label v_1 ... v_d` per node, space-separated.
//! * `tsv`: no header, `label\tv_1\t...\tv_d` per node.
//!
//! Nodes are written in dense-id order. The dimension map sidecar has one
//! line per dimension: `dim\tcluster_ids\tlevels\tweight\tmember_count\tkind`
//! with comma-separated id/level lists and `kind` either `cluster` or `outlier`.

use std::cmp::Ordering;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeLabelMap};
use crate::hierarchy::{Cluster, ClusterId, Hierarchy};
use crate::salient::SalientSet;

#[derive(Clone, Debug, PartialEq)]
pub struct Dimension {
    pub clusters: Vec<ClusterId>,
    /// Union of the member sets of `clusters`, sorted.
    pub members: Vec<usize>,
    /// Sum of the node weights of `members`.
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingSpace {
    dimensions: Vec<Dimension>,
    outlier: Option<usize>,
    node_count: usize,
    /// Sparse rows: `(dimension, value)` sorted by dimension.
    rows: Vec<Vec<(usize, f64)>>,
    filled: bool,
}

impl EmbeddingSpace {
    pub fn dimensions(&self) -> &[Dimension] {
        &self.dimensions
    }

    pub fn dimension_count(&self) -> usize {
        self.dimensions.len()
    }

    /// Index of the outlier dimension, always the last one when present.
    pub fn outlier_index(&self) -> Option<usize> {
        self.outlier
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn is_filled(&self) -> bool {
        self.filled
    }

    pub fn sparse_row(&self, node: usize) -> &[(usize, f64)] {
        &self.rows[node]
    }

    pub fn row(&self, node: usize) -> Vec<f64> {
        let mut dense = vec![0.0; self.dimensions.len()];
        for &(j, v) in &self.rows[node] {
            dense[j] = v;
        }
        dense
    }

    pub fn value(&self, node: usize, dim: usize) -> f64 {
        let row = &self.rows[node];
        row.binary_search_by_key(&dim, |&(j, _)| j).map(|p| row[p].1).unwrap_or(0.0)
    }

    /// Dense `n x d` matrix, row-major.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.node_count).map(|i| self.row(i)).collect()
    }
}

/// Key of the normative dimension order: level descending, weight
/// descending, cluster id.
fn dimension_order(a: &Cluster, b: &Cluster) -> Ordering {
    b.level.cmp(&a.level).then(b.weight.total_cmp(&a.weight)).then(a.id.cmp(&b.id))
}

fn by_density(a: &Cluster, b: &Cluster) -> Ordering {
    b.density.total_cmp(&a.density).then(a.id.cmp(&b.id))
}

fn by_weight(a: &Cluster, b: &Cluster) -> Ordering {
    b.weight.total_cmp(&a.weight).then(a.id.cmp(&b.id))
}

fn make_dimension(h: &Hierarchy, graph: &Graph, clusters: Vec<ClusterId>) -> Dimension {
    let mut members: Vec<usize> = clusters.iter().flat_map(|&c| h.members(c).iter().copied()).collect();
    members.sort_unstable();
    members.dedup();
    let weight = members.iter().map(|&i| graph.node_weight(i)).sum();
    Dimension { clusters, members, weight }
}

/// Chooses the dimensions; `d = 0` makes every salient cluster a dimension.
///
/// With `0 < d`, all `t` top-level clusters are kept when `t <= d` and the
/// remaining slots take the densest other salient clusters. When `t > d`,
/// top-level clusters lighter than `sqrt(w)` and, if still too many, the
/// lightest of the rest are grouped into a final outlier dimension; free
/// slots take the densest other salient clusters of weight at least `sqrt(w)`.
pub fn form_dimensions(h: &Hierarchy, salient: &SalientSet, d: usize, graph: &Graph) -> Result<EmbeddingSpace> {
    if h.node_count() != graph.node_count() {
        return Err(Error::domain("hierarchy and graph sizes differ"));
    }
    let s = salient.len();
    if d > s {
        return Err(Error::domain(format!(
            "request of {d} dimensions exceeds the {s} salient clusters; rerun with a smaller d or d=0"
        )));
    }
    let clusters = |ids: &[ClusterId]| ids.iter().map(|&id| h.cluster(id)).collect::<Vec<_>>();
    let salient_clusters = clusters(salient.clusters());
    let (roots, nested): (Vec<&Cluster>, Vec<&Cluster>) =
        salient_clusters.iter().partition(|c| c.ancestors.is_empty());
    let t = roots.len();

    let mut chosen: Vec<&Cluster>;
    let mut outlier: Vec<&Cluster> = Vec::new();
    if d == 0 {
        chosen = salient_clusters.clone();
    } else if t <= d {
        let mut rest = nested.clone();
        rest.sort_by(|a, b| by_density(a, b));
        chosen = roots.clone();
        chosen.extend(rest.into_iter().take(d - t));
    } else {
        let min_weight = graph.total_weight().sqrt();
        let (mut heavy, light): (Vec<&Cluster>, Vec<&Cluster>) = roots.iter().partition(|c| c.weight >= min_weight);
        heavy.sort_by(|a, b| by_weight(a, b));
        let keep = heavy.len().min(d - 1);
        outlier.extend(light);
        outlier.extend(heavy.drain(keep..));
        chosen = heavy;
        let mut rest: Vec<&Cluster> = nested.iter().copied().filter(|c| c.weight >= min_weight).collect();
        rest.sort_by(|a, b| by_density(a, b));
        chosen.extend(rest.into_iter().take(d - 1 - keep));
    }
    chosen.sort_by(|a, b| dimension_order(a, b));
    outlier.sort_by(|a, b| by_weight(a, b));

    let mut dimensions: Vec<Dimension> =
        chosen.iter().map(|c| make_dimension(h, graph, vec![c.id])).collect();
    let outlier_index = if outlier.is_empty() {
        None
    } else {
        dimensions.push(make_dimension(h, graph, outlier.iter().map(|c| c.id).collect()));
        Some(dimensions.len() - 1)
    };
    Ok(EmbeddingSpace {
        dimensions,
        outlier: outlier_index,
        node_count: graph.node_count(),
        rows: vec![Vec::new(); graph.node_count()],
        filled: false,
    })
}

/// Graphs with fewer links are filled on the calling thread.
const PARALLEL_LINKS: usize = 4096;

/// Weights of every node towards the members of `dim`, as `(node, w_{i,D})`
/// sorted by node, accumulated in one scan over the members' links.
fn scan_dimension(graph: &Graph, dim: &Dimension, acc: &mut Vec<f64>, touched: &mut Vec<usize>) -> Vec<(usize, f64)> {
    for &k in &dim.members {
        for &(i, w) in graph.neighbors(k) {
            if acc[i] == 0.0 {
                touched.push(i);
            }
            acc[i] += w;
        }
    }
    touched.sort_unstable();
    let column = touched.iter().map(|&i| (i, std::mem::replace(&mut acc[i], 0.0))).collect();
    touched.clear();
    column
}

/// Fills the values `w_{i,D_j} / w_i`; nodes without links get zero rows.
pub fn fill_values(mut space: EmbeddingSpace, graph: &Graph) -> EmbeddingSpace {
    let n = graph.node_count();
    let columns: Vec<Vec<(usize, f64)>> = if graph.link_count() < PARALLEL_LINKS {
        let (mut acc, mut touched) = (vec![0.0; n], Vec::new());
        space.dimensions.iter().map(|dim| scan_dimension(graph, dim, &mut acc, &mut touched)).collect()
    } else {
        space
            .dimensions
            .par_iter()
            .map_init(|| (vec![0.0; n], Vec::new()), |(acc, touched), dim| scan_dimension(graph, dim, acc, touched))
            .collect()
    };
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (j, column) in columns.into_iter().enumerate() {
        for (i, weight) in column {
            let wi = graph.node_weight(i);
            if wi > 0.0 {
                rows[i].push((j, weight / wi));
            }
        }
    }
    space.rows = rows;
    space.filled = true;
    space
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Format {
    Tsv,
    #[default]
    W2v,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tsv" => Ok(Format::Tsv),
            "w2v" => Ok(Format::W2v),
            other => Err(Error::domain(format!("unknown format {other:?}, expected tsv or w2v"))),
        }
    }
}

pub fn export_embeddings<W: Write>(space: &EmbeddingSpace, labels: &NodeLabelMap, format: Format, mut out: W) -> Result<()> {
    if !space.filled {
        return Err(Error::domain("embedding values are not filled"));
    }
    if labels.len() != space.node_count {
        return Err(Error::domain("label map and embedding sizes differ"));
    }
    let sep = match format {
        Format::W2v => {
            writeln!(out, "{} {}", space.node_count, space.dimension_count())?;
            ' '
        }
        Format::Tsv => '\t',
    };
    let mut line = String::new();
    for i in 0..space.node_count {
        line.clear();
        line.push_str(labels.label(i));
        for v in space.row(i) {
            line.push(sep);
            line.push_str(&format!("{v:.6}"));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Writes the dimension map sidecar.
pub fn write_dimension_map<W: Write>(space: &EmbeddingSpace, h: &Hierarchy, mut out: W) -> Result<()> {
    for (j, dim) in space.dimensions.iter().enumerate() {
        let ids: Vec<String> = dim.clusters.iter().map(|c| c.to_string()).collect();
        let levels: Vec<String> = dim.clusters.iter().map(|&c| h.cluster(c).level.to_string()).collect();
        let kind = if space.outlier == Some(j) { "outlier" } else { "cluster" };
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            j,
            ids.join(","),
            levels.join(","),
            dim.weight,
            dim.members.len(),
            kind
        )?;
    }
    Ok(())
}

/// Embeddings read back from an export.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    pub labels: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

pub fn read_embeddings<R: BufRead>(input: R, format: Format) -> Result<EmbeddingTable> {
    let mut labels = Vec::new();
    let mut values = Vec::new();
    let mut header: Option<(usize, usize)> = None;
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let bad = |message: String| Error::Parse { line: idx + 1, message };
        if line.trim().is_empty() {
            continue;
        }
        let mut fields: Box<dyn Iterator<Item = &str>> = match format {
            Format::W2v => Box::new(line.split_whitespace()),
            Format::Tsv => Box::new(line.split('\t')),
        };
        if format == Format::W2v && header.is_none() {
            let n = fields.next().and_then(|f| f.parse().ok());
            let d = fields.next().and_then(|f| f.parse().ok());
            match (n, d, fields.next()) {
                (Some(n), Some(d), None) => header = Some((n, d)),
                _ => return Err(bad(format!("invalid header {line:?}"))),
            }
            continue;
        }
        let label = fields.next().ok_or_else(|| bad("missing label".into()))?.to_string();
        let row = fields
            .map(|f| f.parse::<f64>().map_err(|_| bad(format!("invalid value {f:?}"))))
            .collect::<Result<Vec<_>>>()?;
        if let Some((_, d)) = header {
            if row.len() != d {
                return Err(bad(format!("expected {d} values, got {}", row.len())));
            }
        }
        labels.push(label);
        values.push(row);
    }
    if let Some((n, _)) = header {
        if n != labels.len() {
            return Err(Error::domain(format!("header announces {n} rows, found {}", labels.len())));
        }
    }
    Ok(EmbeddingTable { labels, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_edge_list;
    use crate::hierarchy::{cluster, ClusterDraft};
    use crate::salient::extract_features;

    const BARBELL: &str = "0 1\n1 2\n0 2\n2 3\n3 4\n4 5\n3 5\n";

    fn flat_hierarchy(weights: &[f64]) -> (Hierarchy, Graph) {
        // One node per root cluster; the graph only provides `w`.
        let n = weights.len();
        let drafts = weights
            .iter()
            .enumerate()
            .map(|(i, &w)| ClusterDraft { members: vec![i], children: vec![], weight: w, internal_weight: 0.0 })
            .collect();
        let h = Hierarchy::from_drafts(n, vec![(1.0, drafts)]).unwrap();
        let total: f64 = weights.iter().sum::<f64>() / 2.0;
        let links = (0..n).map(|i| (i, i, weights[i] / 2.0)).collect::<Vec<_>>();
        // Self-loops of half the cluster weight sum up to `total`.
        let g = Graph::from_links(NodeLabelMap::identity(n), links).unwrap();
        assert_eq!(g.total_weight(), total);
        (h, g)
    }

    fn dim_clusters(space: &EmbeddingSpace) -> Vec<Vec<ClusterId>> {
        space.dimensions().iter().map(|d| d.clusters.clone()).collect()
    }

    #[test]
    fn rag_bag_groups_lightest_roots() {
        let (h, g) = flat_hierarchy(&[10.0, 8.0, 5.0, 2.0, 1.0]);
        let sal = extract_features(&h, 0.6).unwrap();
        let space = form_dimensions(&h, &sal, 3, &g).unwrap();
        assert_eq!(dim_clusters(&space), vec![vec![0], vec![1], vec![2, 3, 4]]);
        assert_eq!(space.outlier_index(), Some(2));
    }

    #[test]
    fn light_roots_become_outliers() {
        let (h, g) = flat_hierarchy(&[50.0, 30.0, 12.0, 5.0, 3.0]);
        // w = 50 here; rescale the check to the rule sqrt(w).
        let sal = extract_features(&h, 0.6).unwrap();
        let space = form_dimensions(&h, &sal, 4, &g).unwrap();
        let root = g.total_weight().sqrt();
        assert!(12.0 >= root && 5.0 < root);
        assert_eq!(dim_clusters(&space), vec![vec![0], vec![1], vec![2], vec![3, 4]]);
    }

    #[test]
    fn light_roots_with_hundred_total_weight() {
        let (h, _) = flat_hierarchy(&[50.0, 30.0, 12.0, 5.0, 3.0]);
        let g = Graph::from_links(NodeLabelMap::identity(5), vec![(0, 1, 100.0)]).unwrap();
        let sal = extract_features(&h, 0.6).unwrap();
        let space = form_dimensions(&h, &sal, 4, &g).unwrap();
        assert_eq!(dim_clusters(&space), vec![vec![0], vec![1], vec![2], vec![3, 4]]);
    }

    #[test]
    fn zero_dims_means_one_per_salient_cluster() {
        let (h, g) = flat_hierarchy(&[4.0, 3.0, 2.0, 1.0]);
        let sal = extract_features(&h, 0.6).unwrap();
        let space = form_dimensions(&h, &sal, 0, &g).unwrap();
        assert_eq!(space.dimension_count(), 4);
        assert!(form_dimensions(&h, &sal, 5, &g).is_err());
    }

    #[test]
    fn barbell_values() {
        let g = parse_edge_list(BARBELL.as_bytes(), false).unwrap();
        let h = cluster(&g, 0);
        let sal = extract_features(&h, 0.6).unwrap();
        let space = fill_values(form_dimensions(&h, &sal, 2, &g).unwrap(), &g);
        assert_eq!(space.dimension_count(), 2);
        assert_eq!(space.row(0), vec![1.0, 0.0]);
        assert_eq!(space.row(2), vec![2.0 / 3.0, 1.0 / 3.0]);
        assert_eq!(space.row(3), vec![1.0 / 3.0, 2.0 / 3.0]);
        assert_eq!(space.row(5), vec![0.0, 1.0]);
    }

    #[test]
    fn fractional_membership() {
        // Node 0 has weight 4: 3 towards {1, 2} and 1 towards {3}.
        let g = parse_edge_list("0 1 2\n0 2 1\n0 3 1\n1 2\n".as_bytes(), false).unwrap();
        let drafts = vec![
            ClusterDraft { members: vec![0, 1, 2], children: vec![], weight: 0.0, internal_weight: 0.0 },
            ClusterDraft { members: vec![3], children: vec![], weight: 0.0, internal_weight: 0.0 },
        ];
        let h = Hierarchy::from_drafts(4, vec![(1.0, drafts)]).unwrap();
        let sal = extract_features(&h, 0.6).unwrap();
        let mut space = form_dimensions(&h, &sal, 0, &g).unwrap();
        space.dimensions[0].members = vec![1, 2];
        let space = fill_values(space, &g);
        assert_eq!(space.row(0), vec![0.75, 0.25]);
    }

    #[test]
    fn w2v_minimal_export() {
        let g = parse_edge_list("A A\n".as_bytes(), false).unwrap();
        let h = cluster(&g, 0);
        let sal = extract_features(&h, 0.6).unwrap();
        let space = fill_values(form_dimensions(&h, &sal, 0, &g).unwrap(), &g);
        let mut out = Vec::new();
        export_embeddings(&space, g.labels(), Format::W2v, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "1 1\nA 1.000000\n");
    }

    #[test]
    fn export_round_trip() {
        let g = parse_edge_list(BARBELL.as_bytes(), false).unwrap();
        let h = cluster(&g, 0);
        let sal = extract_features(&h, 0.6).unwrap();
        let space = fill_values(form_dimensions(&h, &sal, 0, &g).unwrap(), &g);
        for format in [Format::W2v, Format::Tsv] {
            let mut out = Vec::new();
            export_embeddings(&space, g.labels(), format, &mut out).unwrap();
            let table = read_embeddings(out.as_slice(), format).unwrap();
            assert_eq!(table.labels, g.labels().labels());
            for (i, row) in table.values.iter().enumerate() {
                for (a, b) in row.iter().zip(space.row(i)) {
                    assert!((a - b).abs() <= 1e-6);
                }
            }
        }
        let mut tsv = Vec::new();
        export_embeddings(&space, g.labels(), Format::Tsv, &mut tsv).unwrap();
        let text = String::from_utf8(tsv).unwrap();
        assert!(text.contains("2\t0.666667\t0.333333"), "{text}");
    }

    #[test]
    fn unfilled_space_is_not_exported() {
        let g = parse_edge_list(BARBELL.as_bytes(), false).unwrap();
        let h = cluster(&g, 0);
        let sal = extract_features(&h, 0.6).unwrap();
        let space = form_dimensions(&h, &sal, 0, &g).unwrap();
        assert!(export_embeddings(&space, g.labels(), Format::Tsv, Vec::new()).is_err());
    }
}
