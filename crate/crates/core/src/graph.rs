//! Weighted undirected graph, edge-list ingestion and summary statistics.
//!
//! Self-loop convention: a self-loop of weight `x` adds `x` once to the node
//! weight `w_i` and `x` once to the total weight `w`. Every other link of
//! weight `x` adds `x` to both endpoint weights and `x` to `w`, so
//! `sum_i w_i = 2w - sum(self-loops)`.

use std::collections::{HashMap, VecDeque};
use std::io::{BufRead, BufReader, Read, Write};

use flate2::read::GzDecoder;
use serde::Serialize;

use crate::error::{Error, Result};

/// Bijection between the original node labels and dense ids `0..n`.
///
/// Dense ids follow the sorted order of the labels (numeric order when every
/// label is an integer), so the ids do not depend on the order of the input.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NodeLabelMap {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl NodeLabelMap {
    /// Builds the map from an arbitrary collection of labels (duplicates allowed).
    pub fn from_labels<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        labels.sort_unstable();
        labels.dedup();
        let numeric: Option<Vec<i128>> = labels.iter().map(|l| l.parse::<i128>().ok()).collect();
        if let Some(values) = numeric {
            let mut keyed: Vec<(i128, String)> = values.into_iter().zip(labels).collect();
            keyed.sort();
            labels = keyed.into_iter().map(|(_, l)| l).collect();
        }
        let index = labels.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
        NodeLabelMap { labels, index }
    }

    /// Labels `0..n` written as decimal integers.
    pub fn identity(n: usize) -> Self {
        Self::from_labels((0..n).map(|i| i.to_string()))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, id: usize) -> &str {
        &self.labels[id]
    }

    pub fn id(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// Immutable weighted undirected graph.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    /// Per-node `(neighbor, weight)` sorted by neighbor; a self-loop appears once.
    adjacency: Vec<Vec<(usize, f64)>>,
    node_weight: Vec<f64>,
    link_count: usize,
    total_weight: f64,
    min_link_weight: f64,
    labels: NodeLabelMap,
}

impl Graph {
    /// Builds a graph over the nodes of `labels` from `(src, dst, weight)` triples.
    ///
    /// Duplicate links accumulate their weights. The graph may have no links.
    pub fn from_links<I>(labels: NodeLabelMap, links: I) -> Result<Graph>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let n = labels.len();
        let mut canonical: Vec<(usize, usize, f64)> = Vec::new();
        for (a, b, w) in links {
            if a >= n || b >= n {
                return Err(Error::domain(format!("link ({a}, {b}) references a node outside 0..{n}")));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::domain(format!("link ({a}, {b}) has non-positive weight {w}")));
            }
            canonical.push((a.min(b), a.max(b), w));
        }
        // Duplicates are summed in a canonical order so the result is independent
        // of the input order even for non-integer weights.
        canonical.sort_unstable_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)).then(x.2.total_cmp(&y.2)));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(canonical.len());
        for (a, b, w) in canonical {
            match merged.last_mut() {
                Some(last) if last.0 == a && last.1 == b => last.2 += w,
                _ => merged.push((a, b, w)),
            }
        }

        let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut total_weight = 0.0;
        let mut min_link_weight = f64::INFINITY;
        for &(a, b, w) in &merged {
            adjacency[a].push((b, w));
            if a != b {
                adjacency[b].push((a, w));
            }
            total_weight += w;
            min_link_weight = min_link_weight.min(w);
        }
        for list in &mut adjacency {
            list.sort_unstable_by_key(|&(j, _)| j);
        }
        let node_weight = adjacency.iter().map(|list| list.iter().map(|&(_, w)| w).sum()).collect();
        if merged.is_empty() {
            min_link_weight = 0.0;
        }

        Ok(Graph {
            adjacency,
            node_weight,
            link_count: merged.len(),
            total_weight,
            min_link_weight,
            labels,
        })
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    /// Number of distinct undirected links, self-loops included.
    pub fn link_count(&self) -> usize {
        self.link_count
    }

    /// `w`: each distinct link counted once.
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    /// Minimal link weight, `0` for a graph without links.
    pub fn min_link_weight(&self) -> f64 {
        self.min_link_weight
    }

    pub fn node_weight(&self, node: usize) -> f64 {
        self.node_weight[node]
    }

    pub fn node_weights(&self) -> &[f64] {
        &self.node_weight
    }

    pub fn neighbors(&self, node: usize) -> &[(usize, f64)] {
        &self.adjacency[node]
    }

    /// Weight of the self-loop on `node`, `0` when absent.
    pub fn self_loop(&self, node: usize) -> f64 {
        let list = &self.adjacency[node];
        list.binary_search_by_key(&node, |&(j, _)| j).map(|pos| list[pos].1).unwrap_or(0.0)
    }

    pub fn labels(&self) -> &NodeLabelMap {
        &self.labels
    }

    /// Distinct links as `(i, j, w)` with `i <= j`, ordered by `(i, j)`.
    pub fn links(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, list)| list.iter().filter(move |&&(j, _)| j >= i).map(move |&(j, w)| (i, j, w)))
    }
}

/// Parses a whitespace-separated `src dst [weight]` edge list.
///
/// Lines starting with `#` are comments and a missing weight means `1.0`.
/// Gzip input is detected by its magic bytes. When `directed_as_undirected`
/// is set, the arcs `a b` and `b a` denote the same link and the heavier
/// direction gives its weight; otherwise every line accumulates.
pub fn parse_edge_list<R: Read>(input: R, directed_as_undirected: bool) -> Result<Graph> {
    let mut reader = BufReader::new(input);
    let gzip = {
        let head = reader.fill_buf()?;
        head.len() >= 2 && head[0] == 0x1f && head[1] == 0x8b
    };
    if gzip {
        parse_lines(BufReader::new(GzDecoder::new(reader)), directed_as_undirected)
    } else {
        parse_lines(reader, directed_as_undirected)
    }
}

fn parse_lines<R: BufRead>(reader: R, directed_as_undirected: bool) -> Result<Graph> {
    let mut raw: Vec<(String, String, f64)> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        if tokens.len() < 2 || tokens.len() > 3 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected `src dst [weight]`, got {trimmed:?}"),
            });
        }
        let weight = match tokens.get(2) {
            Some(tok) => tok.parse::<f64>().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("invalid weight {tok:?}"),
            })?,
            None => 1.0,
        };
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::domain(format!("line {lineno}: link weight must be positive, got {weight}")));
        }
        raw.push((tokens[0].to_string(), tokens[1].to_string(), weight));
    }
    if raw.is_empty() {
        return Err(Error::domain("empty graph: the input has no links"));
    }

    let labels = NodeLabelMap::from_labels(raw.iter().flat_map(|(a, b, _)| [a.clone(), b.clone()]));
    let arcs = raw.into_iter().map(|(a, b, w)| {
        // Both labels were inserted above.
        (labels.id(&a).unwrap(), labels.id(&b).unwrap(), w)
    });

    if directed_as_undirected {
        let mut directed: HashMap<(usize, usize), f64> = HashMap::new();
        for (a, b, w) in arcs {
            *directed.entry((a, b)).or_insert(0.0) += w;
        }
        let mut undirected: HashMap<(usize, usize), f64> = HashMap::new();
        for ((a, b), w) in directed {
            let slot = undirected.entry((a.min(b), a.max(b))).or_insert(0.0);
            *slot = slot.max(w);
        }
        let links: Vec<_> = undirected.into_iter().map(|((a, b), w)| (a, b, w)).collect();
        Graph::from_links(labels, links)
    } else {
        let links: Vec<_> = arcs.collect();
        Graph::from_links(labels, links)
    }
}

/// Writes `src dst weight` lines using the original labels, one per distinct link.
///
/// Weights use the shortest representation that parses back to the same value.
pub fn write_edge_list<W: Write>(graph: &Graph, mut out: W) -> Result<()> {
    for (i, j, w) in graph.links() {
        writeln!(out, "{} {} {}", graph.labels.label(i), graph.labels.label(j), w)?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Quantiles {
    pub min: f64,
    pub p25: f64,
    pub median: f64,
    pub p75: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GraphStats {
    pub nodes: usize,
    pub links: usize,
    pub total_weight: f64,
    pub min_link_weight: f64,
    pub degree_quantiles: Quantiles,
    pub components: usize,
}

/// Linearly interpolated quantile of a sorted sample.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn graph_stats(graph: &Graph) -> GraphStats {
    let mut weights = graph.node_weight.clone();
    weights.sort_by(f64::total_cmp);
    GraphStats {
        nodes: graph.node_count(),
        links: graph.link_count(),
        total_weight: graph.total_weight(),
        min_link_weight: graph.min_link_weight(),
        degree_quantiles: Quantiles {
            min: quantile(&weights, 0.0),
            p25: quantile(&weights, 0.25),
            median: quantile(&weights, 0.5),
            p75: quantile(&weights, 0.75),
            max: quantile(&weights, 1.0),
        },
        components: component_count(graph),
    }
}

/// Connected components by breadth-first traversal.
pub fn component_count(graph: &Graph) -> usize {
    let n = graph.node_count();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    let mut count = 0;
    for start in 0..n {
        if seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            for &(v, _) in graph.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Graph> {
        parse_edge_list(text.as_bytes(), false)
    }

    #[test]
    fn path_accumulates_node_weights() {
        let g = parse("0 1\n1 2\n").unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.link_count(), 2);
        assert_eq!(g.total_weight(), 2.0);
        assert_eq!(g.node_weights(), &[1.0, 2.0, 1.0]);
    }

    #[test]
    fn duplicate_links_accumulate() {
        let g = parse("a b 2.5\nb a 2.5\n").unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.link_count(), 1);
        assert_eq!(g.total_weight(), 5.0);
        assert_eq!(g.neighbors(0), &[(1, 5.0)]);
    }

    #[test]
    fn reciprocal_arcs_collapse_when_directed() {
        let g = parse_edge_list("a b 2.5\nb a 2.5\nb c 1\n".as_bytes(), true).unwrap();
        assert_eq!(g.link_count(), 2);
        assert_eq!(g.total_weight(), 3.5);
    }

    #[test]
    fn rejects_bad_weights_and_lines() {
        assert!(matches!(parse("0 1 -3\n"), Err(Error::Domain(_))));
        assert!(matches!(parse("0 1 0\n"), Err(Error::Domain(_))));
        match parse("0 1\n# ok\n0 1 2 3\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse("0 1 x\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse("# nothing\n\n"), Err(Error::Domain(_))));
    }

    #[test]
    fn self_loop_counts_once() {
        let g = parse("x x 4\n").unwrap();
        let stats = graph_stats(&g);
        assert_eq!((stats.nodes, stats.links), (1, 1));
        assert_eq!(stats.total_weight, 4.0);
        assert_eq!(stats.min_link_weight, 4.0);
        assert_eq!(g.node_weight(0), 4.0);
        assert_eq!(g.self_loop(0), 4.0);
    }

    #[test]
    fn two_triangles_stats() {
        let g = parse("0 1\n1 2\n2 0\n3 4\n4 5\n5 3\n").unwrap();
        let stats = graph_stats(&g);
        assert_eq!((stats.nodes, stats.links, stats.components), (6, 6, 2));
        assert_eq!(stats.total_weight, 6.0);
    }

    #[test]
    fn path_stats() {
        let stats = graph_stats(&parse("a b\nb c\n").unwrap());
        assert_eq!(stats.components, 1);
        assert_eq!(stats.min_link_weight, 1.0);
        assert_eq!(stats.degree_quantiles.median, 1.0);
        assert_eq!(stats.degree_quantiles.max, 2.0);
    }

    #[test]
    fn numeric_labels_sort_numerically() {
        let g = parse("10 9\n9 2\n").unwrap();
        assert_eq!(g.labels().labels(), &["2", "9", "10"]);
    }

    #[test]
    fn gzip_is_detected() {
        use flate2::write::GzEncoder;
        let mut enc = GzEncoder::new(Vec::new(), flate2::Compression::default());
        enc.write_all(b"0 1\n1 2 3\n").unwrap();
        let bytes = enc.finish().unwrap();
        let g = parse_edge_list(bytes.as_slice(), false).unwrap();
        assert_eq!(g.total_weight(), 4.0);
    }

    #[test]
    fn write_then_parse_round_trips() {
        let g = parse("b a 0.1\nc a 0.2\na a 1.5\nc b 7\n").unwrap();
        let mut out = Vec::new();
        write_edge_list(&g, &mut out).unwrap();
        let again = parse_edge_list(out.as_slice(), false).unwrap();
        assert_eq!(g, again);
    }
}
