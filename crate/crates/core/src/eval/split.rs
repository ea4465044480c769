use std::collections::HashSet;

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Share of the links held out for testing.
pub const DEFAULT_TEST_FRACTION: f64 = 0.2;
/// Share of all node pairs sampled as negative candidates.
pub const DEFAULT_PAIR_FRACTION: f64 = 0.001;
/// Shuffles tried before giving up on a split that keeps every node linked.
pub const SPLIT_RETRIES: usize = 32;
/// Pair counts up to which negatives are sampled from an explicit enumeration.
const ENUMERATION_LIMIT: u64 = 4_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CandidatePair {
    pub u: usize,
    pub v: usize,
    /// Whether the pair is a held-out link.
    pub relevant: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalSplit {
    pub train: Graph,
    /// Held-out links `(u, v)` with `u < v`, sorted.
    pub held_out: Vec<(usize, usize)>,
    /// Held-out links and sampled non-links, sorted by `(u, v)`; the position
    /// is the pair id used to break ranking ties.
    pub candidates: Vec<CandidatePair>,
    pub seed: u64,
}

impl EvalSplit {
    pub fn relevant_count(&self) -> usize {
        self.candidates.iter().filter(|c| c.relevant).count()
    }
}

/// Removes `floor(test_fraction * m)` links uniformly at random without
/// leaving any node without links, and samples non-linked pairs up to
/// `pair_fraction * n (n - 1) / 2` as negative candidates.
pub fn make_split(graph: &Graph, test_fraction: f64, pair_fraction: f64, seed: u64) -> Result<EvalSplit> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::domain(format!("test fraction must lie in (0, 1), got {test_fraction}")));
    }
    if !(0.0..=1.0).contains(&pair_fraction) {
        return Err(Error::domain(format!("pair fraction must lie in [0, 1], got {pair_fraction}")));
    }
    let links: Vec<(usize, usize, f64)> = graph.links().filter(|&(a, b, _)| a != b).collect();
    if links.len() < 10 {
        return Err(Error::domain(format!("link prediction needs at least 10 links, got {}", links.len())));
    }
    let target = (test_fraction * links.len() as f64).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut degree = vec![0usize; graph.node_count()];
    for &(a, b, _) in &links {
        degree[a] += 1;
        degree[b] += 1;
    }
    let mut held: Option<Vec<usize>> = None;
    let mut order: Vec<usize> = (0..links.len()).collect();
    for _ in 0..SPLIT_RETRIES {
        order.shuffle(&mut rng);
        let mut remaining = degree.clone();
        let mut picked = Vec::with_capacity(target);
        for &idx in &order {
            if picked.len() == target {
                break;
            }
            let (a, b, _) = links[idx];
            if remaining[a] > 1 && remaining[b] > 1 {
                remaining[a] -= 1;
                remaining[b] -= 1;
                picked.push(idx);
            }
        }
        if picked.len() == target {
            held = Some(picked);
            break;
        }
    }
    let Some(mut held) = held else {
        return Err(Error::domain(format!(
            "could not hold out {target} links without isolating a node after {SPLIT_RETRIES} attempts; \
             use a smaller test fraction"
        )));
    };
    held.sort_unstable();

    let mut is_held = vec![false; links.len()];
    for &idx in &held {
        is_held[idx] = true;
    }
    let train_links: Vec<(usize, usize, f64)> = graph
        .links()
        .filter(|&(a, b, _)| a == b)
        .chain(links.iter().enumerate().filter(|(idx, _)| !is_held[*idx]).map(|(_, &l)| l))
        .collect();
    let train = Graph::from_links(graph.labels().clone(), train_links)?;
    let held_out: Vec<(usize, usize)> = held.iter().map(|&idx| (links[idx].0, links[idx].1)).collect();

    let negatives = sample_non_links(graph, links.len() as u64, pair_fraction, &mut rng);
    let mut candidates: Vec<CandidatePair> = held_out
        .iter()
        .map(|&(u, v)| CandidatePair { u, v, relevant: true })
        .chain(negatives.into_iter().map(|(u, v)| CandidatePair { u, v, relevant: false }))
        .collect();
    candidates.sort_unstable();
    candidates.dedup_by_key(|c| (c.u, c.v));

    Ok(EvalSplit { train, held_out, candidates, seed })
}

fn is_linked(graph: &Graph, u: usize, v: usize) -> bool {
    graph.neighbors(u).binary_search_by_key(&v, |&(j, _)| j).is_ok()
}

/// Decodes the `index`-th pair `(u, v)`, `u < v`, in row-major order.
fn pair_at(n: u64, index: u64) -> (usize, usize) {
    // Row u holds n - 1 - u pairs.
    let mut u = 0u64;
    let mut rest = index;
    while rest >= n - 1 - u {
        rest -= n - 1 - u;
        u += 1;
    }
    (u as usize, (u + 1 + rest) as usize)
}

fn sample_non_links(graph: &Graph, link_count: u64, pair_fraction: f64, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let n = graph.node_count() as u64;
    let total = n * n.saturating_sub(1) / 2;
    let available = total - link_count;
    let target = ((pair_fraction * total as f64).floor() as u64).min(available);
    if target == 0 {
        return Vec::new();
    }
    if total <= ENUMERATION_LIMIT {
        let mut pairs = Vec::with_capacity(available as usize);
        for u in 0..graph.node_count() {
            for v in u + 1..graph.node_count() {
                if !is_linked(graph, u, v) {
                    pairs.push((u, v));
                }
            }
        }
        return sample(rng, pairs.len(), target as usize).into_iter().map(|i| pairs[i]).collect();
    }
    if target * 2 > available {
        // Dense request on a huge graph: walk pair indices in order.
        let indices = sample(rng, total as usize, (target * 2).min(total) as usize);
        let mut sorted: Vec<usize> = indices.into_vec();
        sorted.sort_unstable();
        return sorted
            .into_iter()
            .map(|i| pair_at(n, i as u64))
            .filter(|&(u, v)| !is_linked(graph, u, v))
            .take(target as usize)
            .collect();
    }
    let mut seen = HashSet::with_capacity(target as usize);
    let mut pairs = Vec::with_capacity(target as usize);
    while (pairs.len() as u64) < target {
        let u = rng.gen_range(0..graph.node_count());
        let v = rng.gen_range(0..graph.node_count());
        if u == v {
            continue;
        }
        let pair = (u.min(v), u.max(v));
        if !is_linked(graph, pair.0, pair.1) && seen.insert(pair) {
            pairs.push(pair);
        }
    }
    pairs
}
