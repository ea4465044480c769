use rayon::prelude::*;

use super::supergraph::SuperGraph;
use crate::modularity::modularity_gain;

/// Super-node counts from which the best-neighbor scan runs on the rayon pool.
const PARALLEL_THRESHOLD: usize = 4096;

/// Best merge candidate of one super-node: maximal gain, smallest id on ties.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Candidate {
    neighbor: usize,
    gain: f64,
}

fn best_candidate(graph: &SuperGraph, node: usize, gamma: f64) -> Option<Candidate> {
    let w = graph.total_weight();
    let wi = graph.node_weight(node);
    let mut best: Option<Candidate> = None;
    // Neighbors are sorted, so a strict comparison keeps the smallest id on ties.
    for &(j, wij) in graph.neighbors(node) {
        let gain = modularity_gain(wij, wi, graph.node_weight(j), w, gamma);
        if best.is_none_or(|b| gain > b.gain) {
            best = Some(Candidate { neighbor: j, gain });
        }
    }
    best
}

fn best_candidates(graph: &SuperGraph, gamma: f64, parallel: bool) -> Vec<Option<Candidate>> {
    let n = graph.node_count();
    if parallel {
        (0..n).into_par_iter().map(|i| best_candidate(graph, i, gamma)).collect()
    } else {
        (0..n).map(|i| best_candidate(graph, i, gamma)).collect()
    }
}

/// One agglomeration pass over `graph` at resolution `gamma`.
///
/// Every super-node picks the neighbor of maximal generalized modularity gain
/// and a merge is committed only for mutual choices with a non-negative gain.
/// When `forced` is set and nothing qualifies, the mutual pair with the least
/// negative gain is merged instead. Returns the groups of super-nodes forming
/// the next level (ordered by their smallest member), or an empty list when
/// no merge happened.
pub fn hier_level(graph: &SuperGraph, gamma: f64, forced: bool) -> Vec<Vec<usize>> {
    hier_level_with(graph, gamma, forced, graph.node_count() >= PARALLEL_THRESHOLD)
}

pub(crate) fn hier_level_with(graph: &SuperGraph, gamma: f64, forced: bool, parallel: bool) -> Vec<Vec<usize>> {
    let n = graph.node_count();
    let best = best_candidates(graph, gamma, parallel);

    let mut partner: Vec<Option<usize>> = vec![None; n];
    let mut least_negative: Option<(usize, usize, f64)> = None;
    let mut merged = 0usize;
    for i in 0..n {
        let Some(ci) = best[i] else { continue };
        let j = ci.neighbor;
        if j <= i || best[j].map(|c| c.neighbor) != Some(i) {
            continue;
        }
        if ci.gain >= 0.0 {
            partner[i] = Some(j);
            partner[j] = Some(i);
            merged += 1;
        } else if least_negative.is_none_or(|(_, _, g)| ci.gain > g) {
            least_negative = Some((i, j, ci.gain));
        }
    }
    if merged == 0 {
        match least_negative {
            Some((i, j, _)) if forced => {
                partner[i] = Some(j);
                partner[j] = Some(i);
            }
            _ => return Vec::new(),
        }
    }

    let mut groups = Vec::with_capacity(n - merged.max(1));
    for i in 0..n {
        match partner[i] {
            Some(j) if j > i => groups.push(vec![i, j]),
            Some(_) => {}
            None => groups.push(vec![i]),
        }
    }
    groups
}
