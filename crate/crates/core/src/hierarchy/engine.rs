//! Incremental agglomeration: the successive passes of [`super::hier_level`]
//! over contracted graphs, without rebuilding the super-node graph or
//! rescanning untouched super-nodes between passes.
//!
//! A super-node lives in a slot; when two merge, the slot with the larger
//! adjacency survives. Candidates are compared on `(gain, label)` where the
//! label is the smallest original node covered, which is the order of
//! super-node ids in the contracted graphs.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use rayon::prelude::*;
use rustc_hash::{FxHashMap, FxHashSet};

use crate::graph::Graph;
use crate::modularity::modularity_gain;

/// Slots recomputed at once from which the rayon pool is used.
const PARALLEL_THRESHOLD: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq)]
struct Candidate {
    slot: usize,
    label: usize,
    gain: f64,
}

/// Keeps the two best of the offered candidates.
fn offer(top: &mut (Option<Candidate>, Option<Candidate>), c: Candidate) {
    match top {
        (Some(b), _) if !c.beats(b) => {
            if top.1.is_none_or(|s| c.beats(&s)) {
                top.1 = Some(c);
            }
        }
        _ => *top = (Some(c), top.0),
    }
}

impl Candidate {
    /// Larger gain first, then the smaller label.
    fn beats(&self, other: &Candidate) -> bool {
        self.gain > other.gain || (self.gain == other.gain && self.label < other.label)
    }
}

/// A merge committed by a pass; `first` and `second` are the slots of the two
/// parts in label order, `survivor` is one of them.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Merge {
    pub first: usize,
    pub second: usize,
    pub survivor: usize,
}

/// Mutual pair with a negative gain, kept for forced passes.
#[derive(Clone, Copy, Debug)]
struct NegativePair {
    gain: f64,
    label: usize,
    a: usize,
    b: usize,
    stamp: (u64, u64),
}

impl PartialEq for NegativePair {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for NegativePair {}

impl PartialOrd for NegativePair {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for NegativePair {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .gain
            .total_cmp(&self.gain)
            .then(self.label.cmp(&other.label))
            .then(self.a.cmp(&other.a))
            .then(self.b.cmp(&other.b))
            .then(self.stamp.cmp(&other.stamp))
    }
}

pub(crate) struct Agglomerator {
    label: Vec<usize>,
    alive: Vec<bool>,
    weight: Vec<f64>,
    self_weight: Vec<f64>,
    adjacency: Vec<FxHashMap<usize, f64>>,
    best: Vec<Option<Candidate>>,
    /// Best candidate other than `best`; `None` when unknown.
    runner_up: Vec<Option<Option<Candidate>>>,
    /// Bumped whenever the slot's best candidate or weight changes.
    stamp: Vec<u64>,
    /// Alive labels, sorted, and the slot holding each label.
    labels: Vec<usize>,
    slot_of: Vec<usize>,
    total_weight: f64,
    gamma: Option<f64>,
    negative: BTreeSet<NegativePair>,
    /// Slots whose best candidate changed since the mutual pairs were last checked.
    pending: Vec<usize>,
    /// Scratch of [`Self::refresh`], all empty between calls.
    fresh: Vec<(Option<Candidate>, Option<Candidate>)>,
    parallel: bool,
}

impl Agglomerator {
    pub fn new(graph: &Graph) -> Self {
        Self::with_parallelism(graph, true)
    }

    pub fn with_parallelism(graph: &Graph, parallel: bool) -> Self {
        let n = graph.node_count();
        let mut self_weight = vec![0.0; n];
        let adjacency = (0..n)
            .map(|i| {
                let mut map = FxHashMap::default();
                for &(j, w) in graph.neighbors(i) {
                    if j == i {
                        self_weight[i] = w;
                    } else {
                        map.insert(j, w);
                    }
                }
                map
            })
            .collect();
        Agglomerator {
            label: (0..n).collect(),
            alive: vec![true; n],
            weight: graph.node_weights().to_vec(),
            self_weight,
            adjacency,
            best: vec![None; n],
            runner_up: vec![None; n],
            stamp: vec![0; n],
            labels: (0..n).collect(),
            slot_of: (0..n).collect(),
            total_weight: graph.total_weight(),
            gamma: None,
            negative: BTreeSet::new(),
            pending: Vec::new(),
            fresh: Vec::new(),
            parallel,
        }
    }

    /// Number of super-nodes.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    /// Slots ever used, alive or not.
    pub fn slot_count(&self) -> usize {
        self.label.len()
    }

    /// Alive slots in label order.
    pub fn slots(&self) -> impl Iterator<Item = usize> + '_ {
        self.labels.iter().map(|&l| self.slot_of[l])
    }

    #[cfg(test)]
    pub fn label(&self, slot: usize) -> usize {
        self.label[slot]
    }

    pub fn weight(&self, slot: usize) -> f64 {
        self.weight[slot]
    }

    pub fn self_weight(&self, slot: usize) -> f64 {
        self.self_weight[slot]
    }

    /// Best and runner-up candidates of `slot` over all its neighbors.
    fn candidates(&self, slot: usize) -> (Option<Candidate>, Option<Candidate>) {
        let gamma = self.gamma.expect("resolution is set before any scan");
        let wi = self.weight[slot];
        let mut top = (None, None);
        for (&j, &wij) in &self.adjacency[slot] {
            let c = Candidate {
                slot: j,
                label: self.label[j],
                gain: modularity_gain(wij, wi, self.weight[j], self.total_weight, gamma),
            };
            offer(&mut top, c);
        }
        top
    }

    /// Recomputes the candidates of every slot in `slots`.
    fn rescan(&mut self, slots: &[usize]) {
        let fresh: Vec<_> = if self.parallel && slots.len() >= PARALLEL_THRESHOLD {
            slots.par_iter().map(|&s| self.candidates(s)).collect()
        } else {
            slots.iter().map(|&s| self.candidates(s)).collect()
        };
        for (&s, (best, second)) in slots.iter().zip(fresh) {
            self.set_best(s, best);
            self.runner_up[s] = Some(second);
        }
    }

    fn set_best(&mut self, slot: usize, c: Option<Candidate>) {
        if self.best[slot] != c {
            self.best[slot] = c;
            self.stamp[slot] += 1;
            self.pending.push(slot);
        }
    }

    fn is_mutual(&self, a: usize) -> Option<(usize, usize, f64)> {
        let ca = self.best[a]?;
        let b = ca.slot;
        (self.best[b]?.slot == a).then_some((a, b, ca.gain))
    }

    fn negative_pair(&self, a: usize, b: usize, gain: f64) -> NegativePair {
        let (a, b) = if self.label[a] < self.label[b] { (a, b) } else { (b, a) };
        NegativePair { gain, label: self.label[a], a, b, stamp: (self.stamp[a], self.stamp[b]) }
    }

    fn still_valid(&self, p: &NegativePair) -> bool {
        self.alive[p.a]
            && self.alive[p.b]
            && (self.stamp[p.a], self.stamp[p.b]) == p.stamp
            && self.label[p.a] == p.label
    }

    /// One pass at resolution `gamma`. Returns the committed merges in label
    /// order, empty when nothing merged.
    pub fn pass(&mut self, gamma: f64, forced: bool) -> Vec<Merge> {
        if self.gamma != Some(gamma) {
            self.gamma = Some(gamma);
            self.negative.clear();
            let all: Vec<usize> = self.slots().collect();
            self.pending.clear();
            self.rescan(&all);
            self.pending = all;
        }

        let mut pending = std::mem::take(&mut self.pending);
        pending.sort_unstable();
        pending.dedup();
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for &a in &pending {
            if !self.alive[a] {
                continue;
            }
            let Some((a, b, gain)) = self.is_mutual(a) else { continue };
            if gain >= 0.0 {
                let (a, b) = if self.label[a] < self.label[b] { (a, b) } else { (b, a) };
                pairs.push((a, b));
            } else if forced {
                self.negative.insert(self.negative_pair(a, b, gain));
            }
        }
        pairs.sort_unstable_by_key(|&(a, _)| self.label[a]);
        pairs.dedup();

        if pairs.is_empty() && forced {
            while let Some(p) = self.negative.pop_first() {
                if self.still_valid(&p) {
                    pairs.push((p.a, p.b));
                    break;
                }
            }
        }
        if pairs.is_empty() {
            return Vec::new();
        }

        let merges: Vec<Merge> = pairs.iter().map(|&(a, b)| self.merge(a, b)).collect();
        let (alive, slot_of) = (&self.alive, &self.slot_of);
        self.labels.retain(|&l| alive[slot_of[l]]);
        self.refresh(&merges);
        merges
    }

    fn merge(&mut self, first: usize, second: usize) -> Merge {
        let (keep, gone) = if self.adjacency[first].len() >= self.adjacency[second].len() {
            (first, second)
        } else {
            (second, first)
        };
        let gone_links = std::mem::take(&mut self.adjacency[gone]);
        let between = self.adjacency[keep].remove(&gone).unwrap_or(0.0);
        for (x, w) in gone_links {
            if x == keep {
                continue;
            }
            let nx = &mut self.adjacency[x];
            nx.remove(&gone);
            *nx.entry(keep).or_insert(0.0) += w;
            *self.adjacency[keep].entry(x).or_insert(0.0) += w;
        }
        self.self_weight[keep] = self.self_weight[first] + self.self_weight[second] + between;
        self.weight[keep] = self.weight[first] + self.weight[second];
        let lost_label = self.label[first].max(self.label[second]);
        self.label[keep] = self.label[first].min(self.label[second]);
        self.slot_of[self.label[keep]] = keep;
        self.alive[gone] = false;
        self.best[gone] = None;
        self.runner_up[gone] = None;
        self.stamp[gone] += 1;
        self.stamp[keep] += 1;
        self.slot_of[lost_label] = gone;
        Merge { first, second, survivor: keep }
    }

    /// Updates the best candidates affected by `merges`. A neighbor of a
    /// merged super-node only compares the fresh candidates against its
    /// untouched best and runner-up, and is rescanned when both are stale.
    fn refresh(&mut self, merges: &[Merge]) {
        let gamma = self.gamma.expect("resolution is set");
        let touched: FxHashSet<usize> = merges.iter().flat_map(|m| [m.first, m.second]).collect();
        // Top two fresh candidates of every neighbor of a merged super-node.
        let mut fresh = std::mem::take(&mut self.fresh);
        fresh.resize(self.label.len(), (None, None));
        let mut neighbors: Vec<usize> = Vec::new();
        for m in merges {
            let r = m.survivor;
            for (&x, &w) in &self.adjacency[r] {
                if !touched.contains(&x) {
                    let gain = modularity_gain(w, self.weight[x], self.weight[r], self.total_weight, gamma);
                    if fresh[x].0.is_none() {
                        neighbors.push(x);
                    }
                    offer(&mut fresh[x], Candidate { slot: r, label: self.label[r], gain });
                }
            }
        }

        let mut rescan: Vec<usize> = merges.iter().map(|m| m.survivor).collect();
        let untouched = |c: &Option<Candidate>| c.is_none_or(|c| !touched.contains(&c.slot));
        for x in neighbors {
            let top = std::mem::take(&mut fresh[x]);
            let (best, runner_up) = (self.best[x], self.runner_up[x]);
            // Best and runner-up over the neighbors whose gain did not change.
            let (u1, u2) = if untouched(&best) {
                (best, runner_up.filter(untouched))
            } else {
                match runner_up.filter(untouched) {
                    Some(second) => (second, None),
                    None => {
                        rescan.push(x);
                        continue;
                    }
                }
            };
            let (f1, f2) = top;
            let f1 = f1.expect("groups are not empty");
            let (new_best, new_second) = if u1.is_none_or(|u| f1.beats(&u)) {
                let mut second = (f2, None);
                if let Some(u) = u1 {
                    second = (None, None);
                    offer(&mut second, u);
                    if let Some(f) = f2 {
                        offer(&mut second, f);
                    }
                }
                (Some(f1), Some(second.0))
            } else {
                let second = u2.map(|u2| {
                    let mut t = (Some(f1), None);
                    if let Some(u) = u2 {
                        offer(&mut t, u);
                    }
                    t.0
                });
                (u1, second)
            };
            self.set_best(x, new_best);
            self.runner_up[x] = new_second;
        }
        self.fresh = fresh;
        rescan.sort_unstable();
        rescan.dedup();
        self.rescan(&rescan);
        // Survivors always count as changed: their weight moved.
        self.pending.extend(merges.iter().map(|m| m.survivor));
    }
}
