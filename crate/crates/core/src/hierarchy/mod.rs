//! Multi-resolution cluster hierarchy.
//!
//! Levels are built bottom-up by repeated agglomeration passes while the
//! resolution `gamma` decreases geometrically from the upper bound
//! [`gamma_max`] towards a floor re-estimated from every new level with
//! [`optimal_gamma_from_totals`]. A bound `d` on the number of top-level
//! clusters stops the construction early once a level has at most `d`
//! clusters, and forces merges with negative gain until then.
//!
//! Clusters never overlap within one level. Nested clusters built at
//! different resolutions are what later yields multi-resolution features.

mod engine;
mod io;
mod level;
mod supergraph;

pub use io::{read_hierarchy, write_hierarchy, ClusterRecord};
pub use level::hier_level;
pub use supergraph::{contract, SuperGraph};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::modularity::{gamma_max, optimal_gamma_from_totals, KahanSum};
use engine::{Agglomerator, Merge};

pub type ClusterId = usize;

/// Default ratio between successive resolutions.
pub const DEFAULT_GAMMA_RATIO: f64 = 0.6;
/// Operational range of the resolution ratio.
pub const GAMMA_RATIO_RANGE: (f64, f64) = (0.36, 0.826);
/// Resolution floor before the first level is available.
pub const INITIAL_GAMMA_MIN: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub struct Cluster {
    pub id: ClusterId,
    /// Level the cluster was formed at. A cluster that is not merged in a
    /// later pass stays in the following levels under the same id.
    pub level: usize,
    pub member_count: usize,
    /// Clusters merged into this one, empty for clusters of original nodes.
    pub children: Vec<ClusterId>,
    /// Cluster this one was merged into, empty while it is in the top level.
    pub ancestors: Vec<ClusterId>,
    pub weight: f64,
    pub internal_weight: f64,
    /// `weight / member_count`.
    pub density: f64,
    pub gamma_at: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Level {
    /// Every cluster present at the level, including the ones carried over
    /// from below, ordered by smallest member.
    pub clusters: Vec<ClusterId>,
    /// Resolution the level was built at.
    pub gamma: f64,
    /// Resolution floor in force when the level was built.
    pub gamma_min: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Hierarchy {
    clusters: Vec<Cluster>,
    levels: Vec<Level>,
    /// Original nodes ordered so that every cluster covers one span.
    leaf_order: Vec<usize>,
    spans: Vec<(usize, usize)>,
    node_count: usize,
    gamma_start: f64,
    passes: usize,
}

impl Hierarchy {
    /// Levels from the bottom (0) to the top.
    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn cluster(&self, id: ClusterId) -> &Cluster {
        &self.clusters[id]
    }

    /// Covered original nodes, in no particular order.
    pub fn members(&self, id: ClusterId) -> &[usize] {
        let (a, b) = self.spans[id];
        &self.leaf_order[a..b]
    }

    pub fn sorted_members(&self, id: ClusterId) -> Vec<usize> {
        let mut members = self.members(id).to_vec();
        members.sort_unstable();
        members
    }

    /// Clusters present at `level`, carried ones included.
    pub fn level_clusters(&self, level: usize) -> impl Iterator<Item = &Cluster> + '_ {
        self.levels[level].clusters.iter().map(move |&id| &self.clusters[id])
    }

    /// Clusters formed at `level`.
    pub fn formed_at(&self, level: usize) -> impl Iterator<Item = &Cluster> + '_ {
        self.level_clusters(level).filter(move |c| c.level == level)
    }

    pub fn top_level(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn top_clusters(&self) -> impl Iterator<Item = &Cluster> + '_ {
        self.level_clusters(self.top_level())
    }

    /// Number of top-level clusters.
    pub fn top_count(&self) -> usize {
        self.levels[self.top_level()].clusters.len()
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Resolution the schedule started from.
    pub fn gamma_start(&self) -> f64 {
        self.gamma_start
    }

    /// Agglomeration passes performed, empty ones included.
    pub fn passes(&self) -> usize {
        self.passes
    }

    /// Sorted member lists of the clusters of one level.
    pub fn level_partition(&self, level: usize) -> Vec<Vec<usize>> {
        self.levels[level].clusters.iter().map(|&id| self.sorted_members(id)).collect()
    }
}

/// Cluster description for [`Hierarchy::from_drafts`]; `children` index the
/// clusters of the previous level.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterDraft {
    pub members: Vec<usize>,
    pub children: Vec<usize>,
    pub weight: f64,
    pub internal_weight: f64,
}

impl Hierarchy {
    /// Assembles a hierarchy from explicit levels given bottom-up as
    /// `(gamma, clusters)`. Every level must partition `0..node_count` and
    /// every cluster of a level above 0 must be the union of its children.
    /// A draft with a single child and the same members is that child
    /// carried over; its weights are ignored.
    pub fn from_drafts(node_count: usize, levels: Vec<(f64, Vec<ClusterDraft>)>) -> Result<Hierarchy> {
        if levels.is_empty() {
            return Err(Error::domain("a hierarchy needs at least one level"));
        }
        let mut builder = Builder::default();
        let mut previous: Vec<ClusterId> = Vec::new();
        let mut sorted: Vec<Vec<usize>> = Vec::new();
        for (level, (gamma, drafts)) in levels.into_iter().enumerate() {
            let mut seen = vec![false; node_count];
            let mut ids = Vec::with_capacity(drafts.len());
            for draft in drafts {
                let mut members = draft.members;
                members.sort_unstable();
                if members.is_empty() {
                    return Err(Error::domain(format!("level {level}: empty cluster")));
                }
                for &m in &members {
                    if m >= node_count || std::mem::replace(&mut seen[m], true) {
                        return Err(Error::domain(format!("level {level}: node {m} is out of range or repeated")));
                    }
                }
                if level == 0 {
                    ids.push(builder.leaf(level, members.clone(), draft.weight, draft.internal_weight, gamma));
                    sorted.push(members);
                    continue;
                }
                let children: Vec<ClusterId> = draft
                    .children
                    .iter()
                    .map(|&c| previous.get(c).copied())
                    .collect::<Option<_>>()
                    .ok_or_else(|| Error::domain(format!("level {level}: child index out of range")))?;
                let mut union: Vec<usize> = children.iter().flat_map(|&c| sorted[c].iter().copied()).collect();
                union.sort_unstable();
                if union != members {
                    return Err(Error::domain(format!("level {level}: members differ from the union of children")));
                }
                if let [only] = children[..] {
                    ids.push(only);
                    continue;
                }
                ids.push(builder.merged(level, children, draft.weight, draft.internal_weight, gamma));
                sorted.push(members);
            }
            if seen.contains(&false) {
                return Err(Error::domain(format!("level {level} does not cover every node")));
            }
            builder.levels.push(Level { clusters: ids.clone(), gamma, gamma_min: gamma });
            previous = ids;
        }
        let gamma_start = builder.levels[0].gamma;
        Ok(builder.finish(node_count, gamma_start, 0))
    }
}

/// Resolution schedule: decreases by a fixed ratio from `gamma_max`, never
/// below the running floor `gamma_min`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaSchedule {
    gamma: f64,
    gamma_min: f64,
    gamma_max: f64,
    ratio: f64,
}

impl GammaSchedule {
    pub fn new(gamma_max: f64, ratio: f64) -> Result<Self> {
        validate_gamma_ratio(ratio)?;
        if !(gamma_max > 0.0) {
            return Err(Error::domain(format!("gamma_max must be positive, got {gamma_max}")));
        }
        Ok(GammaSchedule { gamma: gamma_max, gamma_min: INITIAL_GAMMA_MIN.min(gamma_max), gamma_max, ratio })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn gamma_min(&self) -> f64 {
        self.gamma_min
    }

    pub fn gamma_max(&self) -> f64 {
        self.gamma_max
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    /// Whether the midpoint between the current and the next resolution is
    /// still above the floor.
    pub fn can_decrease(&self) -> bool {
        self.gamma * (self.ratio + 1.0) / 2.0 >= self.gamma_min
    }

    pub fn decrease(&mut self) {
        self.gamma = (self.gamma * self.ratio).max(self.gamma_min);
    }

    /// Updates the floor from an optimal-resolution estimate; the floor never
    /// exceeds the current resolution.
    pub fn set_floor(&mut self, estimate: f64) {
        if estimate.is_finite() && estimate > 0.0 {
            self.gamma_min = estimate.min(self.gamma);
        }
    }
}

pub fn validate_gamma_ratio(ratio: f64) -> Result<()> {
    let (lo, hi) = GAMMA_RATIO_RANGE;
    if !(lo..=hi).contains(&ratio) {
        return Err(Error::domain(format!("gamma ratio {ratio} outside [{lo}, {hi}]")));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClusterOptions {
    /// Bound on the number of top-level clusters, `0` for unbounded.
    pub max_clusters: usize,
    pub gamma_ratio: f64,
}

impl Default for ClusterOptions {
    fn default() -> Self {
        ClusterOptions { max_clusters: 0, gamma_ratio: DEFAULT_GAMMA_RATIO }
    }
}

/// Builds the hierarchy with the default ratio; `d = 0` leaves the number of
/// top-level clusters unbounded.
pub fn cluster(graph: &Graph, d: usize) -> Hierarchy {
    cluster_with(graph, &ClusterOptions { max_clusters: d, ..ClusterOptions::default() })
        .expect("default gamma ratio is valid")
}

pub fn cluster_with(graph: &Graph, options: &ClusterOptions) -> Result<Hierarchy> {
    let d = options.max_clusters;
    let forced = d != 0;
    let mut schedule = GammaSchedule::new(gamma_max(graph), options.gamma_ratio)?;
    let gamma_start = schedule.gamma();
    let w = graph.total_weight();

    let mut builder = Builder::default();
    let mut engine = Agglomerator::new(graph);
    // Cluster backing every slot of the engine once level 0 exists.
    let mut backing: Vec<ClusterId> = Vec::new();
    let mut passes = 0;

    loop {
        passes += 1;
        let gamma = schedule.gamma();
        let gamma_min = schedule.gamma_min();
        let before = engine.len();
        let merges = engine.pass(gamma, forced);
        let count = if merges.is_empty() { 0 } else { engine.len() };
        log::debug!("pass {passes}: gamma {gamma}, floor {gamma_min}, {before} -> {count} clusters");

        if schedule.can_decrease() && (count == 0 || (count as f64) <= (before as f64).sqrt()) {
            schedule.decrease();
        } else if count == 0 {
            break;
        }
        if count == 0 {
            continue;
        }

        builder.push_level(&engine, &merges, &mut backing, gamma, gamma_min);
        let level = builder.levels.last().expect("level was just pushed");
        if count >= 2 {
            let clusters = || level.clusters.iter().map(|&id| &builder.clusters[id]);
            let sum_sq = clusters().map(|c| c.weight.powi(2)).collect::<KahanSum>().total();
            let internal = clusters().map(|c| c.internal_weight).collect::<KahanSum>().total();
            if let Ok(estimate) = optimal_gamma_from_totals(w, internal, sum_sq) {
                schedule.set_floor(estimate);
            }
        }
        if forced && count <= d {
            break;
        }
    }

    if builder.levels.is_empty() {
        let ids = (0..graph.node_count())
            .map(|i| builder.leaf(0, vec![i], engine.weight(i), engine.self_weight(i), gamma_start))
            .collect();
        builder.levels.push(Level { clusters: ids, gamma: gamma_start, gamma_min: schedule.gamma_min() });
    }
    Ok(builder.finish(graph.node_count(), gamma_start, passes))
}

#[derive(Default)]
struct Builder {
    clusters: Vec<Cluster>,
    levels: Vec<Level>,
    /// Members of the clusters without children.
    leaves: Vec<(ClusterId, Vec<usize>)>,
}

impl Builder {
    fn leaf(&mut self, level: usize, members: Vec<usize>, weight: f64, internal_weight: f64, gamma: f64) -> ClusterId {
        let id = self.clusters.len();
        self.clusters.push(Cluster {
            id,
            level,
            member_count: members.len(),
            children: Vec::new(),
            ancestors: Vec::new(),
            weight,
            internal_weight,
            density: weight / members.len() as f64,
            gamma_at: gamma,
        });
        self.leaves.push((id, members));
        id
    }

    fn merged(&mut self, level: usize, children: Vec<ClusterId>, weight: f64, internal_weight: f64, gamma: f64) -> ClusterId {
        let id = self.clusters.len();
        let member_count = children.iter().map(|&c| self.clusters[c].member_count).sum();
        for &c in &children {
            self.clusters[c].ancestors.push(id);
        }
        self.clusters.push(Cluster {
            id,
            level,
            member_count,
            children,
            ancestors: Vec::new(),
            weight,
            internal_weight,
            density: weight / member_count as f64,
            gamma_at: gamma,
        });
        id
    }

    /// Records the level reached by `engine` after `merges`.
    fn push_level(&mut self, engine: &Agglomerator, merges: &[Merge], backing: &mut Vec<ClusterId>, gamma: f64, gamma_min: f64) {
        let level = self.levels.len();
        if level == 0 {
            // Slots are still the original nodes.
            backing.resize(engine.slot_count(), 0);
            let mut partner = vec![None; engine.slot_count()];
            for m in merges {
                partner[m.first] = Some(m.second);
                partner[m.second] = Some(m.first);
            }
            for s in engine.slots() {
                let members = match partner[s] {
                    Some(other) => vec![s.min(other), s.max(other)],
                    None => vec![s],
                };
                backing[s] = self.leaf(0, members, engine.weight(s), engine.self_weight(s), gamma);
            }
        } else {
            for m in merges {
                let children = vec![backing[m.first], backing[m.second]];
                let s = m.survivor;
                backing[s] = self.merged(level, children, engine.weight(s), engine.self_weight(s), gamma);
            }
        }
        let clusters = engine.slots().map(|s| backing[s]).collect();
        self.levels.push(Level { clusters, gamma, gamma_min });
    }

    fn finish(self, node_count: usize, gamma_start: f64, passes: usize) -> Hierarchy {
        let mut explicit: Vec<Vec<usize>> = vec![Vec::new(); self.clusters.len()];
        for (id, members) in self.leaves {
            explicit[id] = members;
        }
        let mut leaf_order = Vec::with_capacity(node_count);
        let mut spans = vec![(0, 0); self.clusters.len()];
        let top = &self.levels.last().expect("at least one level").clusters;
        let mut stack: Vec<(ClusterId, bool)> = Vec::new();
        for &root in top {
            stack.push((root, false));
            while let Some((id, closing)) = stack.pop() {
                if closing {
                    spans[id].1 = leaf_order.len();
                    continue;
                }
                spans[id].0 = leaf_order.len();
                let children = &self.clusters[id].children;
                if children.is_empty() {
                    leaf_order.extend_from_slice(&explicit[id]);
                    spans[id].1 = leaf_order.len();
                } else {
                    stack.push((id, true));
                    stack.extend(children.iter().rev().map(|&c| (c, false)));
                }
            }
        }
        Hierarchy { clusters: self.clusters, levels: self.levels, leaf_order, spans, node_count, gamma_start, passes }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_edge_list;
    use crate::modularity::{modularity, Partition};

    fn graph(text: &str) -> Graph {
        parse_edge_list(text.as_bytes(), false).unwrap()
    }

    const BARBELL: &str = "0 1\n1 2\n0 2\n2 3\n3 4\n4 5\n3 5\n";

    #[test]
    fn barbell_top_level_is_two_triangles() {
        let g = graph(BARBELL);
        let h = cluster(&g, 0);
        assert_eq!(h.level_partition(h.top_level()), vec![vec![0, 1, 2], vec![3, 4, 5]]);
        let p = Partition::from_clusters(&g, &h.level_partition(h.top_level())).unwrap();
        assert!(modularity(&g, &p, 1.0).unwrap() >= 0.35);
    }

    #[test]
    fn bounded_to_one_cluster() {
        let g = graph(BARBELL);
        let h = cluster(&g, 1);
        assert_eq!(h.top_count(), 1);
        assert_eq!(h.top_clusters().next().unwrap().member_count, 6);
    }

    #[test]
    fn star_collapses_to_one_cluster() {
        let g = graph("0 1\n0 2\n0 3\n0 4\n");
        let h = cluster(&g, 0);
        assert_eq!(h.top_count(), 1);
    }

    #[test]
    fn graph_without_links_gives_singletons() {
        let g = Graph::from_links(crate::graph::NodeLabelMap::identity(3), Vec::new()).unwrap();
        let h = cluster(&g, 0);
        assert_eq!(h.level_count(), 1);
        assert_eq!(h.top_count(), 3);
        let loops = graph("a a\nb b\n");
        assert_eq!(cluster(&loops, 0).top_count(), 2);
    }

    #[test]
    fn disconnected_bound_stalls_at_component_count() {
        let g = graph("0 1\n1 2\n2 0\n3 4\n4 5\n5 3\n6 7\n");
        let h = cluster(&g, 1);
        assert_eq!(h.top_count(), 3);
    }

    #[test]
    fn structural_invariants_hold() {
        let g = graph(BARBELL);
        for d in [0, 1, 2, 3] {
            let h = cluster(&g, d);
            for (k, level) in h.levels().iter().enumerate() {
                let mut covered: Vec<usize> = h.level_clusters(k).flat_map(|c| h.members(c.id).to_vec()).collect();
                covered.sort_unstable();
                assert_eq!(covered, (0..6).collect::<Vec<_>>());
                let total: f64 = h.level_clusters(k).map(|c| c.weight).sum();
                assert_eq!(total, 2.0 * g.total_weight());
                if k > 0 {
                    assert!(level.clusters.len() <= h.levels()[k - 1].clusters.len());
                    assert!(level.gamma <= h.levels()[k - 1].gamma);
                }
                for c in h.level_clusters(k) {
                    assert!(c.level <= k);
                    assert_eq!(c.member_count, h.members(c.id).len());
                    assert_eq!(c.density, c.weight / c.member_count as f64);
                    let in_top = h.levels()[h.top_level()].clusters.contains(&c.id);
                    assert_eq!(c.ancestors.is_empty(), in_top);
                    for &a in &c.ancestors {
                        assert!(h.cluster(a).level > c.level);
                        assert!(h.cluster(a).children.contains(&c.id));
                    }
                }
            }
        }
    }

    #[test]
    fn schedule_respects_floor() {
        let mut s = GammaSchedule::new(1.0, 0.6).unwrap();
        assert!(s.can_decrease());
        s.set_floor(0.797);
        s.decrease();
        assert_eq!(s.gamma(), 0.797);
        assert!(!s.can_decrease());
        s.set_floor(3.0);
        assert_eq!(s.gamma_min(), s.gamma());
        assert!(GammaSchedule::new(1.0, 0.3).is_err());
        assert!(GammaSchedule::new(1.0, 0.9).is_err());
    }

    /// The construction loop driven by batch passes over contracted graphs:
    /// `(gamma, gamma_min, partition)` per level.
    fn reference_levels(graph: &Graph, d: usize) -> Vec<(f64, f64, Vec<Vec<usize>>)> {
        let forced = d != 0;
        let mut schedule = GammaSchedule::new(gamma_max(graph), DEFAULT_GAMMA_RATIO).unwrap();
        let w = graph.total_weight();
        let mut nodes = SuperGraph::from_graph(graph);
        let mut leaves: Vec<Vec<usize>> = (0..graph.node_count()).map(|i| vec![i]).collect();
        let mut out = Vec::new();
        loop {
            let (gamma, gamma_min) = (schedule.gamma(), schedule.gamma_min());
            let groups = hier_level(&nodes, gamma, forced);
            let count = groups.len();
            if schedule.can_decrease() && (count == 0 || (count as f64) <= (nodes.node_count() as f64).sqrt()) {
                schedule.decrease();
            } else if count == 0 {
                break;
            }
            if count == 0 {
                continue;
            }
            leaves = groups
                .iter()
                .map(|g| {
                    let mut m: Vec<usize> = g.iter().flat_map(|&s| leaves[s].iter().copied()).collect();
                    m.sort_unstable();
                    m
                })
                .collect();
            let weights: Vec<f64> = leaves.iter().map(|m| m.iter().map(|&i| graph.node_weight(i)).sum()).collect();
            let next = contract(&nodes, &groups).unwrap();
            let internal: f64 = (0..next.node_count()).map(|s| next.self_weight(s)).sum();
            out.push((gamma, gamma_min, leaves.clone()));
            if count >= 2 {
                let sum_sq = weights.iter().map(|x| x * x).sum();
                if let Ok(estimate) = optimal_gamma_from_totals(w, internal, sum_sq) {
                    schedule.set_floor(estimate);
                }
            }
            if forced && count <= d {
                break;
            }
            nodes = next;
        }
        out
    }

    proptest::proptest! {
        #[test]
        fn matches_reference_construction(
            n in 2usize..40,
            links in proptest::collection::vec((0usize..40, 0usize..40, 1u8..4), 1..150),
            d in proptest::sample::select(vec![0usize, 1, 2, 5]),
        ) {
            let text: String = links.iter().map(|&(u, v, w)| format!("{} {} {}\n", u % n, v % n, w)).collect();
            let g = graph(&text);
            let h = cluster(&g, d);
            let reference = reference_levels(&g, d);
            let got: Vec<(f64, f64, Vec<Vec<usize>>)> = (0..h.level_count())
                .map(|k| (h.levels()[k].gamma, h.levels()[k].gamma_min, h.level_partition(k)))
                .collect();
            if reference.is_empty() {
                proptest::prop_assert_eq!(h.level_count(), 1);
                proptest::prop_assert_eq!(h.top_count(), g.node_count());
            } else {
                proptest::prop_assert_eq!(got, reference);
            }
        }
    }
}
