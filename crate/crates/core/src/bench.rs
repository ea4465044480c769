//! Synthetic scaling benchmark of the end-to-end embedding pipeline.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeLabelMap};
use crate::pipeline::{embed_graph, EmbedOptions};

pub const DEFAULT_SIZES: [usize; 3] = [1_000, 10_000, 100_000];
/// Average degree of the synthetic graphs.
const AVERAGE_DEGREE: usize = 10;
const COMMUNITY_SIZE: usize = 50;
const INTRA_SHARE: f64 = 0.8;

/// A sparse graph with exactly `links` distinct unit links over `links / 5`
/// nodes, planted in communities of about 50 nodes with 80% of the links inside.
pub fn synthetic_graph(links: usize, seed: u64) -> Result<Graph> {
    let n = (2 * links / AVERAGE_DEGREE).max(COMMUNITY_SIZE.min(links + 1)).max(2);
    if links > n * (n - 1) / 2 {
        return Err(Error::domain(format!("{links} links do not fit a simple graph on {n} nodes")));
    }
    let communities = n.div_ceil(COMMUNITY_SIZE);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::with_capacity(links);
    let mut edges = Vec::with_capacity(links);
    while edges.len() < links {
        let u = rng.gen_range(0..n);
        let v = if rng.gen_bool(INTRA_SHARE) {
            let c = u / COMMUNITY_SIZE;
            let lo = c * COMMUNITY_SIZE;
            rng.gen_range(lo..(lo + COMMUNITY_SIZE).min(n))
        } else {
            let c = rng.gen_range(0..communities);
            let lo = c * COMMUNITY_SIZE;
            rng.gen_range(lo..(lo + COMMUNITY_SIZE).min(n))
        };
        if u == v {
            continue;
        }
        let pair = (u.min(v), u.max(v));
        if seen.insert(pair) {
            edges.push((pair.0, pair.1, 1.0));
        }
    }
    Graph::from_links(NodeLabelMap::identity(n), edges)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchPoint {
    pub links: usize,
    pub nodes: usize,
    /// Best wall time over the repetitions, in seconds.
    pub wall_secs: f64,
    /// Process CPU time of that repetition, in seconds.
    pub cpu_secs: f64,
    pub levels: usize,
    pub dimensions: usize,
}

fn cpu_time() -> Duration {
    let mut usage = std::mem::MaybeUninit::<libc::rusage>::uninit();
    // SAFETY: getrusage fills the struct on success.
    let usage = unsafe {
        if libc::getrusage(libc::RUSAGE_SELF, usage.as_mut_ptr()) != 0 {
            return Duration::ZERO;
        }
        usage.assume_init()
    };
    let tv = |t: libc::timeval| Duration::new(t.tv_sec as u64, t.tv_usec as u32 * 1000);
    tv(usage.ru_utime) + tv(usage.ru_stime)
}

/// Times [`embed_graph`] on a synthetic graph for every size.
pub fn run_bench(sizes: &[usize], repeats: usize, seed: u64, options: &EmbedOptions) -> Result<Vec<BenchPoint>> {
    let mut points = Vec::with_capacity(sizes.len());
    for &links in sizes {
        let graph = synthetic_graph(links, seed)?;
        let mut best: Option<BenchPoint> = None;
        for _ in 0..repeats.max(1) {
            let cpu0 = cpu_time();
            let t0 = Instant::now();
            let embedding = embed_graph(&graph, options)?;
            let wall_secs = t0.elapsed().as_secs_f64();
            let cpu_secs = (cpu_time().saturating_sub(cpu0)).as_secs_f64();
            if best.as_ref().is_none_or(|b| wall_secs < b.wall_secs) {
                best = Some(BenchPoint {
                    links,
                    nodes: graph.node_count(),
                    wall_secs,
                    cpu_secs,
                    levels: embedding.hierarchy.level_count(),
                    dimensions: embedding.space.dimension_count(),
                });
            }
        }
        log::info!("bench: {links} links done");
        points.extend(best);
    }
    Ok(points)
}

/// Least-squares slope of `log(time)` against `log(links)`.
pub fn loglog_slope(points: &[BenchPoint], time: impl Fn(&BenchPoint) -> f64) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.links as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| time(p).max(1e-9).ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Largest ratio of observed time to the time extrapolated linearly from the
/// smallest size.
pub fn linear_excess(points: &[BenchPoint], time: impl Fn(&BenchPoint) -> f64) -> Option<f64> {
    let first = points.first()?;
    let base = time(first).max(1e-9) / first.links as f64;
    points.iter().map(|p| time(p) / (base * p.links as f64)).reduce(f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_graph_has_requested_links() {
        let g = synthetic_graph(1000, 1).unwrap();
        assert_eq!(g.link_count(), 1000);
        assert_eq!(g.node_count(), 200);
        assert_eq!(g, synthetic_graph(1000, 1).unwrap());
        assert_eq!(synthetic_graph(10, 0).unwrap().link_count(), 10);
    }

    #[test]
    fn slope_of_linear_points() {
        let point = |links: usize, t: f64| BenchPoint { links, nodes: 0, wall_secs: t, cpu_secs: t, levels: 0, dimensions: 0 };
        let pts = [point(10, 1.0), point(100, 10.0), point(1000, 100.0)];
        assert!((loglog_slope(&pts, |p| p.wall_secs).unwrap() - 1.0).abs() < 1e-12);
        assert!((linear_excess(&pts, |p| p.wall_secs).unwrap() - 1.0).abs() < 1e-12);
        let quad = [point(10, 1.0), point(100, 100.0)];
        assert!((loglog_slope(&quad, |p| p.wall_secs).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn bench_reports_each_size() {
        let pts = run_bench(&[200, 400], 1, 3, &EmbedOptions::default()).unwrap();
        assert_eq!(pts.iter().map(|p| p.links).collect::<Vec<_>>(), vec![200, 400]);
        assert!(pts.iter().all(|p| p.wall_secs > 0.0 && p.dimensions > 0));
    }
}
