use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::embed::EmbeddingSpace;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::pipeline::{embed_graph, EmbedOptions};

use super::similarity::{Kernel, Metric};
use super::split::{make_split, CandidatePair, EvalSplit};

/// Trials averaged by default.
pub const DEFAULT_TRIALS: usize = 10;
pub const DEFAULT_NS: [usize; 5] = [1, 5, 10, 20, 50];

#[derive(Clone, Debug, PartialEq)]
pub struct RankedResult {
    /// Candidates ordered by similarity descending.
    pub ranking: Vec<(CandidatePair, f64)>,
    /// Keyed by the requested `N`.
    pub precision_at: BTreeMap<usize, f64>,
    pub recall_at: BTreeMap<usize, f64>,
}

/// Ranks the split's candidates by similarity and scores the top `N` for each
/// `N` in `ns`. `N` larger than the candidate count is clamped.
pub fn link_predict(split: &EvalSplit, space: &EmbeddingSpace, metric: Metric, ns: &[usize]) -> Result<RankedResult> {
    if space.node_count() != split.train.node_count() {
        return Err(Error::domain(format!(
            "embedding has {} nodes, split has {}",
            space.node_count(),
            split.train.node_count()
        )));
    }
    let kernel = Kernel::new(space, metric);
    let scores = split
        .candidates
        .iter()
        .map(|c| kernel.score(c.u, c.v))
        .collect::<Result<Vec<f64>>>()?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let ranking: Vec<(CandidatePair, f64)> = order.iter().map(|&i| (split.candidates[i], scores[i])).collect();

    let mut hits = Vec::with_capacity(ranking.len() + 1);
    hits.push(0usize);
    for (c, _) in &ranking {
        hits.push(hits.last().unwrap() + usize::from(c.relevant));
    }
    let relevant = *hits.last().unwrap();

    let mut precision_at = BTreeMap::new();
    let mut recall_at = BTreeMap::new();
    for &n in ns {
        if n == 0 {
            return Err(Error::domain("N must be positive"));
        }
        let top = n.min(ranking.len());
        if top < n {
            log::warn!("N = {n} exceeds the {} candidates; clamping", ranking.len());
        }
        let h = hits[top];
        precision_at.insert(n, if top == 0 { 0.0 } else { h as f64 / top as f64 });
        recall_at.insert(n, if relevant == 0 { 0.0 } else { h as f64 / relevant as f64 });
    }
    Ok(RankedResult { ranking, precision_at, recall_at })
}

/// Expected precision of a uniformly random ranking: the relevant share of candidates.
pub fn random_precision_expectation(split: &EvalSplit) -> f64 {
    if split.candidates.is_empty() {
        return 0.0;
    }
    split.relevant_count() as f64 / split.candidates.len() as f64
}

/// Variance of precision@N under a uniformly random ranking (hypergeometric).
pub fn random_precision_variance(split: &EvalSplit, n: usize) -> f64 {
    let c = split.candidates.len() as f64;
    let n = (n as f64).min(c);
    if n == 0.0 || c <= 1.0 {
        return 0.0;
    }
    let p = random_precision_expectation(split);
    n * p * (1.0 - p) * (c - n) / (c - 1.0) / (n * n)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialOptions {
    pub trials: usize,
    pub seed: u64,
    pub test_fraction: f64,
    pub pair_fraction: f64,
    pub embed: EmbedOptions,
}

impl Default for TrialOptions {
    fn default() -> Self {
        TrialOptions {
            trials: DEFAULT_TRIALS,
            seed: 0,
            test_fraction: super::split::DEFAULT_TEST_FRACTION,
            pair_fraction: super::split::DEFAULT_PAIR_FRACTION,
            embed: EmbedOptions::default(),
        }
    }
}

/// One trial: a split with seed `seed + index`, its embedding and a result per metric.
#[derive(Clone, Debug)]
pub struct Trial {
    pub seed: u64,
    pub split: EvalSplit,
    pub results: Vec<(Metric, RankedResult)>,
}

/// Runs the trials concurrently; the output is in seed order.
pub fn run_trials(graph: &Graph, metrics: &[Metric], ns: &[usize], options: &TrialOptions) -> Result<Vec<Trial>> {
    if options.trials == 0 {
        return Err(Error::domain("at least one trial is required"));
    }
    (0..options.trials as u64)
        .into_par_iter()
        .map(|t| {
            let seed = options.seed.wrapping_add(t);
            let split = make_split(graph, options.test_fraction, options.pair_fraction, seed)?;
            let embedding = embed_graph(&split.train, &options.embed)?;
            let results = metrics
                .iter()
                .map(|&m| link_predict(&split, &embedding.space, m, ns).map(|r| (m, r)))
                .collect::<Result<Vec<_>>>()?;
            Ok(Trial { seed, split, results })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub metric: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub precision_mean: f64,
    pub precision_stddev: f64,
    pub recall_mean: f64,
    pub recall_stddev: f64,
    pub trials: usize,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Mean and sample standard deviation per `(metric, N)`, folded in seed order.
pub fn summarize(trials: &[Trial], metrics: &[Metric], ns: &[usize]) -> Vec<Summary> {
    let mut out = Vec::new();
    for (mi, &metric) in metrics.iter().enumerate() {
        for &n in ns {
            let p: Vec<f64> = trials.iter().map(|t| t.results[mi].1.precision_at[&n]).collect();
            let r: Vec<f64> = trials.iter().map(|t| t.results[mi].1.recall_at[&n]).collect();
            let (precision_mean, precision_stddev) = mean_std(&p);
            let (recall_mean, recall_stddev) = mean_std(&r);
            out.push(Summary {
                metric: metric.name().to_string(),
                n,
                precision_mean,
                precision_stddev,
                recall_mean,
                recall_stddev,
                trials: trials.len(),
            });
        }
    }
    out
}

pub fn write_summary_csv<W: Write>(summaries: &[Summary], mut out: W) -> Result<()> {
    writeln!(out, "metric,N,precision_mean,precision_stddev,recall_mean,recall_stddev,trials")?;
    for s in summaries {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            s.metric, s.n, s.precision_mean, s.precision_stddev, s.recall_mean, s.recall_stddev, s.trials
        )?;
    }
    Ok(())
}
