use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::bench::{linear_excess, loglog_slope, run_bench, DEFAULT_SIZES};
use crate::embed::{export_embeddings, write_dimension_map, Format};
use crate::error::{Error, Result};
use crate::eval::{
    run_trials, summarize, write_kernel_matrix, write_summary_csv, Metric, TrialOptions, DEFAULT_PAIR_FRACTION,
    DEFAULT_TEST_FRACTION, DEFAULT_TRIALS,
};
use crate::graph::{graph_stats, parse_edge_list, Graph};
use crate::hierarchy::{cluster_with, validate_gamma_ratio, write_hierarchy, ClusterOptions, DEFAULT_GAMMA_RATIO};
use crate::modularity::gamma_max;
use crate::pipeline::{embed_graph, EmbedOptions};
use crate::salient::{extract_features, validate_weight_discount, write_salient, DEFAULT_WEIGHT_DISCOUNT};

#[derive(Debug, Parser)]
#[command(name = "clembed", version, about = "Parameter-free interpretable graph embeddings")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print a JSON summary of the graph.
    Stats(InputArgs),
    /// Build the cluster hierarchy and dump it.
    Cluster(ClusterArgs),
    /// Embed the graph.
    Embed(EmbedArgs),
    /// Evaluate the embedding on link prediction.
    Linkpred(LinkpredArgs),
    /// Time the pipeline on synthetic graphs of growing size.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Edge list: `src dst [weight]` per line, optionally gzipped.
    #[arg(short, long)]
    pub input: PathBuf,
    /// Treat the input as directed arcs; reciprocal arcs keep the larger weight.
    #[arg(long)]
    pub directed: bool,
}

#[derive(Debug, Args)]
pub struct TuningArgs {
    /// Number of dimensions, 0 to take one per salient cluster.
    #[arg(short, long, default_value_t = 0)]
    pub dims: usize,
    /// Resolution decay ratio.
    #[arg(long, default_value_t = DEFAULT_GAMMA_RATIO, value_parser = parse_gamma_ratio)]
    pub r_gamma: f64,
    /// Weight discount of nested salient clusters.
    #[arg(long, default_value_t = DEFAULT_WEIGHT_DISCOUNT, value_parser = parse_weight_discount)]
    pub r_weight: f64,
}

impl TuningArgs {
    fn embed_options(&self) -> EmbedOptions {
        EmbedOptions { dims: self.dims, gamma_ratio: self.r_gamma, weight_discount: self.r_weight }
    }
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub tuning: TuningArgs,
    /// Hierarchy output, stdout when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Also write the salient clusters here.
    #[arg(long)]
    pub salient: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub tuning: TuningArgs,
    /// Embedding output, stdout when omitted. A `.dims` sidecar maps
    /// dimensions to clusters.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value = "w2v", value_parser = parse_format)]
    pub format: Format,
    /// Write the node similarity matrix under `--metric` here.
    #[arg(long)]
    pub kernel: Option<PathBuf>,
    #[arg(long, default_value = "cosine", value_parser = parse_metric)]
    pub metric: Metric,
}

#[derive(Debug, Args)]
pub struct LinkpredArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub tuning: TuningArgs,
    /// Comma-separated metrics.
    #[arg(long, value_delimiter = ',', default_value = "cosine,jaccard,hamming,binham", value_parser = parse_metric)]
    pub metric: Vec<Metric>,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_TEST_FRACTION)]
    pub test_fraction: f64,
    /// Share of all node pairs sampled as negatives.
    #[arg(long, default_value_t = DEFAULT_PAIR_FRACTION)]
    pub pair_fraction: f64,
    /// Comma-separated list of N for precision@N and recall@N.
    #[arg(short = 'n', long = "top", value_delimiter = ',', default_value = "1,5,10,20,50")]
    pub top: Vec<usize>,
    /// CSV output of the summary.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma-separated link counts.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SIZES)]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub tuning: TuningArgs,
    /// JSON lines report, stdout when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

fn parse_gamma_ratio(s: &str) -> std::result::Result<f64, String> {
    let r: f64 = s.parse().map_err(|e| format!("{e}"))?;
    validate_gamma_ratio(r).map_err(|e| e.to_string())?;
    Ok(r)
}

fn parse_weight_discount(s: &str) -> std::result::Result<f64, String> {
    let r: f64 = s.parse().map_err(|e| format!("{e}"))?;
    validate_weight_discount(r).map_err(|e| e.to_string())?;
    Ok(r)
}

fn parse_metric(s: &str) -> std::result::Result<Metric, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_format(s: &str) -> std::result::Result<Format, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn read_graph(args: &InputArgs) -> Result<Graph> {
    let file = File::open(&args.input)
        .map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", args.input.display())))?;
    parse_edge_list(file, args.directed)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    Ok(BufWriter::new(file))
}

/// Runs `body` against the file at `path`, or against `stdout`.
fn with_output<F>(path: Option<&Path>, stdout: &mut dyn Write, body: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    match path {
        Some(p) => {
            let mut w = create(p)?;
            body(&mut w)?;
            w.flush()?;
        }
        None => body(stdout)?,
    }
    Ok(())
}

fn json_line<T: Serialize>(value: &T, out: &mut dyn Write) -> Result<()> {
    let line = serde_json::to_string(value).map_err(|e| Error::domain(e.to_string()))?;
    writeln!(out, "{line}")?;
    Ok(())
}

fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".dims");
    PathBuf::from(name)
}

#[derive(Serialize)]
struct StatsReport {
    #[serde(flatten)]
    stats: crate::graph::GraphStats,
    gamma_max: f64,
}

#[derive(Serialize)]
struct BenchSummary {
    wall_slope: Option<f64>,
    cpu_slope: Option<f64>,
    wall_linear_excess: Option<f64>,
    cpu_linear_excess: Option<f64>,
}

/// Executes one command, writing primary output to `stdout` unless a path is given.
pub fn run(config: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    match &config.command {
        Command::Stats(input) => {
            let graph = read_graph(input)?;
            let report = StatsReport { stats: graph_stats(&graph), gamma_max: gamma_max(&graph) };
            json_line(&report, stdout)
        }
        Command::Cluster(args) => {
            let graph = read_graph(&args.input)?;
            let options = ClusterOptions { max_clusters: args.tuning.dims, gamma_ratio: args.tuning.r_gamma };
            let hierarchy = cluster_with(&graph, &options)?;
            with_output(args.output.as_deref(), stdout, |w| write_hierarchy(&hierarchy, w))?;
            if let Some(path) = &args.salient {
                let set = extract_features(&hierarchy, args.tuning.r_weight)?;
                let mut w = create(path)?;
                write_salient(&hierarchy, &set, &mut w)?;
                w.flush()?;
            }
            Ok(())
        }
        Command::Embed(args) => {
            let graph = read_graph(&args.input)?;
            let embedding = embed_graph(&graph, &args.tuning.embed_options())?;
            with_output(args.output.as_deref(), stdout, |w| {
                export_embeddings(&embedding.space, graph.labels(), args.format, w)
            })?;
            if let Some(path) = &args.output {
                let mut w = create(&sidecar(path))?;
                write_dimension_map(&embedding.space, &embedding.hierarchy, &mut w)?;
                w.flush()?;
            }
            if let Some(path) = &args.kernel {
                let mut w = create(path)?;
                write_kernel_matrix(&embedding.space, graph.labels(), args.metric, &mut w)?;
                w.flush()?;
            }
            Ok(())
        }
        Command::Linkpred(args) => {
            let graph = read_graph(&args.input)?;
            let options = TrialOptions {
                trials: args.trials,
                seed: args.seed,
                test_fraction: args.test_fraction,
                pair_fraction: args.pair_fraction,
                embed: args.tuning.embed_options(),
            };
            let trials = run_trials(&graph, &args.metric, &args.top, &options)?;
            let summaries = summarize(&trials, &args.metric, &args.top);
            for s in &summaries {
                json_line(s, stdout)?;
            }
            if let Some(path) = &args.output {
                let mut w = create(path)?;
                write_summary_csv(&summaries, &mut w)?;
                w.flush()?;
            }
            Ok(())
        }
        Command::Bench(args) => {
            let points = run_bench(&args.sizes, args.repeats, args.seed, &args.tuning.embed_options())?;
            with_output(args.output.as_deref(), stdout, |w| {
                for p in &points {
                    json_line(p, w)?;
                }
                let summary = BenchSummary {
                    wall_slope: loglog_slope(&points, |p| p.wall_secs),
                    cpu_slope: loglog_slope(&points, |p| p.cpu_secs),
                    wall_linear_excess: linear_excess(&points, |p| p.wall_secs),
                    cpu_linear_excess: linear_excess(&points, |p| p.cpu_secs),
                };
                json_line(&summary, w)
            })
        }
    }
}
