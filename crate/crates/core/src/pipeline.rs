use crate::embed::{fill_values, form_dimensions, EmbeddingSpace};
use crate::error::Result;
use crate::graph::Graph;
use crate::hierarchy::{cluster_with, ClusterOptions, Hierarchy, DEFAULT_GAMMA_RATIO};
use crate::salient::{extract_features, SalientSet, DEFAULT_WEIGHT_DISCOUNT};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmbedOptions {
    /// Requested dimensions, `0` for one per salient cluster.
    pub dims: usize,
    pub gamma_ratio: f64,
    pub weight_discount: f64,
}

impl Default for EmbedOptions {
    fn default() -> Self {
        EmbedOptions { dims: 0, gamma_ratio: DEFAULT_GAMMA_RATIO, weight_discount: DEFAULT_WEIGHT_DISCOUNT }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    pub hierarchy: Hierarchy,
    pub salient: SalientSet,
    pub space: EmbeddingSpace,
}

/// Clusters the graph, bounding the top level by `dims`, and embeds it.
pub fn embed_graph(graph: &Graph, options: &EmbedOptions) -> Result<Embedding> {
    let hierarchy =
        cluster_with(graph, &ClusterOptions { max_clusters: options.dims, gamma_ratio: options.gamma_ratio })?;
    let salient = extract_features(&hierarchy, options.weight_discount)?;
    // A bound the hierarchy could not reach (more components than dims) is
    // still honored by the outlier rule, provided enough salient clusters exist.
    let dims = options.dims.min(salient.len());
    if dims < options.dims {
        log::warn!("only {} salient clusters; using {dims} dimensions instead of {}", salient.len(), options.dims);
    }
    let space = fill_values(form_dimensions(&hierarchy, &salient, dims, graph)?, graph);
    Ok(Embedding { hierarchy, salient, space })
}
