//! Parameter-free, interpretable node embeddings from a multi-resolution
//! hierarchy of modularity-based clusters.
//!
//! Pipeline: [`graph::parse_edge_list`] → [`hierarchy::cluster`] →
//! [`salient::extract_features`] → [`embed::form_dimensions`] →
//! [`embed::fill_values`]. The [`eval`] module scores embeddings on link
//! prediction.

pub mod bench;
pub mod cli;
pub mod embed;
pub mod error;
pub mod eval;
pub mod graph;
pub mod hierarchy;
pub mod modularity;
pub mod pipeline;
pub mod salient;

pub use error::{Error, Result};
