//! Attention-head ranking for selective fine-tuning.
//!
//! The pipeline reads per-head output matrices from a corpus, scores each
//! head by how many leading singular values carry most of its output
//! spectrum, measures head-to-head correlation from sequence-averaged
//! outputs, runs PageRank over the resulting head graph and turns the
//! stationary distribution into per-layer fine-tuning masks.
//!
//! Modules, bottom up:
//!
//! - [`tensor_store`]: HOT head-output files and corpus manifests.
//! - [`spectral`]: singular values and the richness index.
//! - [`metrics`]: per-layer Monte-Carlo richness and correlation.
//! - [`rankgraph`]: head graph and PageRank.
//! - [`selector`]: masks, ablation variants, trainable-parameter ratios.
//! - [`synthgen`]: deterministic toy-attention corpora.
//! - [`stability`]: rank-stability comparisons between runs.

pub mod error;
pub mod geometry;
pub mod metrics;
pub mod pipeline;
pub mod rankgraph;
pub mod selector;
pub mod spectral;
pub mod stability;
pub mod synthgen;
pub mod tensor_store;

pub use error::{Error, Result};
pub use geometry::ModelGeometry;
pub use metrics::{CorrelationMatrix, LayerMetrics, RichnessScores};
pub use rankgraph::{HeadGraph, LayerPageRank, Orientation, PageRankParams, PageRankResult};
pub use selector::{AblationVariant, SelectionMask, Strategy};
pub use spectral::SingularSpectrum;
pub use synthgen::{GeneratorConfig, HeadProfile};
pub use tensor_store::{HeadOutput, Manifest};
