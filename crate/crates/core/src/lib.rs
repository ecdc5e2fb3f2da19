//! Superpixel segmentation by locality-constrained sparse subspace clustering.
//!
//! The pipeline over-segments an image into raw pixel units, learns a sparse
//! self-expressive coding matrix `Z` whose columns are encouraged to agree
//! with their spatial neighbours, and cuts the affinity `(|Zᵀ| + |Z|)/2` into
//! superpixels with normalized spectral clustering.
//!
//! ```no_run
//! use lcsseg::{pipeline::{segment_image, PipelineConfig}, ImageBuffer};
//!
//! let image = ImageBuffer::load("photo.png")?;
//! let run = segment_image(&image, &PipelineConfig::new(200))?;
//! println!("{} superpixels", run.labeling.realized_k());
//! # Ok::<(), lcsseg::Error>(())
//! ```

pub mod cluster;
pub mod error;
pub mod harness;
pub mod image;
mod kmeans;
pub mod labels;
pub mod metrics;
pub mod overlay;
pub mod par;
pub mod pipeline;
pub mod solver;
pub mod units;
pub mod weights;

pub use crate::cluster::{affinity, merge_isolated, ncut, AffinityGraph, MergeOptions, SuperpixelLabeling};
pub use crate::error::{Error, Result};
pub use crate::image::ImageBuffer;
pub use crate::labels::LabelGrid;
pub use crate::metrics::{GroundTruth, MetricReport};
pub use crate::solver::{solve, AdmmConfig, AdmmState, SolveReport};
pub use crate::units::{extract_features, oversegment, oversegment_with, unit_adjacency, DEFAULT_COMPACTNESS, AdjacencyMatrix, FeatureMatrix, FeatureOptions, UnitMap};
pub use crate::weights::{build_weight_matrix, spatial_penalty, SpatialWeights};
