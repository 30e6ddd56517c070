//! Unsupervised change detection between co-registered images from
//! different sensors.
//!
//! The pipeline segments the image pair into objects, describes every
//! object by a fully connected structural graph over its pixels, and learns
//! per-object representations with a graph-convolutional autoencoder trained
//! on either adjacency or vertex reconstruction. Local (intra-object) and
//! nonlocal (inter-object) structural differences give two difference
//! images, which are fused by variance weighting, thresholded with Otsu's
//! method and cleaned up by morphological filtering.
//!
//! ```no_run
//! use srgcae::pipeline::{generate_synthetic_pair, run_on_rasters, PipelineConfig, SyntheticSpec};
//!
//! let pair = generate_synthetic_pair(&SyntheticSpec::default())?;
//! let out = run_on_rasters(pair.pre, pair.post, &PipelineConfig::default())?;
//! println!("{} changed pixels", out.cm_refined.count_changed());
//! # Ok::<(), srgcae::Error>(())
//! ```

// `!(x > 0.0)` style checks are intentional: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod change;
pub mod error;
mod formats;
pub mod graphs;
pub mod metrics;
pub mod pipeline;
pub mod raster;
pub mod segment;
pub mod srgcae;

pub use error::{Error, Result};
