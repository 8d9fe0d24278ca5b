//! Scores visualizations of scalar fields by how well the data can be
//! reconstructed from the rendered images, and sweeps visualization
//! parameters to pick the most faithful candidate.

pub mod baselines;
pub mod cli;
pub mod color;
pub mod colormap_eval;
pub mod contour;
pub mod error;
pub mod field;
pub mod metrics;
pub mod radiance;
pub mod render;
pub mod scenes;
pub mod spatial;
pub mod sweep;
pub mod viewpoint;

pub use error::{Error, Result};
