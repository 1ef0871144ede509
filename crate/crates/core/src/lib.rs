//! Kernelized correlation filter tracking with a closed-form Huber-type
//! regularizer, PSR-gated model updates, scale-pyramid estimation and
//! OTB-style benchmark evaluation.
//!
//! The pieces, bottom up:
//!
//! - [`spectrum`]: 2-D DFT conventions, spectral products, circular correlation.
//! - [`huber_solver`]: per-bin closed-form filter solve.
//! - [`kernel`]: Gaussian kernel correlation over all cyclic shifts.
//! - [`features`]: patch sampling, 31-channel HOG, cosine window, scale pyramid.
//! - [`tracker`]: the per-frame tracking loop.
//! - [`eval`]: OTB sequence loading, DP/OP curves and aggregation.
//! - [`cli`]: run and compare tracker variants over a dataset.

pub mod cli;
pub mod error;
pub mod eval;
pub mod features;
pub mod geometry;
pub mod huber_solver;
pub mod kernel;
pub mod spectrum;
pub mod synthetic;
pub mod tracker;

pub use error::{Error, Result};
pub use features::Frame;
pub use geometry::BBox;
pub use tracker::{Tracker, TrackerConfig};
