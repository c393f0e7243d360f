//! Gradient compression toolkit.
//!
//! Bit-exact codecs for sparse dithering (deterministic and randomized) and
//! spherical compression, the usual baselines (Top-k, random sparsification,
//! random dithering, ternary, natural compression), closed-form
//! rate-distortion bounds, and a compressed gradient descent harness.

pub mod acceptance;
pub mod bitio;
pub mod bounds;
pub mod compressors;
pub mod data;
pub mod error;
pub mod geometry;
pub mod optim;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
