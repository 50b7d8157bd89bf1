//! Algebraic connectivity augmentation.
//!
//! Given a weighted graph `G` and candidate edges `W`, find `O(qk)` reweighted
//! candidates that raise `λ₂` close to the best achievable with `k` units of
//! candidate weight, or certify that no good augmentation exists.

pub mod augment;
pub mod config;
pub mod dense;
pub mod error;
pub mod graph;
pub mod io;
pub mod oracles;
pub mod registry;
pub mod report;
pub mod rng;
pub mod selftest;
pub mod sdp;
pub mod sparsify;

pub use error::{Error, Result};
