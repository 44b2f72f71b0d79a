//! Group recommendation with a medley of sub-attention networks (MoSAN).
//!
//! Each group member owns a sub-attention network that weighs every other
//! member; the sum of the resulting sub-group representations scores items.
//! The crate also carries the embedding and collaborative-filtering baselines,
//! BPR training with hand-derived gradients, top-K evaluation and the
//! attention-based explanation and ablation tools.

pub mod baselines;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod linalg;
pub mod mosan;
pub mod params;
pub mod ranking;
pub mod rng;
pub mod training;

pub use error::{Error, Result};
