//! Ergodic interference neutralization for fading 2-user 2-hop relay networks.
//!
//! The crate computes achievable rates of the amplify-and-forward pairing
//! scheme, the MIMO cut bound it is compared against, and the constant-gap
//! bounds between the two. Monte Carlo loops run on rayon when the
//! `parallel` feature is enabled (the default) and sequentially otherwise;
//! both paths produce bit-identical estimates because every trial draws from
//! its own counter-addressed substream.
//!
//! Logarithms are base 2 everywhere, so rates are in bits/sec/Hz.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fading;
pub mod gaps;
pub mod icgap;
pub mod linalg;
pub mod mc;
pub mod neutralization;
pub mod pairing;
pub mod rates;
pub mod stream;
pub mod verify;

pub use error::{Error, Result};
pub use fading::{ChannelMatrix, FadingModel, Hop, PairBlock};
pub use linalg::{CMatrix, Complex, Mat2};
pub use mc::RateEstimate;
pub use stream::RandomStream;

/// Converts a power in dB to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts a linear power to dB.
pub fn linear_to_db(p: f64) -> f64 {
    10.0 * p.log10()
}
