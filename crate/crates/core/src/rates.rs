//! Achievable sum rate of ergodic interference neutralization (`R_in`) and
//! the MIMO cut bound (`R_mimo`), by Monte Carlo and, for two relays with
//! uniform-phase fading, in closed form.

use std::f64::consts::TAU;

use rand::Rng;

use crate::error::{Error, Result};
use crate::fading::{ChannelMatrix, FadingModel, Hop};
use crate::linalg::Complex;
use crate::mc::{self, RateEstimate};
use crate::neutralization::asymptotic_sinr;
use crate::stream::RandomStream;

/// `Σ_{i=1,2} log₂(1 + SINR_i)` for one first-hop realization.
pub fn rate_in_sample(h: &ChannelMatrix, p: f64) -> f64 {
    (1.0 + asymptotic_sinr(h, p, 1)).log2() + (1.0 + asymptotic_sinr(h, p, 2)).log2()
}

/// `log₂ det(I₂ + P H†H)`, equal to `log₂ det(I_L + P HH†)`.
pub fn rate_mimo_sample(h: &ChannelMatrix, p: f64) -> f64 {
    let m = h.matrix();
    let (mut a, mut d) = (0.0, 0.0);
    let mut b = Complex::new(0.0, 0.0);
    for r in 0..m.rows() {
        let (x, y) = (m.get(r, 0), m.get(r, 1));
        a += x.norm_sqr();
        d += y.norm_sqr();
        b += x.conj() * y;
    }
    ((1.0 + p * a) * (1.0 + p * d) - p * p * b.norm_sqr()).log2()
}

fn check_args(relays: usize, p: f64, trials: u64) -> Result<()> {
    if relays < 2 {
        return Err(Error::invalid(format!("at least 2 relays are required, got {relays}")));
    }
    if !(p >= 0.0 && p.is_finite()) {
        return Err(Error::invalid(format!("power must be finite and nonnegative, got {p}")));
    }
    if trials == 0 {
        return Err(Error::invalid("at least one trial is required"));
    }
    Ok(())
}

/// Jointly estimated `R_in`, `R_mimo` and their paired difference, all from
/// the same channel draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePair {
    pub r_in: RateEstimate,
    pub r_mimo: RateEstimate,
    pub gap: RateEstimate,
}

pub fn rate_pair_mc(
    model: &FadingModel,
    relays: usize,
    p: f64,
    trials: u64,
    stream: &RandomStream,
) -> Result<RatePair> {
    check_args(relays, p, trials)?;
    let [r_in, r_mimo, gap] = mc::estimate_many(trials, stream, |rng| {
        let h = ChannelMatrix::sample(model, Hop::First, relays, rng);
        let ri = rate_in_sample(&h, p);
        let rm = rate_mimo_sample(&h, p);
        [ri, rm, rm - ri]
    });
    Ok(RatePair { r_in, r_mimo, gap })
}

/// Monte Carlo `R_in` with a fresh `L × 2` first hop per trial.
pub fn rate_in_mc(
    model: &FadingModel,
    relays: usize,
    p: f64,
    trials: u64,
    stream: &RandomStream,
) -> Result<RateEstimate> {
    check_args(relays, p, trials)?;
    Ok(mc::estimate(trials, stream, |rng| rate_in_sample(&ChannelMatrix::sample(model, Hop::First, relays, rng), p)))
}

/// Monte Carlo `R_mimo = E[log₂ det(I + P HH†)]`.
pub fn rate_mimo_mc(
    model: &FadingModel,
    relays: usize,
    p: f64,
    trials: u64,
    stream: &RandomStream,
) -> Result<RateEstimate> {
    check_args(relays, p, trials)?;
    Ok(mc::estimate(trials, stream, |rng| rate_mimo_sample(&ChannelMatrix::sample(model, Hop::First, relays, rng), p)))
}

fn phase_ratio(p: f64) -> f64 {
    2.0 * p * p / (1.0 + 4.0 * p + 2.0 * p * p)
}

/// Closed-form `R_in` for two uniform-phase relays.
pub fn rate_in_closed_uniform(p: f64) -> f64 {
    let x = phase_ratio(p);
    2.0 * (1.0 + 2.0 * p * p / (1.0 + 4.0 * p)).log2() + 2.0 * phase_average_unchecked(x)
}

/// Closed-form `R_mimo` for two uniform-phase relays.
pub fn rate_mimo_closed_uniform(p: f64) -> f64 {
    let x = phase_ratio(p);
    (1.0 + 4.0 * p + 2.0 * p * p).log2() + phase_average_unchecked(x)
}

fn phase_average_unchecked(x: f64) -> f64 {
    (1.0 + (1.0 - x * x).max(0.0).sqrt()).log2() - 1.0
}

/// `E_φ[log₂(1 − x cos φ)] = log₂(1 + √(1−x²)) − 1` for `|x| ≤ 1`.
pub fn lemma3_identity(x: f64) -> Result<f64> {
    if !(x.abs() <= 1.0) {
        return Err(Error::invalid(format!("|x| must be at most 1, got {x}")));
    }
    Ok(phase_average_unchecked(x))
}

/// Monte Carlo mean of `log₂(1 − x cos φ)` with `φ ~ U[0, 2π)`.
pub fn lemma3_mc(x: f64, trials: u64, stream: &RandomStream) -> Result<RateEstimate> {
    if !(x.abs() <= 1.0) {
        return Err(Error::invalid(format!("|x| must be at most 1, got {x}")));
    }
    if trials == 0 {
        return Err(Error::invalid("at least one trial is required"));
    }
    Ok(mc::estimate(trials, stream, |rng| {
        let phi = rng.random::<f64>() * TAU;
        (1.0 - x * phi.cos()).log2()
    }))
}

/// `R_mimo ≤ 2 log₂(1 + P(2M+1))` by concavity of `log det`.
pub fn jensen_upper(p: f64, pairs: usize) -> f64 {
    2.0 * (1.0 + p * (2 * pairs + 1) as f64).log2()
}
