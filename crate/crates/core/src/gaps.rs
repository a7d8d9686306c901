//! Gaps between `R_mimo` and `R_in`: the constant bounds for two relays, the
//! large-`L` limits, and the law-of-large-numbers correction `δ_m`.

use std::f64::consts::{PI, TAU};

use rand::Rng;

use crate::error::{Error, Result};
use crate::fading::{ChannelMatrix, FadingModel, Hop};
use crate::linalg::{det2, Mat2};
use crate::mc::{self, RateEstimate};
use crate::rates::{rate_in_closed_uniform, rate_mimo_closed_uniform, rate_pair_mc};
use crate::stream::{RandomStream, StreamRng};

/// `E[|det H₁|]` for i.i.d. Rayleigh 2×2 blocks.
pub const RAYLEIGH_MEAN_ABS_DET: f64 = 3.0 * PI / 8.0;
/// `E[|det H₁|] = E[√(2 − 2cos θ)]` for uniform phase.
pub const UNIFORM_MEAN_ABS_DET: f64 = 4.0 / PI;

/// Exact `R_mimo − R_in` for two uniform-phase relays; never exceeds 4.
pub fn theorem2_gap_closed(p: f64) -> f64 {
    rate_mimo_closed_uniform(p) - rate_in_closed_uniform(p)
}

/// `2 log₂(√A(A+B²) / (B(A + √(A²−G²)))) + 2` for amplitudes
/// `[a11, a12, a21, a22]`.
pub fn theorem3_term(a: [f64; 4]) -> f64 {
    let [a11, a12, a21, a22] = a.map(|x| x * x);
    let big_a = a11 * a22 + a12 * a21;
    let big_b = a11 + a21 + 2.0;
    let big_g = 2.0 * (a11 * a12 * a21 * a22).sqrt();
    // A ≥ G by AM-GM; clamp rounding noise
    let root = (big_a * big_a - big_g * big_g).max(0.0).sqrt();
    2.0 * (big_a.sqrt() * (big_a + big_b * big_b) / (big_b * (big_a + root))).log2() + 2.0
}

/// Monte Carlo estimate of the power-independent gap bound for two relays
/// whose coefficients have uniform phase.
pub fn theorem3_bound_mc(model: &FadingModel, trials: u64, stream: &RandomStream) -> Result<RateEstimate> {
    if trials == 0 {
        return Err(Error::invalid("at least one trial is required"));
    }
    Ok(mc::estimate(trials, stream, |rng| {
        let a = [(); 4].map(|_| model.sample_amplitude(rng));
        theorem3_term(a)
    }))
}

/// Correction term of the law-of-large-numbers lower bound
/// `E[log₂(1 + c S_m²)] ≥ log₂(1 + c m² E[X]²) − δ_m`.
pub fn delta_m(c: f64, m: f64, ex: f64, ex2: f64, eps: f64) -> Result<f64> {
    if !(c >= 0.0) || !(m >= 1.0) {
        return Err(Error::invalid(format!("need c >= 0 and m >= 1, got c={c}, m={m}")));
    }
    if !(eps > 0.0 && eps < ex) {
        return Err(Error::invalid(format!("eps must lie in (0, E[X]) = (0, {ex}), got {eps}")));
    }
    if ex2 < ex * ex {
        return Err(Error::invalid(format!("E[X²] = {ex2} is below E[X]² = {}", ex * ex)));
    }
    let cm2 = c * m * m;
    let first = ex2 / (m * eps * eps) * (1.0 + cm2 * (ex - eps).powi(2)).log2();
    let second = -(1.0 - cm2 * eps * (2.0 * ex - eps) / (1.0 + cm2 * ex * ex)).log2();
    Ok(first + second)
}

/// Monte Carlo `E[log₂(1 + c S_m²)]` with `S_m` a sum of `m` i.i.d. copies of
/// `X = √(2 − 2cos θ)`, `θ ~ U[0, 2π)`.
pub fn lemma4_lhs_mc(c: f64, m: usize, trials: u64, stream: &RandomStream) -> Result<RateEstimate> {
    if m == 0 || trials == 0 {
        return Err(Error::invalid("need m >= 1 and at least one trial"));
    }
    Ok(mc::estimate(trials, stream, |rng| {
        let s: f64 = (0..m).map(|_| (2.0 - 2.0 * (rng.random::<f64>() * TAU).cos()).sqrt()).sum();
        (1.0 + c * s * s).log2()
    }))
}

/// `lim_{m→∞} 2δ_m` along `c = P²/(1 + P(2M+2))` for uniform phase:
/// `−2 log₂(1 − ε(π/2 − π²ε/16))`.
pub fn uniform_delta_limit(eps: f64) -> f64 {
    -2.0 * (1.0 - eps * (PI / 2.0 - PI * PI * eps / 16.0)).log2()
}

/// Finite-`M` upper bound on the gap for uniform phase with `L = 2M+1`:
/// `2 log₂((1+P(4M+3)+P²(2M+1)(2M+2)) / (1+P(2M+2)+16P²M²/π²)) + 2δ_M`.
pub fn uniform_gap_bound(p: f64, pairs: usize, eps: f64) -> Result<f64> {
    let m = pairs as f64;
    let num = 1.0 + p * (4.0 * m + 3.0) + p * p * (2.0 * m + 1.0) * (2.0 * m + 2.0);
    let den = 1.0 + p * (2.0 * m + 2.0) + 16.0 / (PI * PI) * p * p * m * m;
    let c = p * p / (1.0 + p * (2.0 * m + 2.0));
    Ok(2.0 * (num / den).log2() + 2.0 * delta_m(c, m, UNIFORM_MEAN_ABS_DET, 2.0, eps)?)
}

/// `4 log₂ π − 4`, the large-`L` gap for uniform phase.
pub fn theorem4_limit() -> f64 {
    4.0 * PI.log2() - 4.0
}

/// `4 − 4 log₂ E[|det H₁|]`, the large-`L` gap for amplitude laws.
pub fn theorem5_limit(edet: f64) -> Result<f64> {
    if !(edet > 0.0 && edet <= 2.0) {
        return Err(Error::invalid(format!("E[|det|] must lie in (0, 2], got {edet}")));
    }
    Ok(4.0 - 4.0 * edet.log2())
}

/// `[E|det H₁|, E|det H₁|²]` for 2×2 blocks produced by `sample`.
pub fn abs_det_moments_with<F>(trials: u64, stream: &RandomStream, sample: F) -> [RateEstimate; 2]
where
    F: Fn(&mut StreamRng) -> Mat2 + Sync + Send,
{
    mc::estimate_many(trials, stream, |rng| {
        let d = det2(&sample(rng)).norm();
        [d, d * d]
    })
}

/// `E[|det H₁|]` over i.i.d. 2×2 draws from `model`.
pub fn expected_abs_det_mc(model: &FadingModel, trials: u64, stream: &RandomStream) -> Result<RateEstimate> {
    Ok(abs_det_moments_mc(model, trials, stream)?[0])
}

pub fn abs_det_moments_mc(model: &FadingModel, trials: u64, stream: &RandomStream) -> Result<[RateEstimate; 2]> {
    if trials == 0 {
        return Err(Error::invalid("at least one trial is required"));
    }
    Ok(abs_det_moments_with(trials, stream, |rng| ChannelMatrix::sample(model, Hop::First, 2, rng).block(0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    /// Constant 4 for two uniform-phase relays.
    Theorem2,
    /// Amplitude-law bound for two relays.
    Theorem3,
    /// `4 log₂ π − 4` as `L → ∞`, uniform phase.
    Theorem4Limit,
    /// `4 − 4 log₂ E|det H₁|` as `L → ∞`.
    Theorem5Limit,
}

impl BoundKind {
    pub fn label(&self) -> &'static str {
        match self {
            BoundKind::Theorem2 => "bound_t2",
            BoundKind::Theorem3 => "bound_t3",
            BoundKind::Theorem4Limit => "limit_t4",
            BoundKind::Theorem5Limit => "limit_t5",
        }
    }

    /// Whether the bound is guaranteed at finite `L` (limits are reference lines).
    pub fn is_finite_l_bound(&self) -> bool {
        matches!(self, BoundKind::Theorem2 | BoundKind::Theorem3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapReport {
    pub p: f64,
    pub relays: usize,
    pub gap_estimate: RateEstimate,
    pub bound: f64,
    pub bound_kind: BoundKind,
}

impl GapReport {
    /// `gap ≤ bound + k·SE`; always true for limit lines.
    pub fn within_bound(&self, k: f64) -> bool {
        !self.bound_kind.is_finite_l_bound() || self.gap_estimate.mean <= self.bound + k * self.gap_estimate.std_error
    }
}

/// The reference bound for `(model, L)`: the constant bounds for exactly two
/// relays, the large-`L` limits otherwise.
pub fn reference_bound(
    model: &FadingModel,
    relays: usize,
    trials: u64,
    stream: &RandomStream,
) -> Result<(f64, BoundKind)> {
    let uniform = matches!(model, FadingModel::UniformPhase);
    Ok(match (relays == 2, uniform) {
        (true, true) => (4.0, BoundKind::Theorem2),
        (true, false) => (theorem3_bound_mc(model, trials, stream)?.mean, BoundKind::Theorem3),
        (false, true) => (theorem4_limit(), BoundKind::Theorem4Limit),
        (false, false) => {
            let edet = match model {
                FadingModel::Rayleigh => RAYLEIGH_MEAN_ABS_DET,
                _ => expected_abs_det_mc(model, trials, stream)?.mean,
            };
            (theorem5_limit(edet)?, BoundKind::Theorem5Limit)
        }
    })
}

/// Gap `R_mimo − R_in` (paired estimate) for each relay count, with the
/// matching bound attached.
pub fn gap_vs_relays(
    model: &FadingModel,
    p: f64,
    relay_counts: &[usize],
    trials: u64,
    stream: &RandomStream,
) -> Result<Vec<GapReport>> {
    relay_counts
        .iter()
        .map(|&relays| {
            if relays < 2 {
                return Err(Error::invalid(format!("at least 2 relays are required, got {relays}")));
            }
            let s = stream.fork(relays as u64);
            let pair = rate_pair_mc(model, relays, p, trials, &s)?;
            let (bound, bound_kind) = reference_bound(model, relays, trials, &s.fork(0xB0))?;
            Ok(GapReport { p, relays, gap_estimate: pair.gap, bound, bound_kind })
        })
        .collect()
}
