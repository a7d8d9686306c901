//! Ergodic interference alignment on the K-user fading interference channel:
//! per-user achievable rate, pairwise sum-rate upper bound, and the
//! power-independent per-user gap.

use crate::error::{Error, Result};
use crate::fading::FadingModel;
use crate::mc::{self, RateEstimate};
use crate::stream::RandomStream;

#[derive(Debug, Clone)]
pub struct IcConfig {
    pub users: usize,
    pub p: f64,
    pub model: FadingModel,
}

impl IcConfig {
    pub fn new(users: usize, p: f64, model: FadingModel) -> Result<Self> {
        if users < 2 {
            return Err(Error::invalid(format!("interference channel needs at least 2 users, got {users}")));
        }
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::invalid(format!("power must be positive, got {p}")));
        }
        Ok(Self { users, p, model })
    }
}

fn require_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::invalid("at least one trial is required"));
    }
    Ok(())
}

/// Per-user rate `½ E[log₂(1 + 2|h|²P)]`; the sum rate is `users` times this.
pub fn rate_ia_mc(cfg: &IcConfig, trials: u64, stream: &RandomStream) -> Result<RateEstimate> {
    require_trials(trials)?;
    Ok(mc::estimate(trials, stream, |rng| {
        let h = cfg.model.sample(rng).norm_sqr();
        0.5 * (1.0 + 2.0 * h * cfg.p).log2()
    }))
}

/// Sum-rate bound for users 1 and 2:
/// `E[log₂(1 + (|h₁₂|² + |h₁₁|²)P / min{1, |h₁₂|²/|h₂₂|²})]`.
pub fn pairwise_upper_mc(cfg: &IcConfig, trials: u64, stream: &RandomStream) -> Result<RateEstimate> {
    require_trials(trials)?;
    Ok(mc::estimate(trials, stream, |rng| {
        let h11 = cfg.model.sample(rng).norm_sqr();
        let h12 = cfg.model.sample(rng).norm_sqr();
        let h22 = cfg.model.sample(rng).norm_sqr();
        let scale = (h12 / h22).min(1.0);
        (1.0 + (h12 + h11) * cfg.p / scale).log2()
    }))
}

/// `E|log₂(|h₁|²/|h₂|²)|` over independent coefficients.
pub fn abs_log_ratio_mc(model: &FadingModel, trials: u64, stream: &RandomStream) -> Result<RateEstimate> {
    require_trials(trials)?;
    Ok(mc::estimate(trials, stream, |rng| {
        let a = model.sample(rng).norm_sqr();
        let b = model.sample(rng).norm_sqr();
        (a / b).log2().abs()
    }))
}

/// Per-user gap `½ log₂(3/2) + ½ E|log₂(|h₁₁|²/|h₁₂|²)|`. It has no power
/// dependence.
pub fn theorem6_gap_mc(model: &FadingModel, trials: u64, stream: &RandomStream) -> Result<RateEstimate> {
    Ok(abs_log_ratio_mc(model, trials, stream)?.scaled(0.5).offset(0.5 * 1.5f64.log2()))
}

/// CDF of `|h₁|²/|h₂|²` for Rayleigh fading, whose density is `1/(x+1)²`.
pub fn rayleigh_ratio_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x / (1.0 + x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg(model: FadingModel, p: f64) -> IcConfig {
        IcConfig::new(3, p, model).unwrap()
    }

    #[test]
    fn uniform_phase_collapses() {
        let s = RandomStream::new(0);
        let r = rate_ia_mc(&cfg(FadingModel::UniformPhase, 1.0), 1000, &s).unwrap();
        assert_relative_eq!(r.mean, 0.5 * 3f64.log2(), epsilon = 1e-12);
        assert_relative_eq!(r.mean, 0.79248, epsilon = 1e-5);
        let u = pairwise_upper_mc(&cfg(FadingModel::UniformPhase, 1.0), 1000, &s).unwrap();
        assert_relative_eq!(u.mean, 3f64.log2(), epsilon = 1e-12);
        assert_relative_eq!(u.mean, 2.0 * r.mean, epsilon = 1e-12);
        let g = theorem6_gap_mc(&FadingModel::UniformPhase, 1000, &s).unwrap();
        assert_relative_eq!(g.mean, 0.5 * 1.5f64.log2(), epsilon = 1e-12);
    }

    #[test]
    fn low_power_rate_vanishes() {
        let r = rate_ia_mc(&cfg(FadingModel::Rayleigh, 1e-12), 1000, &RandomStream::new(0)).unwrap();
        assert!(r.mean < 1e-10);
    }

    #[test]
    fn rayleigh_rate_matches_quadrature() {
        // ½ ∫₀^∞ log₂(1 + 20x) e^{-x} dx by the midpoint rule on [0, 60]
        let n = 600_000;
        let h = 60.0 / n as f64;
        let oracle: f64 = (0..n)
            .map(|k| {
                let x = (k as f64 + 0.5) * h;
                0.5 * (1.0 + 20.0 * x).log2() * (-x).exp() * h
            })
            .sum();
        let r = rate_ia_mc(&cfg(FadingModel::Rayleigh, 10.0), 100_000, &RandomStream::new(17)).unwrap();
        assert!(r.agrees_with(oracle, 3.0), "{r:?} vs {oracle}");
    }

    #[test]
    fn ratio_cdf_shape() {
        assert_eq!(rayleigh_ratio_cdf(0.0), 0.0);
        assert_eq!(rayleigh_ratio_cdf(1.0), 0.5);
        assert!(rayleigh_ratio_cdf(1e9) > 0.999_999);
    }

    #[test]
    fn gap_ignores_power() {
        let s = RandomStream::new(4);
        let a = theorem6_gap_mc(&FadingModel::Rayleigh, 5000, &s).unwrap();
        let b = theorem6_gap_mc(&FadingModel::Rayleigh, 5000, &s).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn config_validation() {
        assert!(IcConfig::new(1, 1.0, FadingModel::Rayleigh).is_err());
        assert!(IcConfig::new(2, 0.0, FadingModel::Rayleigh).is_err());
        assert!(rate_ia_mc(&cfg(FadingModel::Rayleigh, 1.0), 0, &RandomStream::new(0)).is_err());
    }
}
