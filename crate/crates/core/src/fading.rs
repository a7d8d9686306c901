//! Fading laws, channel matrices of the two hops, and the `F` map that
//! pairs a first-hop realization with the second-hop one that neutralizes it.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};
use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{f2_map, CMatrix, Complex, Mat2};
use crate::stream::RandomStream;

/// Draws used to check that a user-supplied amplitude law has unit power.
pub const AMPLITUDE_CHECK_DRAWS: u64 = 100_000;
/// Relative tolerance on the empirical `E[|x|^2]` of an amplitude law.
pub const AMPLITUDE_CHECK_TOLERANCE: f64 = 0.05;

type AmplitudeFn = dyn Fn(&mut dyn RngCore) -> f64 + Send + Sync;

/// Amplitude sampler `|x|` paired with a uniform phase.
#[derive(Clone)]
pub struct AmplitudeLaw {
    name: String,
    sampler: Arc<AmplitudeFn>,
}

impl AmplitudeLaw {
    /// Wraps `sampler` after checking `E[|x|^2] ≈ 1` on a fixed internal stream.
    pub fn new(
        name: impl Into<String>,
        sampler: impl Fn(&mut dyn RngCore) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let law = Self { name: name.into(), sampler: Arc::new(sampler) };
        let mut rng = RandomStream::new(0x5EED_A3F1).substream(0);
        let mut sum = 0.0;
        for _ in 0..AMPLITUDE_CHECK_DRAWS {
            let a = law.sample(&mut rng);
            if !a.is_finite() || a < 0.0 {
                return Err(Error::invalid(format!("amplitude sample {a} is not a finite nonnegative real")));
            }
            sum += a * a;
        }
        let second_moment = sum / AMPLITUDE_CHECK_DRAWS as f64;
        if (second_moment - 1.0).abs() > AMPLITUDE_CHECK_TOLERANCE {
            return Err(Error::NotUnitPower { second_moment });
        }
        Ok(law)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        (self.sampler)(&mut RngAdapter(rng))
    }
}

struct RngAdapter<'a, R: ?Sized>(&'a mut R);

impl<R: Rng + ?Sized> RngCore for RngAdapter<'_, R> {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

impl fmt::Debug for AmplitudeLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AmplitudeLaw").field("name", &self.name).finish_non_exhaustive()
    }
}

/// Distribution of i.i.d. channel coefficients. Every variant has a phase
/// uniform on `[0, 2π)` and unit second moment.
#[derive(Debug, Clone)]
pub enum FadingModel {
    /// `exp(jθ)`, `θ ~ U[0, 2π)`.
    UniformPhase,
    /// Circularly symmetric `CN(0, 1)`.
    Rayleigh,
    AmplitudeLaw(AmplitudeLaw),
}

impl FadingModel {
    pub fn name(&self) -> &str {
        match self {
            FadingModel::UniformPhase => "uniform-phase",
            FadingModel::Rayleigh => "rayleigh",
            FadingModel::AmplitudeLaw(law) => law.name(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex {
        match self {
            FadingModel::UniformPhase => Complex::from_polar(1.0, rng.random::<f64>() * TAU),
            FadingModel::Rayleigh => {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
            }
            FadingModel::AmplitudeLaw(law) => {
                let a = law.sample(rng);
                Complex::from_polar(a, rng.random::<f64>() * TAU)
            }
        }
    }

    /// Draws `|x|` only.
    pub fn sample_amplitude<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            FadingModel::UniformPhase => 1.0,
            FadingModel::Rayleigh => {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                (0.5 * (re * re + im * im)).sqrt()
            }
            FadingModel::AmplitudeLaw(law) => law.sample(rng),
        }
    }
}

impl std::str::FromStr for FadingModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform-phase" | "uniform" => Ok(FadingModel::UniformPhase),
            "rayleigh" => Ok(FadingModel::Rayleigh),
            other => Err(Error::invalid(format!("unknown fading model '{other}'"))),
        }
    }
}

/// Matrix of i.i.d. draws from `model`, filled row-major from `rng`.
pub fn sample_matrix<R: Rng + ?Sized>(model: &FadingModel, rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| model.sample(rng))
}

/// Which hop a channel matrix describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Hop {
    /// Sources to relays, `L × 2`.
    First,
    /// Relays to destinations, `2 × L`.
    Second,
}

impl Hop {
    pub fn dims(self, relays: usize) -> (usize, usize) {
        match self {
            Hop::First => (relays, 2),
            Hop::Second => (2, relays),
        }
    }
}

/// Channel matrix of one hop at one time index.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    hop: Hop,
    inner: CMatrix,
}

impl ChannelMatrix {
    pub fn new(hop: Hop, inner: CMatrix) -> Result<Self> {
        let ok = match hop {
            Hop::First => inner.cols() == 2,
            Hop::Second => inner.rows() == 2,
        };
        if !ok || inner.rows() == 0 || inner.cols() == 0 {
            let (r, c) = inner.dims();
            return Err(Error::DimensionMismatch {
                expected: format!("{hop:?} hop shape"),
                actual: format!("{r}x{c}"),
            });
        }
        Ok(Self { hop, inner })
    }

    pub fn sample<R: Rng + ?Sized>(model: &FadingModel, hop: Hop, relays: usize, rng: &mut R) -> Self {
        let (rows, cols) = hop.dims(relays);
        Self { hop, inner: sample_matrix(model, rows, cols, rng) }
    }

    /// Stacks 2×2 blocks; for the first hop they are placed vertically,
    /// for the second hop horizontally.
    pub fn from_blocks(hop: Hop, blocks: &[Mat2]) -> Self {
        let relays = 2 * blocks.len();
        let (rows, cols) = hop.dims(relays);
        let inner = CMatrix::from_fn(rows, cols, |r, c| match hop {
            Hop::First => blocks[r / 2].0[r % 2][c],
            Hop::Second => blocks[c / 2].0[r][c % 2],
        });
        Self { hop, inner }
    }

    pub fn hop(&self) -> Hop {
        self.hop
    }

    pub fn relays(&self) -> usize {
        match self.hop {
            Hop::First => self.inner.rows(),
            Hop::Second => self.inner.cols(),
        }
    }

    /// Number of relay pairs `M = ⌊L/2⌋`.
    pub fn pairs(&self) -> usize {
        self.relays() / 2
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.inner
    }

    pub fn into_matrix(self) -> CMatrix {
        self.inner
    }

    pub fn get(&self, r: usize, c: usize) -> Complex {
        self.inner.get(r, c)
    }

    /// The 2×2 block of pair `m` (0-based): rows `2m, 2m+1` of the first hop,
    /// columns `2m, 2m+1` of the second.
    pub fn block(&self, m: usize) -> Mat2 {
        let i = 2 * m;
        match self.hop {
            Hop::First => Mat2([[self.get(i, 0), self.get(i, 1)], [self.get(i + 1, 0), self.get(i + 1, 1)]]),
            Hop::Second => Mat2([[self.get(0, i), self.get(0, i + 1)], [self.get(1, i), self.get(1, i + 1)]]),
        }
    }

    pub fn blocks(&self) -> impl Iterator<Item = Mat2> + '_ {
        (0..self.pairs()).map(|m| self.block(m))
    }

    /// Keeps only relays `0..2m`.
    pub fn truncate_pairs(&self, m: usize) -> Result<Self> {
        if 2 * m > self.relays() {
            return Err(Error::invalid(format!("{} relays cannot host {m} pairs", self.relays())));
        }
        let blocks: Vec<Mat2> = (0..m).map(|k| self.block(k)).collect();
        Ok(Self::from_blocks(self.hop, &blocks))
    }
}

/// First- and second-hop blocks of one relay pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairBlock {
    pub h: Mat2,
    pub g: Mat2,
}

/// `F(A) = [F₂(A₁), …, F₂(A_M)]` over the first `2M` rows of `h`.
pub fn f_map(h: &ChannelMatrix, pairs: usize) -> Result<ChannelMatrix> {
    if h.hop() != Hop::First {
        return Err(Error::invalid("F is defined on first-hop matrices"));
    }
    if pairs == 0 || h.relays() < 2 * pairs {
        return Err(Error::invalid(format!("{} relays cannot host {pairs} pairs", h.relays())));
    }
    let blocks: Vec<Mat2> = (0..pairs).map(|m| f2_map(&h.block(m))).collect();
    Ok(ChannelMatrix::from_blocks(Hop::Second, &blocks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::det2;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn c(re: f64) -> Complex {
        Complex::new(re, 0.0)
    }

    #[test]
    fn uniform_phase_is_unit_modulus() {
        let mut rng = RandomStream::new(1).substream(0);
        for _ in 0..1000 {
            let m = sample_matrix(&FadingModel::UniformPhase, 2, 2, &mut rng);
            assert!(m.entries().iter().all(|z| (z.norm() - 1.0).abs() < 1e-15));
        }
    }

    fn second_moment_check(model: &FadingModel) {
        let n = 1_000_000u64;
        let mut rng = RandomStream::new(11).substream(5);
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let p = model.sample(&mut rng).norm_sqr();
            s += p;
            s2 += p * p;
        }
        let mean = s / n as f64;
        let var = (s2 - n as f64 * mean * mean) / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!((mean - 1.0).abs() <= 3.0 * se.max(1e-15), "{}: mean {mean} se {se}", model.name());
    }

    #[test]
    fn unit_second_moment() {
        second_moment_check(&FadingModel::Rayleigh);
        second_moment_check(&FadingModel::UniformPhase);
        let exp_law = AmplitudeLaw::new("exp-power", |rng: &mut dyn RngCore| {
            let u: f64 = rng.random();
            (-(1.0 - u).ln()).sqrt()
        })
        .unwrap();
        second_moment_check(&FadingModel::AmplitudeLaw(exp_law));
    }

    #[test]
    fn rayleigh_phase_is_uniform() {
        const BINS: usize = 36;
        let n = 1_000_000u64;
        let mut rng = RandomStream::new(3).substream(0);
        let mut hist = [0u64; BINS];
        for _ in 0..n {
            let z = FadingModel::Rayleigh.sample(&mut rng);
            let a = z.arg().rem_euclid(TAU);
            hist[((a / TAU * BINS as f64) as usize).min(BINS - 1)] += 1;
        }
        let expected = n as f64 / BINS as f64;
        let chi2: f64 = hist.iter().map(|&o| (o as f64 - expected).powi(2) / expected).sum();
        let critical = ChiSquared::new((BINS - 1) as f64).unwrap().inverse_cdf(0.99);
        assert!(chi2 < critical, "chi2 {chi2} >= {critical}");
    }

    #[test]
    fn amplitude_law_rejects_wrong_power() {
        let err = AmplitudeLaw::new("double", |_rng: &mut dyn RngCore| 2.0).unwrap_err();
        assert!(matches!(err, Error::NotUnitPower { .. }));
        assert!(AmplitudeLaw::new("unit", |_rng: &mut dyn RngCore| 1.0).is_ok());
    }

    #[test]
    fn sampling_is_reproducible() {
        let s = RandomStream::new(99);
        for model in [FadingModel::UniformPhase, FadingModel::Rayleigh] {
            let a = sample_matrix(&model, 4, 2, &mut s.substream(17));
            let b = sample_matrix(&model, 4, 2, &mut s.substream(17));
            assert_eq!(a, b);
        }
    }

    #[test]
    fn f_map_examples() {
        let a1 = Mat2::from_real([[1.0, 2.0], [3.0, 4.0]]);
        let a2 = Mat2::from_real([[5.0, 6.0], [7.0, 8.0]]);
        let h = ChannelMatrix::from_blocks(Hop::First, &[a1, a2]);
        let g = f_map(&h, 2).unwrap();
        assert_eq!(g.matrix().dims(), (2, 4));
        assert_eq!(g.block(0), f2_map(&a1));
        assert_eq!(g.block(1), f2_map(&a2));
        let top = f_map(&h, 1).unwrap();
        assert_eq!(top.matrix().dims(), (2, 2));
        assert_eq!(top.block(0), Mat2::from_real([[4.0, 2.0], [3.0, 1.0]]));
        assert_eq!(det2(&top.block(0)), c(-2.0));
    }

    #[test]
    fn f_map_ignores_odd_relay() {
        let mut rng = RandomStream::new(5).substream(0);
        let h5 = ChannelMatrix::sample(&FadingModel::Rayleigh, Hop::First, 5, &mut rng);
        let h4 = h5.truncate_pairs(2).unwrap();
        assert_eq!(f_map(&h5, 2).unwrap(), f_map(&h4, 2).unwrap());
        assert!(f_map(&h4, 3).is_err());
    }

    #[test]
    fn channel_matrix_shape_checked() {
        assert!(ChannelMatrix::new(Hop::First, CMatrix::zeros(3, 2)).is_ok());
        assert!(ChannelMatrix::new(Hop::First, CMatrix::zeros(2, 3)).is_err());
        assert!(ChannelMatrix::new(Hop::Second, CMatrix::zeros(2, 3)).is_ok());
        assert!(ChannelMatrix::new(Hop::Second, CMatrix::zeros(3, 2)).is_err());
    }
}
