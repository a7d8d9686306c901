//! Monte Carlo estimation over independent trials.
//!
//! Trials are grouped in fixed-size chunks; each chunk is reduced
//! sequentially and chunk summaries are merged in index order. The result
//! therefore does not depend on the thread count, and the sequential
//! fallback is bit-identical to the parallel path.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::stream::{RandomStream, StreamRng};

/// Trials per reduction chunk.
pub const CHUNK_TRIALS: u64 = 1024;

/// Sample mean with its standard error (unbiased variance over `√trials`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
}

impl RateEstimate {
    pub fn new(mean: f64, std_error: f64, trials: u64) -> Self {
        debug_assert!(std_error >= 0.0 && trials >= 1);
        Self { mean, std_error, trials }
    }

    /// A value known exactly, reported with zero error.
    pub fn exact(value: f64, trials: u64) -> Self {
        Self::new(value, 0.0, trials.max(1))
    }

    /// Difference of two independent estimates; errors add in quadrature.
    pub fn minus(&self, other: &RateEstimate) -> RateEstimate {
        RateEstimate {
            mean: self.mean - other.mean,
            std_error: self.std_error.hypot(other.std_error),
            trials: self.trials.min(other.trials),
        }
    }

    pub fn scaled(&self, factor: f64) -> RateEstimate {
        RateEstimate { mean: self.mean * factor, std_error: self.std_error * factor.abs(), trials: self.trials }
    }

    pub fn offset(&self, shift: f64) -> RateEstimate {
        RateEstimate { mean: self.mean + shift, ..*self }
    }

    /// `|mean − target| ≤ k·SE`, with an absolute floor of `1e-12` so that
    /// deterministic estimates compare against exact targets.
    pub fn agrees_with(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_error + 1e-12
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        self.mean += d * other.n as f64 / n as f64;
        self.m2 += other.m2 + d * d * (self.n as f64 * other.n as f64 / n as f64);
        self.n = n;
    }

    fn estimate(&self) -> RateEstimate {
        let se = if self.n > 1 { (self.m2.max(0.0) / (self.n - 1) as f64 / self.n as f64).sqrt() } else { 0.0 };
        RateEstimate::new(self.mean, se, self.n.max(1))
    }
}

fn run_chunk<const K: usize, F>(chunk: u64, trials: u64, stream: &RandomStream, f: &F) -> [Moments; K]
where
    F: Fn(&mut StreamRng) -> [f64; K],
{
    let mut acc = [Moments::default(); K];
    let start = chunk * CHUNK_TRIALS;
    let end = (start + CHUNK_TRIALS).min(trials);
    for t in start..end {
        let mut rng = stream.substream(t);
        let xs = f(&mut rng);
        for (a, x) in acc.iter_mut().zip(xs) {
            a.push(x);
        }
    }
    acc
}

fn finish<const K: usize>(chunks: impl Iterator<Item = [Moments; K]>) -> [RateEstimate; K] {
    let mut total = [Moments::default(); K];
    for c in chunks {
        for (t, m) in total.iter_mut().zip(c.iter()) {
            t.merge(m);
        }
    }
    total.map(|m| m.estimate())
}

fn chunk_count(trials: u64) -> u64 {
    trials.div_ceil(CHUNK_TRIALS)
}

/// Estimates `K` quantities jointly; trial `t` uses `stream.substream(t)`.
pub fn estimate_many<const K: usize, F>(trials: u64, stream: &RandomStream, f: F) -> [RateEstimate; K]
where
    F: Fn(&mut StreamRng) -> [f64; K] + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        let chunks: Vec<[Moments; K]> =
            (0..chunk_count(trials)).into_par_iter().map(|c| run_chunk(c, trials, stream, &f)).collect();
        finish(chunks.into_iter())
    }
    #[cfg(not(feature = "parallel"))]
    {
        estimate_many_sequential(trials, stream, f)
    }
}

/// Single-threaded path; always available so the two can be compared.
pub fn estimate_many_sequential<const K: usize, F>(trials: u64, stream: &RandomStream, f: F) -> [RateEstimate; K]
where
    F: Fn(&mut StreamRng) -> [f64; K],
{
    finish((0..chunk_count(trials)).map(|c| run_chunk(c, trials, stream, &f)))
}

pub fn estimate<F>(trials: u64, stream: &RandomStream, f: F) -> RateEstimate
where
    F: Fn(&mut StreamRng) -> f64 + Sync + Send,
{
    let [e] = estimate_many(trials, stream, |rng| [f(rng)]);
    e
}

pub fn estimate_sequential<F>(trials: u64, stream: &RandomStream, f: F) -> RateEstimate
where
    F: Fn(&mut StreamRng) -> f64,
{
    let [e] = estimate_many_sequential(trials, stream, |rng| [f(rng)]);
    e
}

/// `f(i, substream(i))` for `i in 0..n`, in index order.
pub fn map_indexed<T, F>(n: u64, stream: &RandomStream, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut StreamRng) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(|i| f(i, &mut stream.substream(i))).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(|i| f(i, &mut stream.substream(i))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn mean_and_error_of_known_sample() {
        // x_t = t for t = 0..n: mean (n-1)/2, variance n(n+1)/12
        let n = 5000u64;
        let s = RandomStream::new(0);
        let est = estimate_many_sequential(n, &s, |_rng| [0.0]);
        assert_eq!(est[0].mean, 0.0);
        assert_eq!(est[0].std_error, 0.0);

        let mut m = Moments::default();
        for t in 0..n {
            m.push(t as f64);
        }
        let e = m.estimate();
        assert!((e.mean - (n - 1) as f64 / 2.0).abs() < 1e-9);
        let var = n as f64 * (n + 1) as f64 / 12.0;
        assert!((e.std_error - (var / n as f64).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn merge_matches_single_pass() {
        let xs: Vec<f64> = (0..3000).map(|i| ((i * 37) % 101) as f64 * 0.25).collect();
        let mut whole = Moments::default();
        xs.iter().for_each(|&x| whole.push(x));
        let mut parts = Moments::default();
        for chunk in xs.chunks(700) {
            let mut p = Moments::default();
            chunk.iter().for_each(|&x| p.push(x));
            parts.merge(&p);
        }
        assert!((whole.mean - parts.mean).abs() < 1e-12);
        assert!((whole.m2 - parts.m2).abs() < 1e-6);
    }

    #[test]
    fn parallel_equals_sequential() {
        let s = RandomStream::new(2024);
        let f = |rng: &mut StreamRng| {
            let u: f64 = rng.random();
            [u, u * u]
        };
        let a = estimate_many(10_001, &s, f);
        let b = estimate_many_sequential(10_001, &s, f);
        assert_eq!(a, b);
        assert_eq!(a[0].trials, 10_001);
        assert!(a[0].agrees_with(0.5, 4.0));
        assert!(a[1].agrees_with(1.0 / 3.0, 4.0));
    }

    #[test]
    fn single_trial_has_zero_error() {
        let e = estimate(1, &RandomStream::new(1), |_| 3.5);
        assert_eq!(e, RateEstimate::new(3.5, 0.0, 1));
    }

    #[test]
    fn map_indexed_is_ordered() {
        let s = RandomStream::new(8);
        let v = map_indexed(100, &s, |i, rng| (i, rng.random::<u32>()));
        for (k, (i, x)) in v.iter().enumerate() {
            assert_eq!(*i, k as u64);
            assert_eq!(*x, s.substream(k as u64).random::<u32>());
        }
    }
}
