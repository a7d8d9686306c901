//! Amplify-and-forward relaying with pairwise interference neutralization.
//!
//! Relay pair `m` forwards with gains `γ·u_m·Λ`, `u_m = det(Q_m)*/|det(Q_m)|`
//! and `Λ = diag(1, −1)`. When the second hop equals `F(H)`, each pair
//! contributes `γ|det H_m|Λ` to the end-to-end channel and the cross terms
//! cancel.

use rand::Rng;

use crate::error::{Error, Result};
use crate::fading::{f_map, ChannelMatrix, FadingModel, Hop};
use crate::linalg::{det2, CMatrix, Complex, Mat2};
use crate::mc;
use crate::pairing::{index_sets_from_cells, match_pairs, Quantizer};
use crate::stream::RandomStream;

/// Pairs whose center block has `|det| ≤ DET_FLOOR` cannot define `u_m`.
pub const DET_FLOOR: f64 = 1e-9;

/// Amplification magnitude `γ = √(P/(1+2P))` meeting the relay power
/// constraint with unit-power channels.
pub fn gamma_factor(p: f64) -> f64 {
    (p / (1.0 + 2.0 * p)).sqrt()
}

/// Block-diagonal relay gain matrix `Γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelayGains {
    gamma: f64,
    phases: Vec<Complex>,
}

impl RelayGains {
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn pairs(&self) -> usize {
        self.phases.len()
    }

    /// `u_m`, unit modulus.
    pub fn phase(&self, m: usize) -> Complex {
        self.phases[m]
    }

    /// Gains of relays `2m` and `2m+1`: `(+γu_m, −γu_m)`.
    pub fn pair_gains(&self, m: usize) -> (Complex, Complex) {
        let g = self.phases[m] * self.gamma;
        (g, -g)
    }

    /// The dense `2M × 2M` matrix.
    pub fn matrix(&self) -> CMatrix {
        let n = 2 * self.pairs();
        CMatrix::from_fn(n, n, |r, c| {
            if r != c {
                return Complex::new(0.0, 0.0);
            }
            let (a, b) = self.pair_gains(r / 2);
            if r % 2 == 0 {
                a
            } else {
                b
            }
        })
    }
}

/// `Γ` built from the `M` blocks of `center` (a first-hop matrix with `2M`
/// rows; extra rows are ignored only if `center` has odd length).
pub fn relay_gain_matrix(center: &ChannelMatrix, p: f64) -> Result<RelayGains> {
    if center.hop() != Hop::First {
        return Err(Error::invalid("relay gains are computed from a first-hop matrix"));
    }
    if p < 0.0 {
        return Err(Error::invalid(format!("power must be nonnegative, got {p}")));
    }
    let phases = center
        .blocks()
        .enumerate()
        .map(|(m, block)| {
            let d = det2(&block);
            let abs_det = d.norm();
            if abs_det <= DET_FLOOR {
                Err(Error::DegenerateCell { pair: m, abs_det })
            } else {
                Ok(d.conj() / abs_det)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RelayGains { gamma: gamma_factor(p), phases })
}

fn check_shapes(h: &ChannelMatrix, g: &ChannelMatrix, gains: &RelayGains) -> Result<()> {
    let m = gains.pairs();
    if h.hop() != Hop::First || g.hop() != Hop::Second || h.pairs() < m || g.pairs() < m || m == 0 {
        return Err(Error::DimensionMismatch {
            expected: format!("first hop with {} rows and second hop with {} columns", 2 * m, 2 * m),
            actual: format!("{:?} {:?} / {:?} {:?}", h.hop(), h.matrix().dims(), g.hop(), g.matrix().dims()),
        });
    }
    Ok(())
}

/// End-to-end matrix `GΓH` over the relays used by `gains`.
pub fn effective_channel(g: &ChannelMatrix, gains: &RelayGains, h: &ChannelMatrix) -> Result<Mat2> {
    check_shapes(h, g, gains)?;
    let mut out = Mat2::default();
    for m in 0..gains.pairs() {
        let (a, b) = gains.pair_gains(m);
        let gm = g.block(m);
        let hm = h.block(m);
        for r in 0..2 {
            for c in 0..2 {
                out.0[r][c] += gm.0[r][0] * a * hm.0[0][c] + gm.0[r][1] * b * hm.0[1][c];
            }
        }
    }
    Ok(out)
}

/// Per-destination signal-to-interference-and-noise ratios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrPair {
    pub sinr1: f64,
    pub sinr2: f64,
}

impl SinrPair {
    pub fn get(&self, dest: usize) -> f64 {
        match dest {
            1 => self.sinr1,
            2 => self.sinr2,
            _ => panic!("destination index must be 1 or 2, got {dest}"),
        }
    }

    /// `(log₂(1+SINR₁), log₂(1+SINR₂))`.
    pub fn rates(&self) -> (f64, f64) {
        ((1.0 + self.sinr1).log2(), (1.0 + self.sinr2).log2())
    }
}

/// SINR at both destinations for first hop `h`, second hop `g` and relay
/// gains `gains` (typically built from a quantization center):
///
/// `SINR_i = P|[GΓH]_ii|² / (1 + ‖row_i(GΓ)‖² + P|[GΓH]_{i,3−i}|²)`.
///
/// The relay-noise term `‖row_i(GΓ)‖²` carries `γ²`; writing `G = F(H) + Δ`
/// recovers the residual-interference form with `Δ`.
pub fn sinr_exact(h: &ChannelMatrix, g: &ChannelMatrix, gains: &RelayGains, p: f64) -> Result<SinrPair> {
    let e = effective_channel(g, gains, h)?;
    let gamma2 = gains.gamma() * gains.gamma();
    let mut noise = [0.0f64; 2];
    for m in 0..gains.pairs() {
        let gm = g.block(m);
        for (i, n) in noise.iter_mut().enumerate() {
            *n += gamma2 * (gm.0[i][0].norm_sqr() + gm.0[i][1].norm_sqr());
        }
    }
    let sinr = |i: usize| p * e.0[i][i].norm_sqr() / (1.0 + noise[i] + p * e.0[i][1 - i].norm_sqr());
    Ok(SinrPair { sinr1: sinr(0), sinr2: sinr(1) })
}

/// [`sinr_exact`] with `Γ` evaluated at `h` itself (the `Δ → 0` center).
pub fn sinr_at_realization(h: &ChannelMatrix, g: &ChannelMatrix, p: f64) -> Result<SinrPair> {
    let pairs = g.pairs().min(h.pairs());
    let gains = relay_gain_matrix(&h.truncate_pairs(pairs)?, p)?;
    sinr_exact(h, g, &gains, p)
}

/// Amplified relay noise at destination `dest ∈ {1, 2}`:
/// `σ²_AF,i = γ² Σ_m (|h_{2(m−1)+3−i, 3−i}|² + |h_{2(m−1)+i, 3−i}|²)`.
pub fn relay_noise(h: &ChannelMatrix, p: f64, dest: usize) -> f64 {
    assert!(dest == 1 || dest == 2, "destination index must be 1 or 2");
    let gamma2 = gamma_factor(p).powi(2);
    // 0-based: column 2-i, rows 2m + (2-i) and 2m + (i-1)
    let col = 2 - dest;
    (0..h.pairs())
        .map(|m| h.get(2 * m + 2 - dest, col).norm_sqr() + h.get(2 * m + dest - 1, col).norm_sqr())
        .sum::<f64>()
        * gamma2
}

/// `Σ_m |det H_m|`.
pub fn det_sum(h: &ChannelMatrix) -> f64 {
    h.blocks().map(|b| det2(&b).norm()).sum()
}

/// Limit SINR with perfect pairing:
/// `Pγ²(Σ|det H_m|)² / (1 + σ²_AF,i)`.
pub fn asymptotic_sinr(h: &ChannelMatrix, p: f64, dest: usize) -> f64 {
    let s = det_sum(h);
    p * gamma_factor(p).powi(2) * s * s / (1.0 + relay_noise(h, p, dest))
}

/// Transmit power of every relay given first hop `h`, averaged over unit-power
/// Gaussian source symbols and relay noise: `γ²(P(|h_j1|² + |h_j2|²) + 1)`.
pub fn relay_transmit_power(h: &ChannelMatrix, p: f64) -> Vec<f64> {
    let gamma2 = gamma_factor(p).powi(2);
    (0..2 * h.pairs()).map(|j| gamma2 * (p * (h.get(j, 0).norm_sqr() + h.get(j, 1).norm_sqr()) + 1.0)).collect()
}

/// How per-pair rates are scored in [`simulate_block`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RateEstimator {
    /// SINR of the realized first/second-hop pair.
    #[default]
    Realized,
    /// Minimum of the realized SINR and the SINR at `probes` random corners
    /// of the first-hop cell.
    CellMin { probes: usize },
}

/// Outcome of one simulated block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockOutcome {
    pub rate1: f64,
    pub rate2: f64,
    /// Pairs that carried traffic over `n_B`.
    pub matched_fraction: f64,
    /// Pairs dropped because their cell center was singular.
    pub degenerate_pairs: usize,
}

#[derive(Debug, Clone)]
pub struct BlockConfig {
    pub model: FadingModel,
    pub relays: usize,
    pub power: f64,
    pub block_length: usize,
    pub estimator: RateEstimator,
}

/// Simulates one sub-block of length `n_B`: draw both hops, quantize,
/// match `𝒯₁(Q)` with `𝒯₂(F(Q))`, and average `log₂(1+SINR_i)` over
/// `n_B` (unmatched slots contribute zero). `quant` describes the first-hop
/// partition over `2M` relays.
pub fn simulate_block(cfg: &BlockConfig, quant: &Quantizer, stream: &RandomStream) -> Result<BlockOutcome> {
    let pairs = cfg.relays / 2;
    if pairs == 0 || cfg.block_length == 0 {
        return Err(Error::invalid("simulation needs at least 2 relays and n_B >= 1"));
    }
    if quant.hop() != Hop::First || quant.relays() != 2 * pairs {
        return Err(Error::DimensionMismatch {
            expected: format!("first-hop quantizer over {} relays", 2 * pairs),
            actual: format!("{:?} quantizer over {} relays", quant.hop(), quant.relays()),
        });
    }
    let q2 = quant.for_hop(Hop::Second);
    let n = cfg.block_length as u64;

    // relays beyond 2M are sampled but not used
    let draw = |hop: Hop, q: Quantizer, label: u64| -> Result<(Vec<ChannelMatrix>, Vec<Option<_>>)> {
        let drawn = mc::map_indexed(n, &stream.fork(label), |_, rng| {
            let full = ChannelMatrix::sample(&cfg.model, hop, cfg.relays, rng);
            let used = full.truncate_pairs(pairs)?;
            let cell = q.quantize(&used)?;
            Ok::<_, Error>((used, cell))
        });
        let drawn = drawn.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(drawn.into_iter().unzip())
    };
    let (first, cells1) = draw(Hop::First, *quant, 1)?;
    let (second, cells2) = draw(Hop::Second, q2, 2)?;
    let cells1_lookup = cells1.clone();
    let sets1 = index_sets_from_cells(cells1);
    let sets2 = index_sets_from_cells(cells2);
    let pairs_t = match_pairs(&sets1, &sets2)?;

    let probe_stream = stream.fork(3);
    let scored = mc::map_indexed(pairs_t.len() as u64, &probe_stream, |k, rng| -> Result<Option<(f64, f64)>> {
        let (t1, t2) = pairs_t[k as usize];
        let cell = cells1_lookup[t1 - 1].as_ref().expect("matched index has a cell");
        let center = quant.center(cell)?;
        let gains = match relay_gain_matrix(&center, cfg.power) {
            Ok(g) => g,
            Err(Error::DegenerateCell { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        let (h, g) = (&first[t1 - 1], &second[t2 - 1]);
        let mut best = sinr_exact(h, g, &gains, cfg.power)?.rates();
        if let RateEstimator::CellMin { probes } = cfg.estimator {
            for _ in 0..probes {
                let corner = quant.random_corner(cell, rng)?;
                let r = sinr_exact(&corner, g, &gains, cfg.power)?.rates();
                best = (best.0.min(r.0), best.1.min(r.1));
            }
        }
        Ok(Some(best))
    });

    let mut rate = (0.0, 0.0);
    let mut used = 0usize;
    let mut degenerate = 0usize;
    for s in scored {
        match s? {
            Some((r1, r2)) => {
                rate.0 += r1;
                rate.1 += r2;
                used += 1;
            }
            None => degenerate += 1,
        }
    }
    let nb = cfg.block_length as f64;
    Ok(BlockOutcome {
        rate1: rate.0 / nb,
        rate2: rate.1 / nb,
        matched_fraction: used as f64 / nb,
        degenerate_pairs: degenerate,
    })
}

/// Second-hop matrix `F(h) + scale·Δ` with `Δ` drawn entrywise `CN(0,1)`.
pub fn perturbed_image<R: Rng + ?Sized>(h: &ChannelMatrix, scale: f64, rng: &mut R) -> Result<ChannelMatrix> {
    let mut g = f_map(h, h.pairs())?.into_matrix();
    for z in g.entries_mut() {
        *z += FadingModel::Rayleigh.sample(rng) * scale;
    }
    ChannelMatrix::new(Hop::Second, g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn first(blocks: &[Mat2]) -> ChannelMatrix {
        ChannelMatrix::from_blocks(Hop::First, blocks)
    }

    #[test]
    fn gamma_examples() {
        assert_eq!(gamma_factor(0.0), 0.0);
        assert_relative_eq!(gamma_factor(1.0), 1.0 / 3f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(gamma_factor(1.0), 0.577350, epsilon = 1e-6);
        assert!((gamma_factor(1e12) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
        let mut prev = 0.0;
        for k in 0..40 {
            let g = gamma_factor(10f64.powf(k as f64 / 4.0 - 3.0));
            assert!(g > prev);
            prev = g;
        }
    }

    #[test]
    fn gains_examples() {
        let gamma = 1.0 / 3f64.sqrt();
        let g = relay_gain_matrix(&first(&[Mat2::identity()]), 1.0).unwrap();
        let (a, b) = g.pair_gains(0);
        assert_relative_eq!(a.re, gamma, epsilon = 1e-15);
        assert_relative_eq!(b.re, -gamma, epsilon = 1e-15);

        let g = relay_gain_matrix(&first(&[Mat2::from_real([[1.0, 1.0], [1.0, -1.0]])]), 1.0).unwrap();
        assert_relative_eq!(g.phase(0).re, -1.0, epsilon = 1e-15);
        let (a, b) = g.pair_gains(0);
        assert_relative_eq!(a.re, -gamma, epsilon = 1e-15);
        assert_relative_eq!(b.re, gamma, epsilon = 1e-15);

        let dense = g.matrix();
        assert_eq!(dense.dims(), (2, 2));
        assert_eq!(dense.get(0, 1), Complex::new(0.0, 0.0));

        let singular = first(&[Mat2::from_real([[1.0, 1.0], [1.0, 1.0]])]);
        assert!(matches!(relay_gain_matrix(&singular, 1.0), Err(Error::DegenerateCell { pair: 0, .. })));
    }

    #[test]
    fn gain_matrix_is_block_diagonal_with_magnitude_gamma() {
        let s = RandomStream::new(12);
        let h = ChannelMatrix::sample(&FadingModel::Rayleigh, Hop::First, 6, &mut s.substream(0));
        let g = relay_gain_matrix(&h, 3.0).unwrap();
        let dense = g.matrix();
        for r in 0..6 {
            for c in 0..6 {
                let z = dense.get(r, c);
                if r == c {
                    assert_relative_eq!(z.norm(), gamma_factor(3.0), epsilon = 1e-14);
                } else {
                    assert_eq!(z.norm(), 0.0);
                }
            }
        }
    }

    #[test]
    fn identity_block_neutralizes() {
        let h = first(&[Mat2::identity()]);
        let g = f_map(&h, 1).unwrap();
        let gains = relay_gain_matrix(&h, 1.0).unwrap();
        let e = effective_channel(&g, &gains, &h).unwrap();
        let gamma = gamma_factor(1.0);
        assert_relative_eq!(e.0[0][0].re, gamma, epsilon = 1e-15);
        assert_relative_eq!(e.0[1][1].re, -gamma, epsilon = 1e-15);
        assert_eq!(e.off_diagonal_max(), 0.0);
    }

    #[test]
    fn effective_channel_matches_dense_product() {
        let s = RandomStream::new(77);
        let h = ChannelMatrix::sample(&FadingModel::Rayleigh, Hop::First, 4, &mut s.substream(0));
        let g = ChannelMatrix::sample(&FadingModel::Rayleigh, Hop::Second, 4, &mut s.substream(1));
        let gains = relay_gain_matrix(&h, 2.0).unwrap();
        let dense = g.matrix().matmul(&gains.matrix()).unwrap().matmul(h.matrix()).unwrap();
        let e = effective_channel(&g, &gains, &h).unwrap();
        for r in 0..2 {
            for c in 0..2 {
                assert!((dense.get(r, c) - e.0[r][c]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn unit_modulus_sinr_hand_value() {
        // θ = π: |det|² = 4, γ² = 1/3, SINR = 4Pγ²/(1 + 2γ²) = 0.8
        let h = first(&[Mat2::from_real([[1.0, 1.0], [1.0, -1.0]])]);
        let g = f_map(&h, 1).unwrap();
        let s = sinr_at_realization(&h, &g, 1.0).unwrap();
        assert_relative_eq!(s.sinr1, 0.8, epsilon = 1e-14);
        assert_relative_eq!(s.sinr2, 0.8, epsilon = 1e-14);
        assert_relative_eq!(asymptotic_sinr(&h, 1.0, 1), 0.8, epsilon = 1e-14);
        // σ²_AF = 2P/(1+2P)
        assert_relative_eq!(relay_noise(&h, 1.0, 1), 2.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(relay_noise(&h, 1.0, 2), 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_channel_gives_zero_sinr() {
        let h = first(&[Mat2::default()]);
        assert_eq!(asymptotic_sinr(&h, 5.0, 1), 0.0);
        assert_eq!(asymptotic_sinr(&h, 5.0, 2), 0.0);
    }

    #[test]
    fn relay_noise_uses_paired_column_entries() {
        // σ²_AF,1 picks column 2 of each block, σ²_AF,2 picks column 1
        let h = first(&[Mat2::from_real([[1.0, 2.0], [3.0, 4.0]])]);
        let p = 1.0;
        let g2 = gamma_factor(p).powi(2);
        assert_relative_eq!(relay_noise(&h, p, 1), g2 * (16.0 + 4.0), epsilon = 1e-14);
        assert_relative_eq!(relay_noise(&h, p, 2), g2 * (1.0 + 9.0), epsilon = 1e-14);
        let g = f_map(&h, 1).unwrap();
        let s = sinr_at_realization(&h, &g, p).unwrap();
        assert_relative_eq!(s.sinr1, asymptotic_sinr(&h, p, 1), epsilon = 1e-13);
        assert_relative_eq!(s.sinr2, asymptotic_sinr(&h, p, 2), epsilon = 1e-13);
    }

    #[test]
    fn exact_and_asymptotic_sinr_agree() {
        let s = RandomStream::new(5);
        for t in 0..10_000u64 {
            let pairs = 1 + (t % 3) as usize;
            let h = ChannelMatrix::sample(&FadingModel::Rayleigh, Hop::First, 2 * pairs, &mut s.substream(t));
            let g = f_map(&h, pairs).unwrap();
            let p = 10f64.powf((t % 7) as f64 - 2.0);
            let exact = sinr_at_realization(&h, &g, p).unwrap();
            for dest in 1..=2 {
                let a = asymptotic_sinr(&h, p, dest);
                assert!((exact.get(dest) - a).abs() <= 1e-12 * (1.0 + a), "t={t} dest={dest}");
            }
        }
    }

    #[test]
    fn interference_grows_linearly_with_perturbation() {
        let s = RandomStream::new(9);
        let h = ChannelMatrix::sample(&FadingModel::Rayleigh, Hop::First, 4, &mut s.substream(0));
        let gains = relay_gain_matrix(&h, 10.0).unwrap();
        let mut ratios = Vec::new();
        let mut last_sinr = 0.0;
        for k in 0..8 {
            let eps = 10f64.powi(-k);
            let g = perturbed_image(&h, eps, &mut s.substream(1)).unwrap();
            let e = effective_channel(&g, &gains, &h).unwrap();
            ratios.push(e.off_diagonal_max() / eps);
            last_sinr = sinr_exact(&h, &g, &gains, 10.0).unwrap().sinr1;
        }
        // same Δ direction, so off-diagonal / ε is constant
        for w in ratios.windows(2) {
            assert!((w[0] - w[1]).abs() < 1e-6 * w[0].max(1.0));
        }
        let clean = sinr_at_realization(&h, &f_map(&h, 2).unwrap(), 10.0).unwrap().sinr1;
        assert!((last_sinr - clean).abs() < 1e-5 * clean);
    }

    #[test]
    fn sinr_decreases_with_offdiagonal_error() {
        // inject interference only: Δ chosen so that ΔΓH is off-diagonal
        let h = first(&[Mat2::identity()]);
        let gains = relay_gain_matrix(&h, 10.0).unwrap();
        let mut prev = f64::INFINITY;
        for k in 0..20 {
            let eps = k as f64 * 0.05;
            let g = ChannelMatrix::from_blocks(Hop::Second, &[Mat2::from_real([[1.0, eps], [0.0, 1.0]])]);
            let s = sinr_exact(&h, &g, &gains, 10.0).unwrap().sinr1;
            assert!(s <= prev + 1e-15, "eps {eps}");
            prev = s;
        }
    }

    #[test]
    fn single_slot_block() {
        let cfg = BlockConfig {
            model: FadingModel::UniformPhase,
            relays: 2,
            power: 10.0,
            block_length: 1,
            estimator: RateEstimator::Realized,
        };
        let q = Quantizer::phase(4, Hop::First, 2).unwrap();
        for seed in 0..20 {
            let out = simulate_block(&cfg, &q, &RandomStream::new(seed)).unwrap();
            assert!(out.matched_fraction == 0.0 || out.matched_fraction == 1.0);
            if out.matched_fraction == 0.0 {
                assert_eq!((out.rate1, out.rate2), (0.0, 0.0));
            }
        }
    }

    #[test]
    fn cell_min_never_exceeds_realized() {
        let mut cfg = BlockConfig {
            model: FadingModel::UniformPhase,
            relays: 2,
            power: 10.0,
            block_length: 5000,
            estimator: RateEstimator::Realized,
        };
        let q = Quantizer::phase(6, Hop::First, 2).unwrap();
        let s = RandomStream::new(3);
        let realized = simulate_block(&cfg, &q, &s).unwrap();
        cfg.estimator = RateEstimator::CellMin { probes: 4 };
        let min = simulate_block(&cfg, &q, &s).unwrap();
        assert_eq!(realized.matched_fraction, min.matched_fraction);
        assert!(min.rate1 <= realized.rate1 && min.rate2 <= realized.rate2);
        assert!(min.rate1 > 0.0);
    }

    #[test]
    fn odd_relay_count_uses_2m() {
        let cfg = BlockConfig {
            model: FadingModel::Rayleigh,
            relays: 3,
            power: 1.0,
            block_length: 200,
            estimator: RateEstimator::Realized,
        };
        let q = Quantizer::grid(0.5, 4, Hop::First, 2).unwrap();
        assert!(simulate_block(&cfg, &q, &RandomStream::new(1)).is_ok());
        let wrong = Quantizer::grid(0.5, 4, Hop::First, 4).unwrap();
        assert!(simulate_block(&cfg, &wrong, &RandomStream::new(1)).is_err());
    }
}
