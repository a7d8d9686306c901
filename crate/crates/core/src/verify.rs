//! Self-checks exposed through `ergodic verify`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::fading::{f_map, ChannelMatrix, FadingModel, Hop};
use crate::gaps::{
    abs_det_moments_mc, delta_m, lemma4_lhs_mc, theorem2_gap_closed, theorem3_bound_mc, RAYLEIGH_MEAN_ABS_DET,
    UNIFORM_MEAN_ABS_DET,
};
use crate::icgap::{abs_log_ratio_mc, theorem6_gap_mc};
use crate::mc;
use crate::neutralization::{det_sum, effective_channel, gamma_factor, relay_gain_matrix, relay_transmit_power};
use crate::pairing::{cell_image_under_f, concentration_bound, CellId, Quantizer};
use crate::rates::{lemma3_identity, lemma3_mc, rate_in_closed_uniform, rate_mimo_closed_uniform, rate_pair_mc};
use crate::stream::RandomStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Lemmas,
    Constants,
    Neutralization,
    Gaps,
    All,
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lemmas" => Ok(Suite::Lemmas),
            "constants" => Ok(Suite::Constants),
            "neutralization" => Ok(Suite::Neutralization),
            "gaps" => Ok(Suite::Gaps),
            "all" => Ok(Suite::All),
            other => Err(Error::invalid(format!("unknown suite '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{mark}  {:<40} {}", self.name, self.detail)
    }
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<Vec<Check>> {
    let s = RandomStream::new(seed);
    Ok(match suite {
        Suite::Lemmas => lemmas(&s.fork(1))?,
        Suite::Constants => constants(&s.fork(2))?,
        Suite::Neutralization => neutralization(&s.fork(3))?,
        Suite::Gaps => gaps(&s.fork(4))?,
        Suite::All => {
            let mut all = lemmas(&s.fork(1))?;
            all.extend(constants(&s.fork(2))?);
            all.extend(neutralization(&s.fork(3))?);
            all.extend(gaps(&s.fork(4))?);
            all
        }
    })
}

/// Whether `quantize(F(H)) = F(quantize(H))` on every one of `draws` samples.
pub fn cell_commutation_holds(q: &Quantizer, model: &FadingModel, draws: u64, stream: &RandomStream) -> Result<bool> {
    let q2 = q.for_hop(Hop::Second);
    let pairs = q.relays() / 2;
    let results = mc::map_indexed(draws, stream, |_, rng| -> Result<bool> {
        let h = ChannelMatrix::sample(model, Hop::First, q.relays(), rng);
        let g = f_map(&h, pairs)?;
        let image = q.quantize(&h)?.map(|c| cell_image_under_f(&c)).transpose()?;
        Ok(image == q2.quantize(&g)?)
    });
    results.into_iter().try_fold(true, |acc, r| Ok(acc && r?))
}

fn count_cells(
    q: &Quantizer,
    model: &FadingModel,
    hop: Hop,
    draws: u64,
    stream: &RandomStream,
) -> Result<HashMap<CellId, u64>> {
    let cells =
        mc::map_indexed(draws, stream, |_, rng| q.quantize(&ChannelMatrix::sample(model, hop, q.relays(), rng)));
    let mut counts = HashMap::new();
    for c in cells {
        if let Some(c) = c? {
            *counts.entry(c).or_insert(0u64) += 1;
        }
    }
    Ok(counts)
}

/// Largest binomial z-score between the frequency of first-hop cell `Q` and
/// of second-hop cell `F(Q)`, over the `top` most frequent first-hop cells.
pub fn cell_measure_max_z(
    q: &Quantizer,
    model: &FadingModel,
    draws: u64,
    top: usize,
    stream: &RandomStream,
) -> Result<f64> {
    let first = count_cells(q, model, Hop::First, draws, &stream.fork(1))?;
    let second = count_cells(&q.for_hop(Hop::Second), model, Hop::Second, draws, &stream.fork(2))?;
    let mut ranked: Vec<(&CellId, &u64)> = first.iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
    let n = draws as f64;
    let mut worst = 0.0f64;
    for (cell, &c1) in ranked.into_iter().take(top) {
        let c2 = second.get(&cell_image_under_f(cell)?).copied().unwrap_or(0);
        let (f1, f2) = (c1 as f64 / n, c2 as f64 / n);
        let pooled = 0.5 * (f1 + f2);
        let se = (pooled * (1.0 - pooled) * 2.0 / n).sqrt();
        worst = worst.max((f1 - f2).abs() / se);
    }
    Ok(worst)
}

/// Fraction of `reps` blocks in which every uniform-phase cell frequency
/// lies within `tolerance` of `1/|𝒬|` on both hops, next to the guaranteed
/// lower bound.
pub fn uniform_concentration(
    bins: u32,
    block_length: u64,
    tolerance: f64,
    reps: u64,
    stream: &RandomStream,
) -> Result<(f64, f64)> {
    let q = Quantizer::phase(bins, Hop::First, 2)?;
    let cells = q.cell_count();
    let prob = 1.0 / cells;
    let mut ok = 0u64;
    for r in 0..reps {
        let s = stream.fork(r);
        let mut inside = true;
        for (hop, label) in [(Hop::First, 1), (Hop::Second, 2)] {
            let counts = count_cells(&q.for_hop(hop), &FadingModel::UniformPhase, hop, block_length, &s.fork(label))?;
            let n = block_length as f64;
            let max_dev = counts.values().map(|&c| (c as f64 / n - prob).abs()).fold(0.0, f64::max);
            // cells never visited deviate by exactly prob
            let empty_dev = if (counts.len() as f64) < cells { prob } else { 0.0 };
            inside &= max_dev.max(empty_dev) <= tolerance;
        }
        ok += inside as u64;
    }
    Ok((ok as f64 / reps as f64, concentration_bound(cells, cells, block_length as f64, tolerance)))
}

fn lemmas(s: &RandomStream) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for (label, q) in
        [("grid", Quantizer::grid(0.5, 3, Hop::First, 2)?), ("phase", Quantizer::phase(16, Hop::First, 2)?)]
    {
        let ok = cell_commutation_holds(&q, &FadingModel::Rayleigh, 10_000, &s.fork(10))?;
        out.push(Check::new(format!("cell commutation ({label})"), ok, "10^4 Rayleigh draws"));
    }
    let z =
        cell_measure_max_z(&Quantizer::grid(1.0, 1, Hop::First, 2)?, &FadingModel::Rayleigh, 100_000, 10, &s.fork(11))?;
    out.push(Check::new("cell measure equality", z <= 3.0, format!("max z = {z:.3} over 10 cells")));

    // tolerance at which the guaranteed probability is one half
    let tolerance = (2.0 * 256.0 / 10_000.0f64).sqrt();
    let (freq, bound) = uniform_concentration(4, 10_000, tolerance, 100, &s.fork(12))?;
    out.push(Check::new(
        "cell frequency concentration",
        freq >= bound,
        format!("success {freq:.2} >= bound {bound:.3}"),
    ));

    for (k, &x) in [0.0, 0.25, 0.5, 0.75, 1.0].iter().enumerate() {
        let e = lemma3_mc(x, 1_000_000, &s.fork(20 + k as u64))?;
        let exact = lemma3_identity(x)?;
        out.push(Check::new(
            format!("phase-average identity x={x}"),
            e.agrees_with(exact, 3.0),
            format!("mc {:.5} ± {:.5} vs {exact:.5}", e.mean, e.std_error),
        ));
    }

    let mut worst = f64::INFINITY;
    let mut all = true;
    for (i, &c) in [0.1, 1.0, 10.0].iter().enumerate() {
        for (j, m) in [1usize, 2, 4, 8, 16, 32, 64].into_iter().enumerate() {
            let lhs = lemma4_lhs_mc(c, m, 20_000, &s.fork(100 + (i * 10 + j) as u64))?;
            let rhs = (1.0 + c * (m * m) as f64 * UNIFORM_MEAN_ABS_DET.powi(2)).log2()
                - delta_m(c, m as f64, UNIFORM_MEAN_ABS_DET, 2.0, 0.3)?;
            let margin = lhs.mean + 3.0 * lhs.std_error - rhs;
            worst = worst.min(margin);
            all &= margin >= 0.0;
        }
    }
    out.push(Check::new("LLN lower bound with delta_m", all, format!("min margin {worst:.4}")));
    Ok(out)
}

fn constants(s: &RandomStream) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for (model, target, label) in [
        (FadingModel::Rayleigh, RAYLEIGH_MEAN_ABS_DET, "E|det| rayleigh = 3pi/8"),
        (FadingModel::UniformPhase, UNIFORM_MEAN_ABS_DET, "E|det| uniform = 4/pi"),
    ] {
        let [m1, m2] = abs_det_moments_mc(&model, 1_000_000, &s.fork(label.len() as u64))?;
        out.push(Check::new(
            label,
            m1.agrees_with(target, 3.0),
            format!("{:.5} ± {:.5} vs {target:.6}", m1.mean, m1.std_error),
        ));
        out.push(Check::new(
            format!("E|det|^2 {} = 2", model.name()),
            m2.agrees_with(2.0, 3.0),
            format!("{:.5} ± {:.5}", m2.mean, m2.std_error),
        ));
    }
    let g = theorem6_gap_mc(&FadingModel::Rayleigh, 1_000_000, &s.fork(30))?;
    let target = 0.5 * 6f64.log2();
    out.push(Check::new(
        "IA gap rayleigh = log2(6)/2",
        g.agrees_with(target, 3.0),
        format!("{:.5} ± {:.5} vs {target:.5}", g.mean, g.std_error),
    ));
    let r = abs_log_ratio_mc(&FadingModel::Rayleigh, 1_000_000, &s.fork(31))?;
    out.push(Check::new(
        "E|log2 ratio| rayleigh = 2",
        r.agrees_with(2.0, 3.0),
        format!("{:.5} ± {:.5}", r.mean, r.std_error),
    ));
    let t4 = 4.0 * PI.log2() - 4.0;
    out.push(Check::new("4 log2(pi) - 4", (t4 - 2.605985).abs() < 1e-6, format!("{t4:.6}")));
    Ok(out)
}

fn neutralization(s: &RandomStream) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for pairs in 1..=3usize {
        let p = 10.0;
        let results = mc::map_indexed(10_000, &s.fork(pairs as u64), |_, rng| -> Result<(f64, f64)> {
            let h = ChannelMatrix::sample(&FadingModel::Rayleigh, Hop::First, 2 * pairs, rng);
            let g = f_map(&h, pairs)?;
            let gains = relay_gain_matrix(&h, p)?;
            let e = effective_channel(&g, &gains, &h)?;
            let target = gamma_factor(p) * det_sum(&h);
            let rel = ((e.0[0][0].re - target).abs().max((e.0[1][1].re + target).abs())
                + e.0[0][0].im.abs().max(e.0[1][1].im.abs()))
                / target;
            Ok((e.off_diagonal_max(), rel))
        });
        let (mut off, mut rel) = (0.0f64, 0.0f64);
        for r in results {
            let (o, d) = r?;
            off = off.max(o);
            rel = rel.max(d);
        }
        out.push(Check::new(
            format!("exact neutralization M={pairs}"),
            off < 1e-12 && rel < 1e-10,
            format!("max off-diag {off:.2e}, diag rel err {rel:.2e}"),
        ));

        let relays = 2 * pairs;
        let powers: Vec<_> = (0..relays).collect();
        let est = mc::estimate_many::<6, _>(100_000, &s.fork(100 + pairs as u64), |rng| {
            let h = ChannelMatrix::sample(&FadingModel::Rayleigh, Hop::First, relays, rng);
            let v = relay_transmit_power(&h, p);
            let mut out = [0.0; 6];
            out[..relays].copy_from_slice(&v);
            out
        });
        let ok = powers.iter().all(|&j| est[j].mean <= p + 3.0 * est[j].std_error);
        let worst = powers.iter().map(|&j| est[j].mean).fold(0.0, f64::max);
        out.push(Check::new(format!("relay power M={pairs}"), ok, format!("max E|x_R|^2 {worst:.4} vs P={p}")));
    }
    Ok(out)
}

fn gaps(s: &RandomStream) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let grid: Vec<f64> = (0..61).map(|k| 10f64.powf(-3.0 + 9.0 * k as f64 / 60.0)).collect();
    let max = grid.iter().map(|&p| theorem2_gap_closed(p)).fold(f64::MIN, f64::max);
    let top = theorem2_gap_closed(1e6);
    out.push(Check::new(
        "uniform two-relay gap <= 4",
        max <= 4.0 && (top - 4.0).abs() < 0.01,
        format!("max {max:.5}, at 1e6 {top:.5}"),
    ));
    for (k, &p) in [0.1, 1.0, 10.0, 100.0].iter().enumerate() {
        let pair = rate_pair_mc(&FadingModel::UniformPhase, 2, p, 100_000, &s.fork(k as u64))?;
        let ok = pair.r_in.agrees_with(rate_in_closed_uniform(p), 3.0)
            && pair.r_mimo.agrees_with(rate_mimo_closed_uniform(p), 3.0);
        out.push(Check::new(
            format!("closed forms vs MC p={p}"),
            ok,
            format!("r_in {:.4} r_mimo {:.4}", pair.r_in.mean, pair.r_mimo.mean),
        ));
    }
    let t3 = theorem3_bound_mc(&FadingModel::Rayleigh, 100_000, &s.fork(50))?;
    out.push(Check::new("rayleigh two-relay bound ~ 4.7", (t3.mean - 4.7).abs() <= 0.1, format!("{:.4}", t3.mean)));
    for (k, p) in [1.0, 10.0, 1e2, 1e3, 1e4].into_iter().enumerate() {
        let pair = rate_pair_mc(&FadingModel::Rayleigh, 2, p, 100_000, &s.fork(60 + k as u64))?;
        let se = pair.gap.std_error.hypot(t3.std_error);
        out.push(Check::new(
            format!("rayleigh bound dominates p={p}"),
            pair.gap.mean <= t3.mean + 3.0 * se,
            format!("gap {:.4} vs bound {:.4}", pair.gap.mean, t3.mean),
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_parse() {
        assert_eq!("lemmas".parse::<Suite>().unwrap(), Suite::Lemmas);
        assert_eq!("all".parse::<Suite>().unwrap(), Suite::All);
        assert!("bogus".parse::<Suite>().is_err());
    }

    #[test]
    fn commutation_on_both_quantizers() {
        let s = RandomStream::new(2);
        for q in [Quantizer::grid(0.7, 2, Hop::First, 4).unwrap(), Quantizer::phase(8, Hop::First, 4).unwrap()] {
            assert!(cell_commutation_holds(&q, &FadingModel::Rayleigh, 2000, &s).unwrap());
        }
    }

    #[test]
    fn display_marks_status() {
        let c = Check::new("x", false, "d");
        assert!(c.to_string().starts_with("FAIL"));
    }
}
