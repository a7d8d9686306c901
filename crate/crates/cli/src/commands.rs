use std::f64::consts::LN_2;
use std::io::Write;

use ergodic_core::gaps::{
    self, abs_det_moments_mc, reference_bound, theorem4_limit, RAYLEIGH_MEAN_ABS_DET, UNIFORM_MEAN_ABS_DET,
};
use ergodic_core::icgap::{pairwise_upper_mc, rate_ia_mc, theorem6_gap_mc, IcConfig};
use ergodic_core::neutralization::{simulate_block, BlockConfig};
use ergodic_core::pairing::{default_schedule, Quantizer};
use ergodic_core::rates::{rate_in_mc, rate_pair_mc};
use ergodic_core::verify::Check;
use ergodic_core::{db_to_linear, FadingModel, Hop, RandomStream, RateEstimate, Result};

use crate::args::{ConstantsArgs, IcArgs, PairingArgs, QuantizerSpec, RelaySweep, Sweep};

pub const HEADER: [&str; 8] = ["model", "L", "p_db", "quantity", "estimate", "std_error", "trials", "seed"];

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub model: String,
    pub l: usize,
    pub p_db: f64,
    pub quantity: &'static str,
    pub estimate: f64,
    pub std_error: f64,
    pub trials: u64,
}

impl Row {
    fn new(model: &FadingModel, l: usize, p_db: f64, quantity: &'static str, e: RateEstimate) -> Self {
        Self {
            model: model.name().to_string(),
            l,
            p_db,
            quantity,
            estimate: e.mean,
            std_error: e.std_error,
            trials: e.trials,
        }
    }
}

pub fn write_csv<W: Write>(out: W, rows: &[Row], seed: u64) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record([
            r.model.clone(),
            r.l.to_string(),
            r.p_db.to_string(),
            r.quantity.to_string(),
            r.estimate.to_string(),
            r.std_error.to_string(),
            r.trials.to_string(),
            seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Stream for the `(L, k-th power)` point; rows are reproducible one by one.
fn point_stream(root: &RandomStream, relays: usize, k: usize) -> RandomStream {
    root.fork(relays as u64).fork(k as u64)
}

pub fn rates(a: &Sweep, root: &RandomStream) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for &l in &a.relays.0 {
        for (k, &db) in a.power_db.0.iter().enumerate() {
            let pair = rate_pair_mc(&a.model, l, db_to_linear(db), a.trials, &point_stream(root, l, k))?;
            rows.push(Row::new(&a.model, l, db, "r_in", pair.r_in));
            rows.push(Row::new(&a.model, l, db, "r_mimo", pair.r_mimo));
        }
    }
    Ok(rows)
}

pub fn gap_vs_power(a: &Sweep, root: &RandomStream) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for &l in &a.relays.0 {
        let (bound, kind) = reference_bound(&a.model, l, a.trials, &root.fork(l as u64).fork(u64::MAX))?;
        for (k, &db) in a.power_db.0.iter().enumerate() {
            let pair = rate_pair_mc(&a.model, l, db_to_linear(db), a.trials, &point_stream(root, l, k))?;
            rows.push(Row::new(&a.model, l, db, "gap", pair.gap));
            rows.push(Row::new(&a.model, l, db, kind.label(), RateEstimate::exact(bound, a.trials)));
        }
    }
    Ok(rows)
}

pub fn gap_vs_relays(a: &RelaySweep, root: &RandomStream) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for (k, &db) in a.power_db.0.iter().enumerate() {
        let reports = gaps::gap_vs_relays(&a.model, db_to_linear(db), &a.relays.0, a.trials, &root.fork(k as u64))?;
        for r in reports {
            rows.push(Row::new(&a.model, r.relays, db, "gap", r.gap_estimate));
            rows.push(Row::new(&a.model, r.relays, db, r.bound_kind.label(), RateEstimate::exact(r.bound, a.trials)));
        }
    }
    Ok(rows)
}

fn quantizer(spec: QuantizerSpec, relays: usize, block_length: u64) -> Result<Quantizer> {
    match spec {
        QuantizerSpec::Grid { delta, n } => Quantizer::grid(delta, n, Hop::First, relays),
        QuantizerSpec::Phase { n } => Quantizer::phase(n, Hop::First, relays),
        QuantizerSpec::Schedule => {
            let s = default_schedule(block_length as f64, relays / 2)?;
            Quantizer::grid(s.delta, s.n, Hop::First, relays)
        }
    }
}

/// Sum rate over both users and matched fraction, averaged over independent
/// blocks, next to the `R_in` they should approach.
pub fn pairing_sim(a: &PairingArgs, root: &RandomStream) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for &l in &a.relays.0 {
        let q = quantizer(a.quantizer, l - l % 2, a.block_length)?;
        for (k, &db) in a.power_db.0.iter().enumerate() {
            let p = db_to_linear(db);
            let s = point_stream(root, l, k);
            let cfg = BlockConfig {
                model: a.model.clone(),
                relays: l,
                power: p,
                block_length: a.block_length as usize,
                estimator: a.estimator,
            };
            let mut rate = Vec::new();
            let mut matched = Vec::new();
            for b in 0..a.blocks {
                let out = simulate_block(&cfg, &q, &s.fork(b))?;
                rate.push(out.rate1 + out.rate2);
                matched.push(out.matched_fraction);
            }
            let total = a.blocks * a.block_length;
            rows.push(Row::new(&a.model, l, db, "pairing_rate", summarize(&rate, total)));
            rows.push(Row::new(&a.model, l, db, "matched_fraction", summarize(&matched, total)));
            let r_in = rate_in_mc(&a.model, l, p, a.trials, &s.fork(u64::MAX))?;
            rows.push(Row::new(&a.model, l, db, "r_in", r_in));
        }
    }
    Ok(rows)
}

/// Mean and standard error across blocks, labeled with `trials` channel uses.
fn summarize(xs: &[f64], trials: u64) -> RateEstimate {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let se =
        if xs.len() > 1 { (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt() } else { 0.0 };
    RateEstimate::new(mean, se, trials)
}

pub fn ic_gap(a: &IcArgs, root: &RandomStream) -> Result<Vec<Row>> {
    let users = a.users as usize;
    let mut rows = Vec::new();
    let gap = theorem6_gap_mc(&a.model, a.trials, &root.fork(u64::MAX))?;
    for (k, &db) in a.power_db.0.iter().enumerate() {
        let cfg = IcConfig::new(users, db_to_linear(db), a.model.clone())?;
        let s = point_stream(root, users, k);
        rows.push(Row::new(&a.model, users, db, "r_ia", rate_ia_mc(&cfg, a.trials, &s.fork(1))?));
        rows.push(Row::new(&a.model, users, db, "ic_upper", pairwise_upper_mc(&cfg, a.trials, &s.fork(2))?));
        rows.push(Row::new(&a.model, users, db, "ic_gap", gap));
    }
    Ok(rows)
}

/// Plain-text table of the closed-form constants and their estimates.
pub fn constants<W: Write>(mut out: W, a: &ConstantsArgs, root: &RandomStream) -> anyhow::Result<()> {
    let [ray, _] = abs_det_moments_mc(&FadingModel::Rayleigh, a.trials, &root.fork(1))?;
    let [uni, _] = abs_det_moments_mc(&FadingModel::UniformPhase, a.trials, &root.fork(2))?;
    let ic = theorem6_gap_mc(&FadingModel::Rayleigh, a.trials, &root.fork(3))?;
    // the large-L uniform-phase limit is 4 - 4 log2 E|det|; delta-method error
    let t4 = RateEstimate::new(4.0 - 4.0 * uni.mean.log2(), 4.0 * uni.std_error / (uni.mean * LN_2), uni.trials);
    let lines = [
        ("E|det H| rayleigh", "3pi/8", RAYLEIGH_MEAN_ABS_DET, ray),
        ("E|det H| uniform-phase", "4/pi", UNIFORM_MEAN_ABS_DET, uni),
        ("large-L gap uniform-phase", "4log2(pi)-4", theorem4_limit(), t4),
        ("IA gap rayleigh", "log2(6)/2", 0.5 * 6f64.log2(), ic),
    ];
    writeln!(out, "{:<26} {:<12} {:>10} {:>10} {:>10}", "constant", "form", "exact", "estimate", "std_error")?;
    for (name, form, exact, e) in lines {
        writeln!(out, "{name:<26} {form:<12} {exact:>10.6} {:>10.6} {:>10.6}", e.mean, e.std_error)?;
    }
    Ok(())
}

/// Prints the table and reports whether every check passed.
pub fn verify<W: Write>(mut out: W, checks: &[Check]) -> std::io::Result<bool> {
    for c in checks {
        writeln!(out, "{c}")?;
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    writeln!(out, "{} checks, {} failed", checks.len(), failed)?;
    Ok(failed == 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let rows = vec![Row {
            model: "rayleigh".into(),
            l: 2,
            p_db: 10.0,
            quantity: "r_in",
            estimate: 1.5,
            std_error: 0.25,
            trials: 100,
        }];
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows, 7).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "model,L,p_db,quantity,estimate,std_error,trials,seed\nrayleigh,2,10,r_in,1.5,0.25,100,7\n"
        );
    }

    #[test]
    fn block_summary() {
        let e = summarize(&[1.0, 3.0], 10);
        assert_eq!(e.mean, 2.0);
        assert_eq!(e.std_error, 1.0);
        assert_eq!(summarize(&[4.0], 5).std_error, 0.0);
    }
}
