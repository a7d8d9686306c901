use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use ergodic_core::neutralization::RateEstimator;
use ergodic_core::verify::Suite;
use ergodic_core::FadingModel;

#[derive(Debug, Parser)]
#[command(name = "ergodic", version, about = "Ergodic interference neutralization experiments")]
#[command(args_override_self = true, propagate_version = true)]
pub struct Cli {
    /// Plain `key=value` file of default flags; flags on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Base seed for every random stream.
    #[arg(long, global = true, env = "ERGODIC_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Worker threads (default: available parallelism).
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,

    /// Write CSV here instead of standard output.
    #[arg(long, short, global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

pub const SUBCOMMANDS: &[&str] =
    &["rates", "gap-vs-power", "gap-vs-relays", "pairing-sim", "ic-gap", "constants", "verify"];

#[derive(Debug, Subcommand)]
pub enum Command {
    /// R_in and R_mimo against transmit power.
    Rates(Sweep),
    /// Gap R_mimo - R_in against transmit power, with its bound.
    GapVsPower(Sweep),
    /// Gap R_mimo - R_in against the number of relays.
    GapVsRelays(RelaySweep),
    /// Block simulation of quantize-and-pair neutralization.
    PairingSim(PairingArgs),
    /// Ergodic interference alignment gap on the K-user interference channel.
    IcGap(IcArgs),
    /// Closed-form constants next to their Monte Carlo estimates.
    Constants(ConstantsArgs),
    /// Run a self-check suite and print a pass/fail table.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct Sweep {
    #[arg(long, default_value = "rayleigh", value_parser = parse_model)]
    pub model: FadingModel,

    /// Relay counts, comma separated.
    #[arg(long, default_value = "2", value_parser = parse_counts)]
    pub relays: Counts,

    /// Powers in dB: `start:stop:step` or a comma list.
    #[arg(long, default_value = "0:60:5", value_parser = parse_powers)]
    pub power_db: Powers,

    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
}

#[derive(Debug, Args)]
pub struct RelaySweep {
    #[arg(long, default_value = "rayleigh", value_parser = parse_model)]
    pub model: FadingModel,

    #[arg(long, default_value = "2,4,8,16,32,64", value_parser = parse_counts)]
    pub relays: Counts,

    #[arg(long, default_value = "40", value_parser = parse_powers)]
    pub power_db: Powers,

    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
}

#[derive(Debug, Args)]
pub struct PairingArgs {
    #[arg(long, default_value = "uniform-phase", value_parser = parse_model)]
    pub model: FadingModel,

    #[arg(long, default_value = "2", value_parser = parse_counts)]
    pub relays: Counts,

    #[arg(long, default_value = "10", value_parser = parse_powers)]
    pub power_db: Powers,

    /// Sub-block length n_B.
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub block_length: u64,

    /// Independent blocks per point.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub blocks: u64,

    /// `grid:DELTA:N`, `phase:N` or `schedule`.
    #[arg(long, default_value = "phase:32", value_parser = parse_quantizer)]
    pub quantizer: QuantizerSpec,

    /// `realized` or `cell-min:PROBES`.
    #[arg(long, default_value = "realized", value_parser = parse_estimator)]
    pub estimator: RateEstimator,

    /// Trials for the reference R_in estimate.
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
}

#[derive(Debug, Args)]
pub struct IcArgs {
    #[arg(long, default_value = "rayleigh", value_parser = parse_model)]
    pub model: FadingModel,

    /// Number of users K (reported in the `L` column).
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(2..))]
    pub users: u64,

    #[arg(long, default_value = "0:40:10", value_parser = parse_powers)]
    pub power_db: Powers,

    #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
}

#[derive(Debug, Args)]
pub struct ConstantsArgs {
    #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value = "all", value_parser = parse_suite)]
    pub suite: Suite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Counts(pub Vec<usize>);

/// Power points in dB.
#[derive(Debug, Clone, PartialEq)]
pub struct Powers(pub Vec<f64>);

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuantizerSpec {
    Grid { delta: f64, n: u32 },
    Phase { n: u32 },
    Schedule,
}

fn parse_model(s: &str) -> Result<FadingModel, String> {
    s.parse().map_err(|e: ergodic_core::Error| e.to_string())
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse().map_err(|e: ergodic_core::Error| e.to_string())
}

pub fn parse_counts(s: &str) -> Result<Counts, String> {
    let v = s
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| format!("bad count '{t}': {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    if v.contains(&0) {
        return Err("counts must be at least 1".into());
    }
    Ok(Counts(v))
}

pub fn parse_powers(s: &str) -> Result<Powers, String> {
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("bad number '{t}': {e}"));
    let v: Vec<f64> = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let [start, stop, step] = parts[..] else {
            return Err(format!("range must be start:stop:step, got '{s}'"));
        };
        let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
        if step.is_nan() || step <= 0.0 || stop < start {
            return Err(format!("range needs step > 0 and stop >= start, got '{s}'"));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        (0..=n).map(|k| start + k as f64 * step).collect()
    } else {
        s.split(',').map(num).collect::<Result<_, _>>()?
    };
    if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
        return Err("power list must be nonempty and finite".into());
    }
    Ok(Powers(v))
}

pub fn parse_quantizer(s: &str) -> Result<QuantizerSpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let int = |t: &str| t.parse::<u32>().map_err(|e| format!("bad level count '{t}': {e}"));
    match parts[..] {
        ["schedule"] => Ok(QuantizerSpec::Schedule),
        ["phase", n] => match int(n)? {
            0 => Err("phase quantizer needs at least one level".into()),
            n => Ok(QuantizerSpec::Phase { n }),
        },
        ["grid", d, n] => {
            let delta = d.parse::<f64>().map_err(|e| format!("bad grid step '{d}': {e}"))?;
            if !(delta > 0.0 && delta.is_finite()) {
                return Err(format!("grid step must be positive, got {delta}"));
            }
            Ok(QuantizerSpec::Grid { delta, n: int(n)? })
        }
        _ => Err(format!("quantizer must be grid:DELTA:N, phase:N or schedule, got '{s}'")),
    }
}

pub fn parse_estimator(s: &str) -> Result<RateEstimator, String> {
    match s.split_once(':') {
        None if s == "realized" => Ok(RateEstimator::Realized),
        Some(("cell-min", k)) => {
            let probes = k.parse().map_err(|e| format!("bad probe count '{k}': {e}"))?;
            Ok(RateEstimator::CellMin { probes })
        }
        _ => Err(format!("estimator must be realized or cell-min:PROBES, got '{s}'")),
    }
}
