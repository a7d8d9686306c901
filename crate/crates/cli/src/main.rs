mod args;
mod commands;
mod config;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use anyhow::Context as _;
use clap::error::ErrorKind;
use clap::Parser;
use ergodic_core::verify::run_suite;
use ergodic_core::RandomStream;

use args::{Cli, Command};

const EXIT_USAGE: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

fn main() -> ExitCode {
    let argv: Vec<OsString> = std::env::args_os().collect();
    let cli = match parse(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_RUNTIME),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

/// Parses argv, splicing in the `--config` file (if any) so that flags given
/// on the command line still win.
fn parse(argv: Vec<OsString>) -> Result<Cli, clap::Error> {
    let first = Cli::try_parse_from(&argv)?;
    let Some(path) = &first.config else {
        return Ok(first);
    };
    let injected = config::load(path)
        .map_err(|e| clap::Error::raw(ErrorKind::ValueValidation, format!("config {}: {e:#}\n", path.display())))?;
    Cli::try_parse_from(config::splice(argv, injected, args::SUBCOMMANDS))
}

/// Returns `Ok(false)` when a verification suite reports failures.
fn run(cli: &Cli) -> anyhow::Result<bool> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        pool = pool.num_threads(n as usize);
    }
    pool.build().context("building worker pool")?.install(|| execute(cli))
}

fn execute(cli: &Cli) -> anyhow::Result<bool> {
    let root = RandomStream::new(cli.seed);
    let rows = match &cli.command {
        Command::Rates(a) => commands::rates(a, &root)?,
        Command::GapVsPower(a) => commands::gap_vs_power(a, &root)?,
        Command::GapVsRelays(a) => commands::gap_vs_relays(a, &root)?,
        Command::PairingSim(a) => commands::pairing_sim(a, &root)?,
        Command::IcGap(a) => commands::ic_gap(a, &root)?,
        Command::Constants(a) => {
            let mut out = open_output(cli)?;
            commands::constants(&mut out, a, &root)?;
            out.flush()?;
            return Ok(true);
        }
        Command::Verify(a) => {
            let checks = run_suite(a.suite, cli.seed)?;
            let mut out = open_output(cli)?;
            let ok = commands::verify(&mut out, &checks)?;
            out.flush()?;
            return Ok(ok);
        }
    };
    let out = open_output(cli)?;
    commands::write_csv(out, &rows, cli.seed).context("writing CSV")?;
    Ok(true)
}

fn open_output(cli: &Cli) -> anyhow::Result<Box<dyn Write>> {
    Ok(match &cli.output {
        Some(path) => {
            let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            Box::new(BufWriter::new(f))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}
