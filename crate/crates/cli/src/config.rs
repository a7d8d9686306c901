//! `key=value` experiment manifests.
//!
//! Each non-blank, non-`#` line becomes `--key=value`; a value of `true`
//! becomes a bare `--key`.

use std::ffi::OsString;
use std::path::Path;

use anyhow::{bail, Context as _};

pub fn load(path: &Path) -> anyhow::Result<Vec<OsString>> {
    let text = std::fs::read_to_string(path).context("reading file")?;
    parse(&text)
}

pub fn parse(text: &str) -> anyhow::Result<Vec<OsString>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("line {}: expected key=value, got '{line}'", n + 1);
        };
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() || key == "config" {
            bail!("line {}: invalid key '{key}'", n + 1);
        }
        match value.trim() {
            "true" => out.push(format!("--{key}").into()),
            v => out.push(format!("--{key}={v}").into()),
        }
    }
    Ok(out)
}

/// Rebuilds argv as `bin subcommand <config flags> <user flags>`. Global
/// flags typed before the subcommand move after it, so every user flag comes
/// later than the file's and overrides it.
pub fn splice(argv: Vec<OsString>, injected: Vec<OsString>, subcommands: &[&str]) -> Vec<OsString> {
    let mut iter = argv.into_iter();
    let bin = iter.next().unwrap_or_default();
    let rest: Vec<OsString> = iter.collect();
    let Some(pos) = rest.iter().position(|a| a.to_str().is_some_and(|s| subcommands.contains(&s))) else {
        return std::iter::once(bin).chain(injected).chain(rest).collect();
    };
    let mut out = vec![bin, rest[pos].clone()];
    out.extend(injected);
    out.extend(rest[..pos].iter().cloned());
    out.extend(rest[pos + 1..].iter().cloned());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strs(v: &[OsString]) -> Vec<&str> {
        v.iter().map(|s| s.to_str().unwrap()).collect()
    }

    #[test]
    fn parses_lines() {
        let v = parse("# sweep\nmodel = rayleigh\n\npower_db=0:10:5\nflag=true\n").unwrap();
        assert_eq!(strs(&v), ["--model=rayleigh", "--power-db=0:10:5", "--flag"]);
        assert!(parse("nonsense").is_err());
        assert!(parse("config=x").is_err());
    }

    #[test]
    fn user_flags_follow_file_flags() {
        let argv: Vec<OsString> = ["ergodic", "--seed", "3", "rates", "--trials", "10"].map(Into::into).to_vec();
        let out = splice(argv, vec!["--seed=9".into()], &["rates"]);
        assert_eq!(strs(&out), ["ergodic", "rates", "--seed=9", "--seed", "3", "--trials", "10"]);
    }
}
