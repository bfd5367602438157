//! `key=value` config files merged into the command line.

use std::collections::HashSet;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::parser::ValueSource;
use clap::{Arg, ArgMatches, ValueHint};

use crate::specdesc::SpecDesc;

/// Arguments whose values are spec expressions.
pub const SPEC_KEYS: [&str; 2] = ["spec", "cone"];

/// One `key=value` entry with its line number.
#[derive(Debug)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

pub fn read_entries(path: &Path) -> anyhow::Result<Vec<Entry>> {
    let text = fs::read_to_string(path).with_context(|| format!("{}", path.display()))?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| anyhow!("{}:{line}: expected key=value, got `{s}`", path.display()))?;
        let key = k.trim().to_string();
        if !seen.insert(key.clone()) {
            bail!("{}:{line}: key `{key}` given twice", path.display());
        }
        out.push(Entry {
            line,
            key,
            value: v.trim().to_string(),
        });
    }
    Ok(out)
}

fn takes_path(arg: &Arg) -> bool {
    matches!(
        arg.get_value_hint(),
        ValueHint::FilePath | ValueHint::DirPath | ValueHint::AnyPath
    )
}

fn parse_bool(s: &str) -> Option<bool> {
    match s {
        "true" | "yes" | "1" | "on" => Some(true),
        "false" | "no" | "0" | "off" => Some(false),
        _ => None,
    }
}

/// Turns config entries into extra command-line arguments for `sub`,
/// skipping keys already given on the command line. Relative paths are
/// taken relative to the config file's directory.
pub fn extra_args(
    path: &Path,
    entries: &[Entry],
    args: &[&Arg],
    given: &ArgMatches,
) -> anyhow::Result<Vec<OsString>> {
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut extra = Vec::new();
    for e in entries {
        let at = || format!("{}:{}: key `{}`", path.display(), e.line, e.key);
        let arg = args
            .iter()
            .find(|a| a.get_long() == Some(e.key.as_str()) && e.key != "config")
            .ok_or_else(|| anyhow!("{}: unknown key", at()))?;
        if given.value_source(arg.get_id().as_str()) == Some(ValueSource::CommandLine) {
            continue;
        }
        let flag = format!("--{}", e.key);
        if !arg.get_action().takes_values() {
            match parse_bool(&e.value) {
                Some(true) => extra.push(flag.into()),
                Some(false) => {}
                None => bail!("{}: expected true or false, got `{}`", at(), e.value),
            }
            continue;
        }
        let value = if takes_path(arg) {
            let p = PathBuf::from(&e.value);
            if p.is_relative() {
                base.join(p).into_os_string()
            } else {
                p.into_os_string()
            }
        } else if SPEC_KEYS.contains(&e.key.as_str()) {
            let mut s = SpecDesc::parse(&e.value).map_err(|m| anyhow!("{}: {m}", at()))?;
            s.rebase(&base);
            s.to_string().into()
        } else {
            e.value.clone().into()
        };
        extra.push(flag.into());
        extra.push(value);
    }
    Ok(extra)
}
