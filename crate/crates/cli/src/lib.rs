//! Batch front-end of `pshkit-core`.
//!
//! Every subcommand reads plain-text field and mask files, writes its output
//! fields plus a `report.jsonl` into `--out`, and exits with
//! [`EXIT_OK`], [`EXIT_AUDIT`] (outputs written, some check failed) or
//! [`EXIT_INPUT`].

pub mod args;
mod commands;
pub mod config;
pub mod report;
pub mod specdesc;

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use anyhow::{anyhow, Context};
use clap::{Arg, CommandFactory, FromArgMatches};

use args::{Cli, Command};
use report::Report;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_AUDIT: i32 = 2;

/// Environment variable capping the worker threads.
pub const THREADS_VAR: &str = "PSHKIT_THREADS";

/// Parses the command line, merging a `--config` file underneath it.
pub fn parse<I, T>(argv: I) -> Result<Cli, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let mut argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cmd = Cli::command();
    let m = cmd.clone().try_get_matches_from(&argv)?;
    let Some((name, sub)) = m.subcommand() else {
        return Cli::from_arg_matches(&m);
    };
    let Some(path) = sub.get_one::<PathBuf>("config").cloned() else {
        return Cli::from_arg_matches(&m);
    };
    let mut built = cmd.clone();
    built.build();
    let subcmd = built
        .find_subcommand(name)
        .expect("parsed subcommand exists");
    let args: Vec<&Arg> = subcmd
        .get_arguments()
        .chain(built.get_arguments())
        .collect();
    let extra = config::read_entries(&path)
        .and_then(|entries| config::extra_args(&path, &entries, &args, sub))
        .map_err(|e| {
            Cli::command().error(clap::error::ErrorKind::InvalidValue, format!("{e:#}"))
        })?;
    argv.extend(extra);
    let m = cmd.try_get_matches_from(&argv)?;
    Cli::from_arg_matches(&m)
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(v) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| anyhow!("{THREADS_VAR}={v}: expected a positive integer"))?;
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

/// Runs one command line and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match parse(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_AUDIT,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_INPUT
        }
    }
}

/// Global settings shared by the subcommands.
pub(crate) struct Ctx {
    pub out: PathBuf,
    pub seed: u64,
    pub report: Report,
}

fn execute(cli: Cli) -> anyhow::Result<bool> {
    configure_threads()?;
    let out = std::path::absolute(&cli.out).with_context(|| format!("{}", cli.out.display()))?;
    fs::create_dir_all(&out).with_context(|| format!("cannot create {}", out.display()))?;
    let log = cli.log.as_deref().map(std::path::absolute).transpose()?;
    let mut ctx = Ctx {
        report: Report::new(&out, log),
        out,
        seed: cli.seed,
    };
    match cli.command {
        Command::Envelope(a) => commands::envelope::run(a, &mut ctx)?,
        Command::Approximate(a) => commands::approximate::run(a, &mut ctx)?,
        Command::Hull(a) => commands::hull::run(a, &mut ctx)?,
        Command::AuditJet(a) => commands::audits::audit_jet(a, &mut ctx)?,
        Command::AuditSpec(a) => commands::audits::audit_spec(a, &mut ctx)?,
        Command::Smooth(a) => commands::smooth::run(a, &mut ctx)?,
    }
    let pass = ctx.report.finish()?;
    println!("status pass={pass}");
    Ok(pass)
}
