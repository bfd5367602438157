pub mod approximate;
pub mod audits;
pub mod envelope;
pub mod hull;
pub mod smooth;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context};
use pshkit_core::envelope::{Iteration, SolverParams};
use pshkit_core::grid::{read_mask, write_field, Grid, GridField, PointKind};
use serde::Serialize;

use crate::args::SolverArgs;
use crate::specdesc::SpecDesc;
use crate::Ctx;

/// Absolute path of a required input file that must exist.
pub fn input(p: &mut Option<PathBuf>, key: &str) -> anyhow::Result<PathBuf> {
    let p = p
        .as_mut()
        .ok_or_else(|| anyhow!("missing --{key} (flag or config key)"))?;
    existing(p, key)
}

/// Same for an optional input.
pub fn optional(p: &mut Option<PathBuf>, key: &str) -> anyhow::Result<Option<PathBuf>> {
    p.as_mut().map(|p| existing(p, key)).transpose()
}

fn existing(p: &mut PathBuf, key: &str) -> anyhow::Result<PathBuf> {
    *p = std::path::absolute(&*p)?;
    if !p.is_file() {
        bail!("--{key} {}: no such file", p.display());
    }
    Ok(p.clone())
}

/// Parses a spec expression, resolving and checking the files it names.
pub fn spec_desc(text: &mut String, key: &str) -> anyhow::Result<SpecDesc> {
    let mut d = SpecDesc::parse(text).map_err(|e| anyhow!("--{key}: {e}"))?;
    d.rebase(&std::env::current_dir()?);
    for p in d.paths() {
        if !p.is_file() {
            bail!("--{key}: {}: no such file", p.display());
        }
    }
    *text = d.to_string();
    Ok(d)
}

pub fn solver_params(a: &SolverArgs, n: usize, tol: f64) -> anyhow::Result<SolverParams<f64>> {
    let mut p = SolverParams::defaults(n).with_tol(a.tol.unwrap_or(tol));
    if let Some(d) = a.directions {
        p = p.with_directions(d);
    }
    if let Some(s) = a.circle_samples {
        p = p.with_samples(s);
    }
    if let Some(m) = a.max_iter {
        p = p.with_max_iter(m);
    }
    let it = match (a.iteration.as_deref().unwrap_or("sor"), a.omega) {
        ("sor", omega) => Iteration::Sor { omega },
        ("jacobi", None) => Iteration::Jacobi,
        ("jacobi", Some(_)) => bail!("--omega applies to --iteration sor only"),
        (other, _) => bail!("--iteration {other}: expected sor or jacobi"),
    };
    Ok(p.with_iteration(it))
}

/// Echoes the resolved configuration.
pub fn echo(ctx: &mut Ctx, sub: &str, args: impl Serialize) -> anyhow::Result<()> {
    let out = ctx.out.display().to_string();
    let seed = ctx.seed;
    ctx.report.emit(
        "config",
        serde_json::json!({ "subcommand": sub, "out": out, "seed": seed, "args": args }),
    )
}

pub fn save(ctx: &Ctx, field: &GridField<f64>, name: &str) -> anyhow::Result<()> {
    write_field(field, ctx.out.join(name))?;
    Ok(())
}

/// Interior labels of a mask file on the lattice of `grid`.
pub fn interior_of(path: &Path, grid: &Grid<f64>) -> anyhow::Result<Vec<bool>> {
    let m = read_mask::<f64>(path)?;
    if !m.same_lattice(grid) {
        bail!(
            "{}: mask lattice differs from the input grid",
            path.display()
        );
    }
    Ok(m.mask().iter().map(|&k| k == PointKind::Interior).collect())
}

/// Reads a field, checking it against an optional mask file.
pub fn field_on(path: &Path, grid: Option<&Path>) -> anyhow::Result<GridField<f64>> {
    let f = pshkit_core::grid::read_field::<f64>(path)?;
    if let Some(gp) = grid {
        let g = read_mask::<f64>(gp)?;
        if !g.same_layout(f.grid()) {
            bail!(
                "{}: lattice or mask differs from {}",
                path.display(),
                gp.display()
            );
        }
    }
    Ok(f)
}

/// Re-expresses `other` on the grid of `base` after a lattice check.
pub fn aligned(
    base: &GridField<f64>,
    other: GridField<f64>,
    path: &Path,
) -> anyhow::Result<GridField<f64>> {
    if !other.grid().same_lattice(base.grid()) {
        bail!("{}: lattice differs from the first input", path.display());
    }
    other
        .with_grid(Arc::clone(base.grid()))
        .with_context(|| format!("{}", path.display()))
}

pub fn parse_list<T: std::str::FromStr>(text: &str, key: &str) -> anyhow::Result<Vec<T>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| anyhow!("--{key}: cannot parse `{}`", s.trim()))
        })
        .collect()
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}
