use std::sync::Arc;

use anyhow::{anyhow, bail};
use pshkit_core::envelope::comparison_check;
use pshkit_core::grid::{read_mask, GridField};
use pshkit_core::jet::{
    audit_spec as spec_audit, inclusion_check, monotonicity_check, sigma_nesting_check,
};
use pshkit_core::linalg::Mat;
use pshkit_core::{Error, Jet, Lattice, Spec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::{echo, optional, spec_desc};
use crate::args::{AuditJetArgs, AuditSpecArgs};
use crate::specdesc::SpecDesc;
use crate::Ctx;

fn dimension(n: Option<usize>, grid: Option<&Lattice>) -> anyhow::Result<usize> {
    match (n, grid) {
        (Some(n), Some(g)) if n != g.n() => {
            bail!("--n {n} disagrees with the grid (n = {})", g.n())
        }
        (_, Some(g)) => Ok(g.n()),
        (Some(n), None) => Ok(n),
        (None, None) => bail!("missing --n (or --grid)"),
    }
}

fn require_spec(text: &mut Option<String>, key: &str) -> anyhow::Result<SpecDesc> {
    let t = text
        .as_mut()
        .ok_or_else(|| anyhow!("missing --{key} (flag or config key)"))?;
    spec_desc(t, key)
}

pub fn audit_spec(mut a: AuditSpecArgs, ctx: &mut Ctx) -> anyhow::Result<()> {
    let grid_path = optional(&mut a.grid, "grid")?;
    let desc = require_spec(&mut a.spec, "spec")?;
    echo(ctx, "audit-spec", &a)?;
    let grid = grid_path.map(read_mask::<f64>).transpose()?;
    let n = dimension(a.n, grid.as_ref())?;
    let spec = desc.build(n, grid.as_ref())?;
    let seed = ctx.seed;

    let rep = spec_audit(&spec, a.samples, seed, a.tau)?;
    println!(
        "double_dual checked={} agree={} positivity_violations={}",
        rep.double_dual_checked, rep.double_dual_agree, rep.positivity_violations
    );
    ctx.report.check(
        "double_dual",
        rep.double_dual_agree == rep.double_dual_checked,
        &rep,
    )?;
    ctx.report.check(
        "positivity",
        rep.positivity_violations == 0,
        rep.worst_positivity,
    )?;
    if a.nesting {
        let nest = sigma_nesting_check::<f64>(n, a.samples, seed)?;
        println!(
            "nesting members={} violations={}",
            nest.members, nest.violations
        );
        ctx.report
            .check("sigma_nesting", nest.violations == 0, &nest)?;
    }
    if a.self_dual {
        let dual = spec.dual();
        let fwd = inclusion_check(&spec, &dual, a.samples, seed)?;
        let back = inclusion_check(&dual, &spec, a.samples, seed.wrapping_add(1))?;
        println!(
            "self_dual violations={} reverse_violations={}",
            fwd.violations, back.violations
        );
        ctx.report.check(
            "self_dual",
            fwd.violations == 0 && back.violations == 0,
            json!({ "spec_in_dual": fwd, "dual_in_spec": back }),
        )?;
    }
    Ok(())
}

/// Parses `r; p…; A…` (whitespace or comma separated, `A` row-major).
fn parse_jet(text: &str, dim: usize) -> anyhow::Result<Jet> {
    let parts: Vec<&str> = text.split(';').collect();
    if parts.len() != 3 {
        bail!("--jet `{text}`: expected `r; p…; A…`");
    }
    let nums = |s: &str| -> anyhow::Result<Vec<f64>> {
        s.split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse().map_err(|_| anyhow!("--jet: cannot parse `{t}`")))
            .collect()
    };
    let r = nums(parts[0])?;
    let p = nums(parts[1])?;
    let a = nums(parts[2])?;
    if r.len() != 1 || p.len() != dim || a.len() != dim * dim {
        bail!("--jet: need 1, {dim} and {} numbers", dim * dim);
    }
    Ok(Jet::new(r[0], p, Mat::from_row_major(dim, dim, a))?)
}

/// Random field from convex quadratics, a convex kink and pluriharmonic
/// quadratics: subharmonic for every spec containing the convex jets.
fn random_field(rng: &mut ChaCha8Rng, grid: &Arc<Lattice>) -> GridField<f64> {
    let dim = grid.dim();
    let a: f64 = rng.gen_range(0.0..2.0);
    let c: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let kink: f64 = rng.gen_range(0.0..1.0);
    let l1: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let l2: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let ph: Vec<(f64, f64)> = (0..dim / 2)
        .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let shift: f64 = rng.gen_range(-1.0..1.0);
    GridField::from_fn(grid.clone(), move |x| {
        let q: f64 = x.iter().zip(&c).map(|(xi, ci)| (xi - ci).powi(2)).sum();
        let d1: f64 = x.iter().zip(&l1).map(|(a, b)| a * b).sum();
        let d2: f64 = x.iter().zip(&l2).map(|(a, b)| a * b).sum();
        // Re(α z_k²) for each complex coordinate z_k = x_{2k} + i x_{2k+1}
        let harm: f64 = ph
            .iter()
            .enumerate()
            .map(|(k, &(re, im))| {
                let (u, v) = (x[2 * k], x[2 * k + 1]);
                re * (u * u - v * v) - im * 2.0 * u * v
            })
            .sum();
        a * q + kink * d1.max(d2) + harm + shift
    })
}

pub fn audit_jet(mut a: AuditJetArgs, ctx: &mut Ctx) -> anyhow::Result<()> {
    let grid_path = optional(&mut a.grid, "grid")?;
    let desc = require_spec(&mut a.spec, "spec")?;
    let cone = a.cone.as_mut().map(|t| spec_desc(t, "cone")).transpose()?;
    if a.pairs > 0 && grid_path.is_none() {
        bail!("--pairs needs --grid");
    }
    echo(ctx, "audit-jet", &a)?;
    let grid = grid_path.map(read_mask::<f64>).transpose()?.map(Arc::new);
    let n = dimension(a.n, grid.as_deref())?;
    let spec: Spec = desc.build(n, grid.as_deref())?;
    let cone_spec = match &cone {
        Some(c) => c.build(n, grid.as_deref())?,
        None => spec.clone(),
    };
    let seed = ctx.seed;

    if a.samples > 0 {
        let mono = monotonicity_check(&spec, &cone_spec, a.samples, seed)?;
        println!(
            "monotonicity samples={} violations={}",
            mono.samples, mono.violations
        );
        ctx.report
            .check("monotonicity", mono.violations == 0, &mono)?;
    }

    if let Some(text) = &a.jet {
        let jet = parse_jet(text, 2 * n)?;
        let m = spec.membership(0, &jet)?;
        println!("jet margin={m:e} member={}", m >= 0.0);
        ctx.report.emit(
            "jet",
            json!({ "jet": text, "margin": m, "member": m >= 0.0 }),
        )?;
    }

    if let Some(grid) = grid.filter(|_| a.pairs > 0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut tested, mut skipped, mut violations) = (0usize, 0usize, 0usize);
        let cap = 20 * a.pairs;
        while tested < a.pairs && tested + skipped < cap {
            let u = random_field(&mut rng, &grid);
            let v = random_field(&mut rng, &grid);
            match comparison_check(&u, &v, &spec, a.comparison_tol, a.ctol) {
                Ok(ok) => {
                    tested += 1;
                    violations += usize::from(!ok);
                }
                Err(Error::Precondition(_)) => skipped += 1,
                Err(e) => return Err(e.into()),
            }
        }
        println!("comparison tested={tested} skipped={skipped} violations={violations}");
        ctx.report.check(
            "comparison",
            tested == a.pairs && violations == 0,
            json!({ "requested": a.pairs, "tested": tested, "skipped": skipped, "violations": violations }),
        )?;
    }
    Ok(())
}
