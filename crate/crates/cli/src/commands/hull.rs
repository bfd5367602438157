use std::sync::Arc;

use anyhow::{bail, Context};
use pshkit_core::grid::{read_mask, write_mask, GridField, PointKind, ACTIVE};
use pshkit_core::hull::{
    hull_class_agreement, relative_extremal, sublevel_set, AgreementParams, CompactSet,
};
use serde_json::json;

use super::{
    aligned, echo, field_on, input, interior_of, norm, optional, save, solver_params, spec_desc,
};
use crate::args::HullArgs;
use crate::Ctx;

fn write_set(
    ctx: &Ctx,
    grid: &pshkit_core::Lattice,
    set: &CompactSet,
    name: &str,
) -> anyhow::Result<()> {
    let g = grid.sub_domain(set.members())?;
    write_mask(&g, ctx.out.join(name))?;
    Ok(())
}

pub fn run(mut a: HullArgs, ctx: &mut Ctx) -> anyhow::Result<()> {
    let grid_path = input(&mut a.grid, "grid")?;
    let k_path = input(&mut a.k, "K")?;
    let rho_path = optional(&mut a.rho, "rho")?;
    let desc = spec_desc(&mut a.spec, "spec")?;
    if let Some(o) = &a.oracle {
        if o != "radial" {
            bail!("--oracle {o}: only `radial` is available");
        }
    }
    echo(ctx, "hull", &a)?;

    let grid = Arc::new(read_mask::<f64>(&grid_path)?);
    let k = CompactSet::new(&grid, interior_of(&k_path, &grid)?)
        .with_context(|| format!("--K {}", k_path.display()))?;
    let spec = desc.build(grid.n(), Some(&grid))?;
    let params = solver_params(&a.solver, grid.n(), 1e-9)?;
    ctx.report.emit("params", &params)?;
    let h = grid.spacing();

    let u = relative_extremal(&grid, &spec, &k, &params)?;
    let raw = sublevel_set(&u.field, a.theta - 1.0, &k);
    save(ctx, &u.field, "u_K.fld")?;
    write_set(ctx, &grid, &raw, "hull.mask")?;
    println!(
        "hull k_points={} hull_points={} iterations={}",
        k.len(),
        raw.len(),
        u.iterations
    );
    ctx.report.emit(
        "hull",
        json!({
            "k_points": k.len(),
            "hull_points": raw.len(),
            "theta": a.theta,
            "solve": u.summary(),
        }),
    )?;
    ctx.report.check("k_in_hull", k.is_subset(&raw), ())?;

    if a.oracle.is_some() {
        radial(&a, ctx, &u.field, &k, &raw, h)?;
    }

    if a.agreement {
        let rho = match &rho_path {
            Some(p) => aligned(&u.field, field_on(p, None)?, p)?,
            None => {
                let top = grid
                    .mask()
                    .iter()
                    .enumerate()
                    .filter(|(_, &m)| ACTIVE.contains(&m))
                    .map(|(i, _)| norm(&grid.point(i)).powi(2))
                    .fold(0.0, f64::max);
                GridField::from_fn(grid.clone(), |x| norm(x).powi(2) - top)
            }
        };
        let mut ap = AgreementParams::defaults(h);
        ap.theta = a.theta;
        ap.eps = a.eps;
        if let Some(r) = a.radius {
            ap.radius = r;
        }
        if let Some(c) = a.collar {
            ap.collar = c;
        }
        ctx.report.emit("agreement_params", &ap)?;
        let ag = hull_class_agreement(&grid, &spec, &k, &rho, &ap, &params)?;
        if let Some(s) = &ag.smooth {
            write_set(ctx, &grid, s, "hull_smooth.mask")?;
        }
        println!(
            "agreement symmetric_difference={} within_one_ring={} partial={}",
            ag.report.symmetric_difference, ag.report.within_one_ring, ag.report.partial
        );
        let ok = !ag.report.partial && ag.report.within_one_ring;
        ctx.report.check("agreement", ok, &ag.report)?;
    }
    Ok(())
}

/// Relative extremal function of the ball `|x| ≤ a` in the ball of radius `R`:
/// `max(−1, log(|x|/R) / log(R/a))`, with `a` the largest `|x|` over K.
fn radial(
    a: &HullArgs,
    ctx: &mut Ctx,
    u: &GridField<f64>,
    k: &CompactSet,
    raw: &CompactSet,
    h: f64,
) -> anyhow::Result<()> {
    let grid = u.grid();
    let big_r = a.oracle_radius;
    let rad = (0..grid.len())
        .filter(|&i| k.contains(i))
        .map(|i| norm(&grid.point(i)))
        .fold(0.0, f64::max);
    if !(rad > 0.0 && rad < big_r) {
        bail!("radial oracle needs 0 < max |x| over K < {big_r}, got {rad}");
    }
    let oracle = |r: f64| {
        if r <= 0.0 {
            -1.0
        } else {
            ((r / big_r).ln() / (big_r / rad).ln()).max(-1.0)
        }
    };
    let mut err = 0.0f64;
    let mut beyond = 0usize;
    for i in grid.indices_of(PointKind::Interior) {
        let r = norm(&grid.point(i));
        err = err.max((u.at(i) - oracle(r)).abs());
        if raw.contains(i) != (r <= rad) && (r - rad).abs() > h {
            beyond += 1;
        }
    }
    println!("oracle ball_radius={rad} sup_error={err:.6} mismatches_beyond_one_cell={beyond}");
    ctx.report.check(
        "oracle_extremal",
        err <= a.oracle_tol,
        json!({ "ball_radius": rad, "sup_error": err, "tol": a.oracle_tol }),
    )?;
    ctx.report.check(
        "oracle_hull",
        beyond == 0,
        json!({ "mismatches_beyond_one_cell": beyond }),
    )?;
    Ok(())
}
