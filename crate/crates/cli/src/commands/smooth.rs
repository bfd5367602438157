use anyhow::{anyhow, bail};
use pshkit_core::approx::{audit_strictness, smooth_with_budget, strictify};
use pshkit_core::envelope::{ConsistencySlack, SolverParams};
use pshkit_core::grid::PointKind;
use serde_json::json;

use super::{aligned, echo, field_on, input, interior_of, optional, save, spec_desc};
use crate::args::SmoothArgs;
use crate::Ctx;

pub fn run(mut a: SmoothArgs, ctx: &mut Ctx) -> anyhow::Result<()> {
    let u_path = input(&mut a.u, "u")?;
    let rho_path = input(&mut a.rho, "rho")?;
    let compact_path = optional(&mut a.compact, "compact")?;
    let desc = spec_desc(&mut a.spec, "spec")?;
    let eps = a
        .eps
        .ok_or_else(|| anyhow!("missing --eps (flag or config key)"))?;
    if !(eps > 0.0) {
        bail!("--eps {eps}: must be positive");
    }
    echo(ctx, "smooth", &a)?;

    let u = field_on(&u_path, None)?;
    let rho = aligned(&u, field_on(&rho_path, None)?, &rho_path)?;
    let grid = u.grid().clone();
    let spec = desc.build(grid.n(), Some(&grid))?;
    let points: Vec<usize> = match &compact_path {
        Some(p) => {
            let m = interior_of(p, &grid)?;
            let pts: Vec<usize> = (0..grid.len()).filter(|&i| m[i]).collect();
            if let Some(&i) = pts.iter().find(|&&i| grid.kind(i) != PointKind::Interior) {
                bail!(
                    "--compact {}: point {:?} is not Interior",
                    p.display(),
                    grid.point(i)
                );
            }
            pts
        }
        None => grid.indices_of(PointKind::Interior),
    };
    if points.is_empty() {
        bail!("no points to audit");
    }
    let slack = a.strict_slack.unwrap_or_else(|| {
        let d = SolverParams::<f64>::defaults(grid.n()).directions;
        ConsistencySlack::default().value(grid.spacing(), d)
    });

    let c0 = audit_strictness(&rho, &spec, 0.0, Some(&points))?
        .margin
        .worst_margin;
    if !(c0 > 0.0) {
        bail!(
            "--rho {}: margin {c0} on the audited points is not positive",
            rho_path.display()
        );
    }
    let added = audit_strictness(&rho.map(|r| eps * r), &spec, 0.0, Some(&points))?
        .margin
        .worst_margin;
    let strict = strictify(&u, &rho, eps)?;
    save(ctx, &strict, "strict.fld")?;
    let required = eps * c0 - slack;
    let rep = audit_strictness(&strict, &spec, required, Some(&points))?;
    println!(
        "strict margin={:e} required={required:e} added_margin={added:e} rho_margin={c0:e}",
        rep.margin.worst_margin
    );
    ctx.report.emit(
        "strictify",
        json!({ "eps": eps, "rho_margin": c0, "added_margin": added, "slack": slack, "points": points.len() }),
    )?;
    ctx.report.check("strictness", rep.pass, &rep)?;

    if let Some(r) = a.radius {
        let sm = smooth_with_budget(&strict, r, &spec, eps * c0)?;
        if sm.report.pass {
            save(ctx, &sm.field, "smooth.fld")?;
        }
        println!(
            "smooth pass={} max_change={:e}",
            sm.report.pass, sm.report.max_change
        );
        ctx.report.check("smoothing", sm.report.pass, &sm.report)?;
    }
    Ok(())
}
