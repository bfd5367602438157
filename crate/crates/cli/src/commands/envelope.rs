use anyhow::Context;
use pshkit_core::envelope::{audit_envelope, solve_obstacle, ConsistencySlack, EnvelopeProblem};

use super::{aligned, echo, field_on, input, optional, save, solver_params, spec_desc};
use crate::args::EnvelopeArgs;
use crate::Ctx;

pub fn run(mut a: EnvelopeArgs, ctx: &mut Ctx) -> anyhow::Result<()> {
    let g_path = input(&mut a.g, "g")?;
    let grid_path = optional(&mut a.grid, "grid")?;
    let phi_path = optional(&mut a.phi, "phi")?;
    let desc = spec_desc(&mut a.spec, "spec")?;
    echo(ctx, "envelope", &a)?;

    let g = field_on(&g_path, grid_path.as_deref())?;
    let phi = match &phi_path {
        Some(p) => Some(aligned(&g, field_on(p, None)?, p)?),
        None => None,
    };
    let grid = g.grid().clone();
    let spec = desc.build(grid.n(), Some(&grid))?;
    let params = solver_params(&a.solver, grid.n(), 1e-8)?;
    ctx.report.emit("params", &params)?;
    let tol = params.tol;
    let problem = EnvelopeProblem::new(spec, g, phi, params).context("envelope problem")?;
    let sol = solve_obstacle(&problem)?;
    save(ctx, &sol.field, "h.fld")?;
    let summary = sol.summary();
    println!(
        "solve iterations={} residual={:e} converged={}",
        summary.iterations, summary.residual, summary.converged
    );
    ctx.report.emit("solve", &summary)?;
    ctx.report.check("converged", sol.converged, &summary)?;
    let audit = audit_envelope(&problem, &sol.field, tol, ConsistencySlack::default())?;
    ctx.report.check(
        "below_obstacle",
        audit.below_obstacle,
        audit.max_above_obstacle,
    )?;
    ctx.report
        .check("boundary_exact", audit.boundary_exact, ())?;
    ctx.report
        .check("subharmonic", audit.subharmonic.pass, &audit)?;
    Ok(())
}
