use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context};
use pshkit_core::approx::{convex_majorant_chi, exhaustion_sequence, ApproximationRun};
use serde_json::json;

use super::{
    aligned, echo, field_on, input, interior_of, optional, parse_list, save, solver_params,
    spec_desc,
};
use crate::args::ApproximateArgs;
use crate::Ctx;

pub fn run(mut a: ApproximateArgs, ctx: &mut Ctx) -> anyhow::Result<()> {
    if let Some(p) = optional(&mut a.chi_samples, "chi-samples")? {
        echo(ctx, "approximate", &a)?;
        return chi_only(&p, ctx);
    }
    let u_path = input(&mut a.u, "u")?;
    let rho_path = input(&mut a.rho, "rho")?;
    let compact_path = optional(&mut a.compact, "compact")?;
    let desc = spec_desc(&mut a.spec, "spec")?;
    let ks: Vec<u32> = parse_list(&a.k, "k")?;
    let eps: Vec<f64> = match &a.eps {
        Some(t) => parse_list(t, "eps")?,
        None => (0..ks.len()).map(|j| 0.5 * 0.5f64.powi(j as i32)).collect(),
    };
    echo(ctx, "approximate", &a)?;

    let u = field_on(&u_path, None)?;
    let rho = aligned(&u, field_on(&rho_path, None)?, &rho_path)?;
    let grid = u.grid().clone();
    let spec = desc.build(grid.n(), Some(&grid))?;
    let params = solver_params(&a.solver, grid.n(), 1e-9)?;
    ctx.report.emit("params", &params)?;
    let mut run = ApproximationRun::new(u, rho, spec, ks, eps, params)?
        .with_audit_tol(a.audit_tol)
        .with_ladder_step(a.ladder_step)?;
    if let Some(s) = a.strict_slack {
        run = run.with_strict_slack(s);
    }
    if let Some(p) = &compact_path {
        run = run
            .with_compact(interior_of(p, &grid)?)
            .with_context(|| format!("--compact {}", p.display()))?;
    }
    let out = exhaustion_sequence(&run)?;
    save(ctx, &out.tamed_rho, "tamed_rho.fld")?;
    ctx.report.emit("taming", &out.taming)?;
    for s in &out.stages {
        save(ctx, &s.u_k, &format!("u_{}.fld", s.k))?;
        save(ctx, &s.strict, &format!("strict_{}.fld", s.k))?;
        println!(
            "stage k={} t_k={} omega_points={} iterations={} compact_gap={:e}",
            s.k, s.t_k, s.omega_points, s.solve.iterations, s.compact_gap
        );
        ctx.report.emit(
            "stage",
            json!({
                "k": s.k,
                "t_k": s.t_k,
                "omega_points": s.omega_points,
                "eps": s.eps,
                "eta": s.eta,
                "compact_gap": s.compact_gap,
                "solve": s.solve,
                "strictness": s.strictness,
            }),
        )?;
    }
    for line in &out.audits {
        ctx.report.emit("audit", line)?;
    }
    let failed: Vec<_> = out.audits.iter().filter(|l| !l.pass).collect();
    ctx.report
        .check("audits", failed.is_empty(), json!({ "failed": failed }))?;
    Ok(())
}

fn read_samples(path: &Path) -> anyhow::Result<Vec<(f64, f64)>> {
    let text = fs::read_to_string(path).with_context(|| format!("{}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let s = line.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let at = || anyhow!("{}:{}: expected `t psi`, got `{s}`", path.display(), i + 1);
        let mut it = s.split_whitespace().map(str::parse::<f64>);
        match (it.next(), it.next(), it.next()) {
            (Some(Ok(t)), Some(Ok(v)), None) => out.push((t, v)),
            _ => return Err(at()),
        }
    }
    if out.is_empty() {
        bail!("{}: no samples", path.display());
    }
    Ok(out)
}

fn chi_only(path: &Path, ctx: &mut Ctx) -> anyhow::Result<()> {
    let samples = read_samples(path)?;
    let chi = convex_majorant_chi(&samples).with_context(|| format!("{}", path.display()))?;
    let slopes = chi.slopes();
    let mut text = String::from("# t chi\n");
    for (t, v) in chi.knots.iter().zip(&chi.values) {
        let _ = writeln!(text, "{t:.16e} {v:.16e}");
    }
    let file = ctx.out.join("chi.txt");
    fs::write(&file, text).with_context(|| format!("{}", file.display()))?;
    ctx.report.emit("chi", &chi)?;
    let convex = slopes.windows(2).all(|w| w[1] >= w[0]);
    let min_slope = slopes.iter().copied().fold(f64::INFINITY, f64::min);
    let dominated = samples.iter().filter(|&&(t, v)| chi.eval(t) < v).count();
    ctx.report.check("chi_convex", convex, ())?;
    ctx.report.check(
        "chi_slopes_at_least_one",
        slopes.iter().all(|&s| s >= 1.0),
        min_slope,
    )?;
    ctx.report.check(
        "chi_dominates",
        dominated == 0,
        json!({ "violations": dominated }),
    )?;
    Ok(())
}
