use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{distance_to_set, subharmonic_on, GridField, PointKind, SubharmonicReport};
use crate::jet::SubequationSpec;
use crate::scalar::Scalar;

/// `u + ε·ρ` on the common lattice.
pub fn strictify<S: Scalar>(u: &GridField<S>, rho: &GridField<S>, eps: S) -> Result<GridField<S>> {
    if !(eps >= S::zero()) {
        return Err(Error::Argument(format!("ε = {eps} must be nonnegative")));
    }
    u.zip_map(rho, |a, r| a + eps * r)
}

#[derive(Clone, Debug, Serialize)]
pub struct StrictnessReport {
    pub required: f64,
    pub margin: SubharmonicReport,
    pub pass: bool,
}

/// Audits discrete-jet margins `≥ required` on the given Interior points
/// (all of Interior when `points` is `None`).
pub fn audit_strictness<S: Scalar>(
    field: &GridField<S>,
    spec: &SubequationSpec<S>,
    required: S,
    points: Option<&[usize]>,
) -> Result<StrictnessReport> {
    let all;
    let pts = match points {
        Some(p) => p,
        None => {
            all = field.grid().indices_of(PointKind::Interior);
            &all[..]
        }
    };
    let margin = subharmonic_on(field, spec, -required, pts)?;
    Ok(StrictnessReport {
        required: required.as_f64(),
        pass: margin.pass,
        margin,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SmoothingReport {
    pub radius: f64,
    pub budget: f64,
    /// Interior points whose kernel support avoids Exterior.
    pub core_points: usize,
    pub blend_width: f64,
    pub max_change: f64,
    pub input_margin: f64,
    pub output: SubharmonicReport,
    /// Strict membership with margin `≥ c/2` survived on Interior.
    pub pass: bool,
    pub note: String,
}

#[derive(Clone, Debug)]
pub struct Smoothed<S> {
    /// The smoothed field when the audit passed, the input otherwise.
    pub field: GridField<S>,
    pub report: SmoothingReport,
}

fn bump<S: Scalar>(s: S) -> S {
    if s >= S::one() {
        S::zero()
    } else {
        (-S::one() / (S::one() - s * s)).exp()
    }
}

/// Twice continuously differentiable step: 0 for `t ≤ 0`, 1 for `t ≥ 1`.
fn smoothstep<S: Scalar>(t: S) -> S {
    let t = t.max(S::zero()).min(S::one());
    t * t * t * (t * (t * S::lit(6.0) - S::lit(15.0)) + S::lit(10.0))
}

/// Mollifies with the normalised lattice bump `exp(−1/(1 − |y|²/r²))` and
/// blends back to the input near Boundary:
/// `out = f + β(f⋆φ − f)` where `β` ramps from 0 at points whose kernel
/// support reaches Exterior (and at Boundary, which is never changed) to 1 a
/// blend width further in. The result is
/// audited for margin `≥ c/2` on all of Interior; on failure the input is
/// returned with the report.
pub fn smooth_with_budget<S: Scalar>(
    field: &GridField<S>,
    radius: S,
    spec: &SubequationSpec<S>,
    budget: S,
) -> Result<Smoothed<S>> {
    if !(budget > S::zero()) {
        return Err(Error::Precondition(format!(
            "smoothing needs a strict field: budget c = {budget} must be positive"
        )));
    }
    let grid = field.grid();
    let h = grid.spacing();
    if !(radius > h) {
        return Err(Error::Argument(format!(
            "radius {radius} must exceed the spacing {h}"
        )));
    }
    let interior = grid.indices_of(PointKind::Interior);
    let input = subharmonic_on(field, spec, -budget, &interior)?;
    let dim = grid.dim();
    let reach = (radius / h).floor().to_usize().unwrap_or(0) as isize;
    let mut kernel: Vec<(Vec<isize>, S)> = Vec::new();
    let mut off = vec![-reach; dim];
    loop {
        let d2: isize = off.iter().map(|o| o * o).sum();
        let s = (S::from_usize_lossy(d2 as usize)).sqrt() * h / radius;
        let w = bump(s);
        if w > S::zero() {
            kernel.push((off.clone(), w));
        }
        let mut a = dim;
        loop {
            if a == 0 {
                break;
            }
            a -= 1;
            if off[a] < reach {
                off[a] += 1;
                break;
            }
            off[a] = -reach;
            if a == 0 {
                a = usize::MAX;
                break;
            }
        }
        if a == usize::MAX {
            break;
        }
    }
    let total: S = kernel.iter().map(|k| k.1).fold(S::zero(), |a, b| a + b);
    for k in &mut kernel {
        k.1 = k.1 / total;
    }
    let offsets: Vec<isize> = kernel.iter().map(|(o, _)| grid.linear_offset(o)).collect();
    let core: Vec<bool> = (0..grid.len())
        .map(|i| {
            grid.kind(i) == PointKind::Interior
                && kernel
                    .iter()
                    .all(|(o, _)| matches!(grid.offset(i, o), Some(j) if grid.kind(j) != PointKind::Exterior))
        })
        .collect();
    let depth = distance_to_set(grid, |i| !core[i]);
    let width = (S::lit(2.0) * radius).max(S::lit(3.0) * h);
    let vals = field.values();
    let out: Vec<S> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            if !core[i] {
                return vals[i];
            }
            let mut acc = S::zero();
            for (k, &lo) in kernel.iter().zip(&offsets) {
                acc = acc + k.1 * vals[(i as isize + lo) as usize];
            }
            let beta = smoothstep((depth[i] - h) / width);
            vals[i] + beta * (acc - vals[i])
        })
        .collect();
    let smoothed = GridField::new(grid.clone(), out)?;
    let max_change = smoothed.max_abs_diff_on(field, &crate::grid::ACTIVE);
    let half = budget * S::lit(0.5);
    let output = subharmonic_on(&smoothed, spec, -half, &interior)?;
    let pass = output.pass;
    let report = SmoothingReport {
        radius: radius.as_f64(),
        budget: budget.as_f64(),
        core_points: core.iter().filter(|&&c| c).count(),
        blend_width: width.as_f64(),
        max_change: max_change.as_f64(),
        input_margin: input.worst_margin,
        output,
        pass,
        note:
            "mollification surrogate with a boundary blend; the Richberg gluing is not implemented"
                .into(),
    };
    Ok(Smoothed {
        field: if pass { smoothed } else { field.clone() },
        report,
    })
}
