use rayon::prelude::*;
use serde::Serialize;

use super::{GridField, PointKind};
use crate::error::{Error, Result};
use crate::jet::{membership, Jet2, SubequationSpec};
use crate::linalg::Mat;
use crate::scalar::Scalar;

/// Central-difference 2-jet at an Interior point.
pub fn discrete_jet<S: Scalar>(field: &GridField<S>, idx: usize) -> Result<Jet2<S>> {
    let grid = field.grid();
    if idx >= grid.len() || grid.kind(idx) != PointKind::Interior {
        return Err(Error::Domain(format!(
            "discrete jet requested at non-interior point {:?}",
            grid.coords(idx.min(grid.len().saturating_sub(1)))
        )));
    }
    stencil_jet(field, idx)
}

/// Central-difference jet at any point whose full 3^{2n} neighbourhood lies in
/// the lattice (used for Boundary points of defining functions).
pub(crate) fn stencil_jet<S: Scalar>(field: &GridField<S>, idx: usize) -> Result<Jet2<S>> {
    let grid = field.grid();
    let d = grid.dim();
    let h = grid.spacing();
    let u = field.values();
    let at = |off: &[isize]| -> Result<S> {
        grid.offset(idx, off).map(|j| u[j]).ok_or_else(|| {
            Error::Domain(format!(
                "stencil of point {:?} leaves the lattice",
                grid.coords(idx)
            ))
        })
    };
    let c = u[idx];
    let two = S::lit(2.0);
    let mut p = vec![S::zero(); d];
    let mut a = Mat::zeros(d, d);
    let mut off = vec![0isize; d];
    for i in 0..d {
        off[i] = 1;
        let plus = at(&off)?;
        off[i] = -1;
        let minus = at(&off)?;
        off[i] = 0;
        p[i] = (plus - minus) / (two * h);
        a[(i, i)] = (plus - two * c + minus) / (h * h);
    }
    let four_h2 = S::lit(4.0) * h * h;
    for i in 0..d {
        for j in (i + 1)..d {
            let mut corner = |si: isize, sj: isize| -> Result<S> {
                off[i] = si;
                off[j] = sj;
                let v = at(&off);
                off[i] = 0;
                off[j] = 0;
                v
            };
            let pp = corner(1, 1)?;
            let pm = corner(1, -1)?;
            let mp = corner(-1, 1)?;
            let mm = corner(-1, -1)?;
            let v = ((pp - pm) - (mp - mm)) / four_h2;
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    Jet2::new(c, p, a)
}

#[derive(Clone, Debug, Serialize)]
pub struct SubharmonicReport {
    pub worst_margin: f64,
    /// Linear lattice index of the worst point.
    pub worst_point: Option<usize>,
    pub worst_position: Vec<f64>,
    pub checked: usize,
    pub pass: bool,
}

/// Smallest membership margin over the selected points, ties broken by the
/// smallest index so the result does not depend on scheduling.
fn worst_margin<S: Scalar>(
    field: &GridField<S>,
    spec: &SubequationSpec<S>,
    points: &[usize],
    jet: impl Fn(usize) -> Result<Jet2<S>> + Sync,
) -> Result<Option<(S, usize)>> {
    if spec.dim() != field.grid().dim() {
        return Err(Error::Dimension(format!(
            "spec of dimension {} on a grid of dimension {}",
            spec.dim(),
            field.grid().dim()
        )));
    }
    let margins: Vec<S> = points
        .par_iter()
        .map(|&i| membership(spec, i, &jet(i)?))
        .collect::<Result<_>>()?;
    let mut best: Option<(S, usize)> = None;
    for (&m, &i) in margins.iter().zip(points) {
        if best.map_or(true, |(b, _)| m < b || m.is_nan()) {
            best = Some((m, i));
        }
    }
    Ok(best)
}

/// Audits `margin(discrete_jet) ≥ −tol` on every Interior point.
pub fn is_field_subharmonic<S: Scalar>(
    field: &GridField<S>,
    spec: &SubequationSpec<S>,
    tol: S,
) -> Result<SubharmonicReport> {
    let pts = field.grid().indices_of(PointKind::Interior);
    subharmonic_on(field, spec, tol, &pts)
}

/// Same audit restricted to the given Interior points.
pub fn subharmonic_on<S: Scalar>(
    field: &GridField<S>,
    spec: &SubequationSpec<S>,
    tol: S,
    points: &[usize],
) -> Result<SubharmonicReport> {
    let worst = worst_margin(field, spec, points, |i| discrete_jet(field, i))?;
    Ok(match worst {
        Some((m, i)) => SubharmonicReport {
            worst_margin: m.as_f64(),
            worst_point: Some(i),
            worst_position: field.grid().point(i).iter().map(|v| v.as_f64()).collect(),
            checked: points.len(),
            pass: m >= -tol,
        },
        None => SubharmonicReport {
            worst_margin: f64::INFINITY,
            worst_point: None,
            worst_position: vec![],
            checked: 0,
            pass: true,
        },
    })
}

/// Smallest margin of the discrete jets of `psi` on Interior ∪ Boundary, with
/// its lattice index.
pub fn strict_margin<S: Scalar>(
    psi: &GridField<S>,
    spec: &SubequationSpec<S>,
) -> Result<(S, usize)> {
    let pts: Vec<usize> = psi.active().collect();
    worst_margin(psi, spec, &pts, |i| stencil_jet(psi, i))?
        .ok_or_else(|| Error::Domain("grid has no active points".into()))
}

/// Rounding floor of second differences of `psi`: margins at or below it do
/// not certify strictness.
pub fn rounding_floor<S: Scalar>(psi: &GridField<S>) -> S {
    let h = psi.grid().spacing();
    let scale = S::one()
        + psi
            .max_on(&super::ACTIVE)
            .abs()
            .max(psi.min_on(&super::ACTIVE).abs());
    S::lit(64.0) * S::epsilon() * scale / (h * h)
}

/// True iff the discrete jets of `psi` have margin `≥ c` on Interior ∪ Boundary
/// and that margin is strictly positive (above the rounding floor).
pub fn check_strict_pseudoconvex<S: Scalar>(
    psi: &GridField<S>,
    spec: &SubequationSpec<S>,
    c: S,
) -> Result<bool> {
    let m = strict_margin(psi, spec)?.0;
    Ok(m >= c && m > rounding_floor(psi))
}
