use serde::Serialize;

use super::EnvelopeProblem;
use crate::error::{Error, Result};
use crate::grid::{
    discrete_jet, is_field_subharmonic, GridField, PointKind, SubharmonicReport, ACTIVE,
};
use crate::jet::SubequationSpec;
use crate::scalar::Scalar;

/// Relative audit tolerance `c₁h² + c₂/D` for discrete-jet margins of
/// envelopes; [`audit_envelope`] multiplies it by `1 + max |D²h|`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ConsistencySlack {
    pub c1: f64,
    pub c2: f64,
}

impl Default for ConsistencySlack {
    fn default() -> Self {
        ConsistencySlack { c1: 16.0, c2: 2.0 }
    }
}

impl ConsistencySlack {
    pub fn value(&self, h: f64, directions: usize) -> f64 {
        self.c1 * h * h + self.c2 / directions as f64
    }
}

/// `1 + max |A|` over the central-difference Hessians `A` of `field` on Interior.
pub fn hessian_scale<S: Scalar>(field: &GridField<S>) -> Result<f64> {
    let mut m = 0.0f64;
    for i in field.grid().indices_of(PointKind::Interior) {
        m = m.max(discrete_jet(field, i)?.a().max_abs().as_f64());
    }
    Ok(1.0 + m)
}

#[derive(Clone, Debug, Serialize)]
pub struct EnvelopeAudit {
    /// `max (h − g)` over Interior ∪ Boundary.
    pub max_above_obstacle: f64,
    pub below_obstacle: bool,
    /// `h = φ` bitwise on Boundary.
    pub boundary_exact: bool,
    pub subharmonic: SubharmonicReport,
    pub slack: ConsistencySlack,
    /// `1 + max |D²h|` on Interior.
    pub hessian_scale: f64,
    /// `(c₁h² + c₂/D)·hessian_scale`.
    pub ctol: f64,
    pub pass: bool,
}

/// Checks `h ≤ g + tol`, `h = φ` on Boundary and discrete subharmonicity
/// of `h` within the consistency slack scaled by the size of `D²h`.
pub fn audit_envelope<S: Scalar>(
    problem: &EnvelopeProblem<S>,
    h: &GridField<S>,
    tol: S,
    slack: ConsistencySlack,
) -> Result<EnvelopeAudit> {
    let g = problem.obstacle();
    h.check_lattice(g)?;
    let max_above = h.max_excess_on(g, &ACTIVE);
    let grid = problem.grid();
    let phi = problem.boundary();
    let boundary_exact = grid
        .indices_of(PointKind::Boundary)
        .iter()
        .all(|&i| h.at(i).to_bits_eq(phi.at(i)));
    let field = h.with_grid(grid.clone())?;
    let scale = hessian_scale(&field)?;
    let ctol = slack.value(grid.spacing().as_f64(), problem.params().directions) * scale;
    let sub = is_field_subharmonic(&field, problem.spec(), S::lit(ctol))?;
    let below = max_above <= tol;
    Ok(EnvelopeAudit {
        max_above_obstacle: max_above.as_f64(),
        below_obstacle: below,
        boundary_exact,
        pass: below && boundary_exact && sub.pass,
        subharmonic: sub,
        slack,
        hessian_scale: scale,
        ctol,
    })
}

trait BitEq {
    fn to_bits_eq(self, other: Self) -> bool;
}

impl<S: Scalar> BitEq for S {
    fn to_bits_eq(self, other: Self) -> bool {
        // equal values of the same scalar type with matching sign of zero
        self == other && self.is_sign_negative() == other.is_sign_negative()
    }
}

/// `true` iff `competitor ≤ h + tol` everywhere on Interior ∪ Boundary.
/// The competitor must be a Perron-family member: discretely subharmonic
/// within `ctol`, below `g + tol`, and below `φ + tol` on Boundary.
pub fn verify_maximality<S: Scalar>(
    problem: &EnvelopeProblem<S>,
    h: &GridField<S>,
    competitor: &GridField<S>,
    tol: S,
    ctol: S,
) -> Result<bool> {
    let grid = problem.grid();
    h.check_lattice(competitor)?;
    competitor.check_lattice(problem.obstacle())?;
    let comp = competitor.with_grid(grid.clone())?;
    let sub = is_field_subharmonic(&comp, problem.spec(), ctol)?;
    if !sub.pass {
        return Err(Error::Precondition(format!(
            "competitor is not subharmonic: margin {} at {:?}",
            sub.worst_margin, sub.worst_position
        )));
    }
    let above = comp.max_excess_on(problem.obstacle(), &ACTIVE);
    if above > tol {
        return Err(Error::Precondition(format!(
            "competitor exceeds the obstacle by {above}"
        )));
    }
    let above_phi = comp.max_excess_on(problem.boundary(), &[PointKind::Boundary]);
    if above_phi > tol {
        return Err(Error::Precondition(format!(
            "competitor exceeds the boundary data by {above_phi}"
        )));
    }
    Ok(comp.max_excess_on(h, &ACTIVE) <= tol)
}

/// `(max over Interior, max over Boundary)` of `u + v`.
pub fn comparison_gap<S: Scalar>(u: &GridField<S>, v: &GridField<S>) -> Result<(S, S)> {
    let sum = u.zip_map(v, |a, b| a + b)?;
    Ok((
        sum.max_on(&[PointKind::Interior]),
        sum.max_on(&[PointKind::Boundary]),
    ))
}

fn audit_or_reject<S: Scalar>(
    f: &GridField<S>,
    spec: &SubequationSpec<S>,
    ctol: S,
    name: &str,
) -> Result<SubharmonicReport> {
    let rep = is_field_subharmonic(f, spec, ctol)?;
    if !rep.pass {
        return Err(Error::Precondition(format!(
            "{name} fails the {} audit: margin {} at {:?}",
            spec.node, rep.worst_margin, rep.worst_position
        )));
    }
    Ok(rep)
}

/// For `u` F-subharmonic and `v` F̃-subharmonic (both audited within
/// `ctol`), `true` iff `max_Int (u + v) ≤ max_∂ (u + v) + tol`.
pub fn comparison_check<S: Scalar>(
    u: &GridField<S>,
    v: &GridField<S>,
    spec: &SubequationSpec<S>,
    tol: S,
    ctol: S,
) -> Result<bool> {
    u.check_lattice(v)?;
    audit_or_reject(u, spec, ctol, "u")?;
    let v = v.with_grid(u.grid().clone())?;
    audit_or_reject(&v, &spec.dual(), ctol, "v")?;
    let (int, bnd) = comparison_gap(u, &v)?;
    Ok(int <= bnd + tol)
}
