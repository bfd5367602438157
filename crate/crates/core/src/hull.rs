//! Hulls of compact lattice sets through relative extremal functions.

use std::sync::Arc;

use serde::Serialize;

use crate::approx::{audit_strictness, smooth_with_budget, strictify, SmoothingReport};
use crate::envelope::{solve_obstacle, EnvelopeProblem, EnvelopeSolution, SolverParams};
use crate::error::{Error, Result};
use crate::grid::{distance_to_exterior, king_offsets, Grid, GridField, PointKind};
use crate::jet::SubequationSpec;
use crate::scalar::Scalar;

/// Nonempty set of Interior lattice points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompactSet {
    members: Vec<bool>,
}

impl CompactSet {
    pub fn new<S: Scalar>(grid: &Grid<S>, members: Vec<bool>) -> Result<Self> {
        if members.len() != grid.len() {
            return Err(Error::Dimension(format!(
                "set has {} entries for {} lattice points",
                members.len(),
                grid.len()
            )));
        }
        if let Some(i) =
            (0..grid.len()).find(|&i| members[i] && grid.kind(i) != PointKind::Interior)
        {
            return Err(Error::Domain(format!(
                "point {:?} of K is not Interior",
                grid.point(i)
            )));
        }
        if !members.contains(&true) {
            return Err(Error::Domain("K is empty".into()));
        }
        Ok(CompactSet { members })
    }

    /// Interior points `x` with `pred(x)`.
    pub fn from_predicate<S: Scalar>(grid: &Grid<S>, pred: impl Fn(&[S]) -> bool) -> Result<Self> {
        let m = (0..grid.len())
            .map(|i| grid.kind(i) == PointKind::Interior && pred(&grid.point(i)))
            .collect();
        Self::new(grid, m)
    }

    /// All Interior points.
    pub fn interior<S: Scalar>(grid: &Grid<S>) -> Self {
        CompactSet {
            members: grid
                .mask()
                .iter()
                .map(|&k| k == PointKind::Interior)
                .collect(),
        }
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.members[idx]
    }

    pub fn members(&self) -> &[bool] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_subset(&self, other: &CompactSet) -> bool {
        self.members.len() == other.members.len()
            && self
                .members
                .iter()
                .zip(&other.members)
                .all(|(&a, &b)| !a || b)
    }

    pub fn symmetric_difference(&self, other: &CompactSet) -> Vec<usize> {
        (0..self.members.len())
            .filter(|&i| self.members[i] != other.members[i])
            .collect()
    }
}

/// Envelope with obstacle `−1` on `K`, `0` elsewhere and boundary data `0`.
pub fn relative_extremal<S: Scalar>(
    grid: &Arc<Grid<S>>,
    spec: &SubequationSpec<S>,
    k: &CompactSet,
    params: &SolverParams<S>,
) -> Result<EnvelopeSolution<S>> {
    if k.members.len() != grid.len() {
        return Err(Error::Dimension("K is not on this lattice".into()));
    }
    let g = GridField::new(
        grid.clone(),
        k.members
            .iter()
            .map(|&b| if b { -S::one() } else { S::zero() })
            .collect(),
    )?;
    let phi = GridField::constant(grid.clone(), S::zero());
    let problem = EnvelopeProblem::new(spec.clone(), g, Some(phi), params.clone())?;
    let sol = solve_obstacle(&problem)?;
    if !sol.converged {
        return Err(Error::Inconsistent(format!(
            "relative extremal did not converge: residual {} after {} iterations",
            sol.residual, sol.iterations
        )));
    }
    Ok(sol)
}

/// `{x ∈ Interior : v(x) ≤ level} ∪ K`.
pub fn sublevel_set<S: Scalar>(v: &GridField<S>, level: S, k: &CompactSet) -> CompactSet {
    let grid = v.grid();
    CompactSet {
        members: (0..grid.len())
            .map(|i| k.members[i] || (grid.kind(i) == PointKind::Interior && v.at(i) <= level))
            .collect(),
    }
}

/// `K̂ = {u_K ≤ −1 + θ} ∪ K`.
pub fn hull<S: Scalar>(
    grid: &Arc<Grid<S>>,
    spec: &SubequationSpec<S>,
    k: &CompactSet,
    theta: S,
    params: &SolverParams<S>,
) -> Result<CompactSet> {
    check_theta(theta)?;
    let u = relative_extremal(grid, spec, k, params)?;
    Ok(sublevel_set(&u.field, theta - S::one(), k))
}

fn check_theta<S: Scalar>(theta: S) -> Result<()> {
    if !(theta > S::zero() && theta < S::one()) {
        return Err(Error::Argument(format!(
            "threshold θ = {theta} must lie in (0, 1)"
        )));
    }
    Ok(())
}

/// Doublings of `ε` tried by [`hull_class_agreement`].
pub const MAX_DOUBLINGS: usize = 12;

#[derive(Clone, Debug, Serialize)]
pub struct AgreementReport {
    pub raw_points: usize,
    pub smooth_points: Option<usize>,
    pub symmetric_difference: usize,
    /// Every point of the difference is a lattice neighbour of both the raw
    /// hull and its complement.
    pub within_one_ring: bool,
    /// Strictification parameter of the reported smoothing attempt.
    pub eps: f64,
    pub attempts: usize,
    /// Smallest discrete-jet margin `c₀` of `ρ`.
    pub rho_margin: f64,
    /// Interior points of the working region.
    pub working_points: usize,
    pub smoothing: Option<SmoothingReport>,
    /// The smoothing audit failed or was not attempted; only the raw hull is valid.
    pub partial: bool,
}

#[derive(Clone, Debug)]
pub struct Agreement {
    pub raw: CompactSet,
    pub smooth: Option<CompactSet>,
    pub report: AgreementReport,
}

/// Settings of [`hull_class_agreement`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct AgreementParams<S> {
    /// Smoothing radius.
    pub radius: S,
    pub theta: S,
    /// First strictification parameter tried.
    pub eps: S,
    /// The smooth family lives on the Interior points at least this far
    /// from Exterior.
    pub collar: S,
}

impl<S: Scalar> AgreementParams<S> {
    /// `r = 8h`, `θ = 0.01`, `ε = 0.01`, collar `8h`.
    pub fn defaults(h: S) -> Self {
        AgreementParams {
            radius: S::lit(8.0) * h,
            theta: S::lit(DEFAULT_THETA),
            eps: S::lit(0.01),
            collar: S::lit(8.0) * h,
        }
    }
}

/// Default hull threshold `θ`.
pub const DEFAULT_THETA: f64 = 0.01;

/// Compares `K̂` from `u_K` with the hull thresholded from the strictified
/// then smoothed `v = smooth(u_K + ε(ρ − max ρ))` on the working region
/// (Interior minus the collar), namely `{v ≤ max_K v + θ} ∪ K`. `ε` runs
/// through `eps, 2eps, 4eps, …` (at most `MAX_DOUBLINGS` doublings) until the
/// smoothing audit passes with budget `ε·c₀`, `c₀` the margin of `ρ`.
pub fn hull_class_agreement<S: Scalar>(
    grid: &Arc<Grid<S>>,
    spec: &SubequationSpec<S>,
    k: &CompactSet,
    rho: &GridField<S>,
    ap: &AgreementParams<S>,
    params: &SolverParams<S>,
) -> Result<Agreement> {
    let theta = ap.theta;
    check_theta(theta)?;
    if !(ap.eps > S::zero()) {
        return Err(Error::Argument(format!("ε = {} must be positive", ap.eps)));
    }
    let depth = distance_to_exterior(grid);
    let work: Vec<bool> = (0..grid.len())
        .map(|i| grid.kind(i) == PointKind::Interior && depth[i] >= ap.collar)
        .collect();
    if let Some(i) = (0..grid.len()).find(|&i| k.contains(i) && !work[i]) {
        return Err(Error::Domain(format!(
            "K point {:?} lies in the collar of width {}",
            grid.point(i),
            ap.collar
        )));
    }
    let sub = Arc::new(grid.sub_domain(&work)?);
    let u = relative_extremal(grid, spec, k, params)?;
    let raw = sublevel_set(&u.field, theta - S::one(), k);
    let rmax = rho.max_on(&crate::grid::ACTIVE);
    let rho_n = rho.map(|r| r - rmax);
    let c0 = audit_strictness(rho, spec, S::zero(), None)?
        .margin
        .worst_margin;
    let mut report = AgreementReport {
        raw_points: raw.len(),
        smooth_points: None,
        symmetric_difference: 0,
        within_one_ring: true,
        eps: ap.eps.as_f64(),
        attempts: 0,
        rho_margin: c0,
        working_points: sub.count(PointKind::Interior),
        smoothing: None,
        partial: true,
    };
    if !(c0 > 0.0) {
        return Ok(Agreement {
            raw,
            smooth: None,
            report,
        });
    }
    let mut e = ap.eps;
    let mut found = None;
    for attempt in 0..=MAX_DOUBLINGS {
        let strict = strictify(&u.field, &rho_n, e)?.with_grid(sub.clone())?;
        let smoothed = smooth_with_budget(&strict, ap.radius, spec, e * S::lit(c0))?;
        report.eps = e.as_f64();
        report.attempts = attempt + 1;
        let ok = smoothed.report.pass;
        report.smoothing = Some(smoothed.report.clone());
        if ok {
            found = Some(smoothed);
            break;
        }
        e = e + e;
    }
    let Some(smoothed) = found else {
        return Ok(Agreement {
            raw,
            smooth: None,
            report,
        });
    };
    let v = smoothed.field;
    let top = (0..grid.len())
        .filter(|&i| k.contains(i))
        .map(|i| v.at(i))
        .fold(S::neg_infinity(), S::max);
    let smooth = sublevel_set(&v, top + theta, k);
    let diff = raw.symmetric_difference(&smooth);
    let offs = king_offsets(grid.dim());
    let ring = diff.iter().all(|&i| {
        let near = |want: bool| {
            offs.iter()
                .any(|o| matches!(grid.offset(i, o), Some(j) if raw.contains(j) == want && j != i))
        };
        near(true) && near(false)
    });
    report.smooth_points = Some(smooth.len());
    report.symmetric_difference = diff.len();
    report.within_one_ring = ring;
    report.partial = false;
    Ok(Agreement {
        raw,
        smooth: Some(smooth),
        report,
    })
}
