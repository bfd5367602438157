//! Decreasing strict approximation of a subharmonic sample by envelopes over
//! an exhaustion, with strictification and a verified smoothing surrogate.

mod chi;
mod smooth;
mod supconv;

pub use chi::{
    convex_majorant_chi, exhaustion_surrogate, tame_exhaustion, Chi, Taming, TamingReport,
};
pub use smooth::{
    audit_strictness, smooth_with_budget, strictify, Smoothed, SmoothingReport, StrictnessReport,
};
pub use supconv::sup_convolution;

use std::sync::Arc;

use serde::Serialize;

use crate::envelope::{
    certify_upper, solve_obstacle_from, EnvelopeProblem, SolveSummary, SolverParams,
};
use crate::error::{Error, Result};
use crate::grid::{rounding_floor, subharmonic_on, GridField, PointKind, ACTIVE};
use crate::jet::SubequationSpec;
use crate::scalar::Scalar;

/// Inputs of an exhaustion run.
#[derive(Clone, Debug)]
pub struct ApproximationRun<S> {
    /// The sample `u` (subharmonic up to the discretisation).
    pub u: GridField<S>,
    /// Strict exhaustion / defining function `ρ`.
    pub rho: GridField<S>,
    pub spec: SubequationSpec<S>,
    /// Increasing slopes `k` of the sup-convolutions and shifts `ρ − k`.
    pub k_schedule: Vec<u32>,
    /// Strictly decreasing positive `ε_k`, one per stage.
    pub eps_schedule: Vec<S>,
    pub params: SolverParams<S>,
    /// Compact working mask on which `u_k − u` and strictness are reported.
    pub compact: Vec<bool>,
    /// Spacing of the level ladder for `t_k`.
    pub ladder_step: S,
    /// Slack allowed in the order audits.
    pub audit_tol: S,
    /// Slack allowed in the strictness audit of `u_k + ε_k ρ`.
    pub strict_slack: S,
    /// Smallest discrete-jet margin of `ρ` on Interior.
    pub c0: S,
}

impl<S: Scalar> ApproximationRun<S> {
    pub fn new(
        u: GridField<S>,
        rho: GridField<S>,
        spec: SubequationSpec<S>,
        k_schedule: Vec<u32>,
        eps_schedule: Vec<S>,
        params: SolverParams<S>,
    ) -> Result<Self> {
        u.check_lattice(&rho)?;
        u.check_finite()?;
        rho.check_finite()?;
        if spec.dim() != u.grid().dim() {
            return Err(Error::Dimension(format!(
                "spec of dimension {} on a grid of dimension {}",
                spec.dim(),
                u.grid().dim()
            )));
        }
        if k_schedule.is_empty() || k_schedule[0] == 0 {
            return Err(Error::Argument(
                "k-schedule must be nonempty with k ≥ 1".into(),
            ));
        }
        if k_schedule.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Argument(
                "k-schedule must be strictly increasing".into(),
            ));
        }
        if eps_schedule.len() != k_schedule.len() {
            return Err(Error::Argument(format!(
                "{} values of ε for {} stages",
                eps_schedule.len(),
                k_schedule.len()
            )));
        }
        if eps_schedule.iter().any(|&e| !(e > S::zero()))
            || eps_schedule.windows(2).any(|w| !(w[1] < w[0]))
        {
            return Err(Error::Argument(
                "ε-schedule must be positive and strictly decreasing".into(),
            ));
        }
        let interior = rho.grid().indices_of(PointKind::Interior);
        let report = subharmonic_on(&rho, &spec, S::zero(), &interior)?;
        let c0 = S::lit(report.worst_margin);
        if !(c0 > rounding_floor(&rho)) {
            return Err(Error::Precondition(format!(
                "ρ is not strictly subharmonic: margin {} at {:?}",
                report.worst_margin, report.worst_position
            )));
        }
        let compact = u
            .grid()
            .mask()
            .iter()
            .map(|&k| k == PointKind::Interior)
            .collect();
        let h = u.grid().spacing().as_f64();
        let strict_slack =
            S::lit(crate::envelope::ConsistencySlack::default().value(h, params.directions));
        Ok(ApproximationRun {
            u,
            rho,
            spec,
            k_schedule,
            eps_schedule,
            params,
            compact,
            ladder_step: S::lit(0.5),
            audit_tol: S::lit(1e-9),
            strict_slack,
            c0,
        })
    }

    /// Restricts reporting to `mask`, which must lie in Interior.
    pub fn with_compact(mut self, mask: Vec<bool>) -> Result<Self> {
        let grid = self.u.grid();
        if mask.len() != grid.len() {
            return Err(Error::Dimension("compact mask length".into()));
        }
        if let Some(i) = (0..grid.len()).find(|&i| mask[i] && grid.kind(i) != PointKind::Interior) {
            return Err(Error::Domain(format!(
                "compact mask point {:?} is not Interior",
                grid.point(i)
            )));
        }
        if !mask.contains(&true) {
            return Err(Error::Domain("compact mask is empty".into()));
        }
        self.compact = mask;
        Ok(self)
    }

    pub fn with_audit_tol(mut self, tol: S) -> Self {
        self.audit_tol = tol;
        self
    }

    pub fn with_strict_slack(mut self, slack: S) -> Self {
        self.strict_slack = slack;
        self
    }

    pub fn with_ladder_step(mut self, step: S) -> Result<Self> {
        if !(step > S::zero()) {
            return Err(Error::Argument("ladder step must be positive".into()));
        }
        self.ladder_step = step;
        Ok(self)
    }
}

/// One audited invariant of one stage.
#[derive(Clone, Debug, Serialize)]
pub struct AuditLine {
    pub stage: u32,
    pub invariant: String,
    /// Largest violation (positive) or smallest headroom (nonpositive).
    pub worst_slack: f64,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct Stage<S> {
    pub k: u32,
    pub t_k: S,
    /// Interior points of `Ω_k`.
    pub omega_points: usize,
    pub g_k: GridField<S>,
    /// `ũ_k = max(g_k, ρ′ − k)`.
    pub obstacle: GridField<S>,
    pub u_k: GridField<S>,
    /// `u_k + ε_k(ρ − max ρ)`.
    pub strict: GridField<S>,
    pub eps: S,
    pub solve: SolveSummary,
    pub eta: S,
    /// `max (u_k − u)` over the compact mask.
    pub compact_gap: S,
    pub strictness: StrictnessReport,
}

#[derive(Clone, Debug)]
pub struct ApproximationOutput<S> {
    pub stages: Vec<Stage<S>>,
    pub audits: Vec<AuditLine>,
    pub taming: TamingReport,
    pub tamed_rho: GridField<S>,
    pub c0: S,
}

impl<S> ApproximationOutput<S> {
    pub fn all_pass(&self) -> bool {
        self.audits.iter().all(|a| a.pass)
    }
}

fn audit_le<S: Scalar>(
    stage: u32,
    name: &str,
    a: &GridField<S>,
    b: &GridField<S>,
    points: impl Iterator<Item = usize>,
    tol: S,
) -> AuditLine {
    let mut worst = S::neg_infinity();
    for i in points {
        worst = worst.max(a.at(i) - b.at(i));
    }
    AuditLine {
        stage,
        invariant: name.into(),
        worst_slack: worst.as_f64(),
        pass: !(worst > tol),
    }
}

/// Level `t_k`: the smallest ladder value strictly above every `ρ′ − k` at
/// which `ρ′ − k ≤ g₁`, so that `{ρ′ − k ≥ t_k} ⊂ {ρ′ − k > g₁}`.
fn pick_level<S: Scalar>(shifted: &GridField<S>, g1: &GridField<S>, step: S, k: u32) -> Result<S> {
    let grid = shifted.grid();
    let mut m = S::neg_infinity();
    for i in shifted.active() {
        if shifted.at(i) <= g1.at(i) {
            m = m.max(shifted.at(i));
        }
    }
    if m == S::neg_infinity() {
        return Err(Error::Schedule {
            k: k.to_string(),
            reason: "ρ′ − k exceeds g₁ everywhere; Ω_k would be empty".into(),
        });
    }
    let mut t = (m / step).floor() * step;
    while !(t > m) {
        t = t + step;
    }
    for i in grid.indices_of(PointKind::Boundary) {
        if shifted.at(i) < t {
            return Err(Error::Schedule {
                k: k.to_string(),
                reason: format!(
                    "no admissible level: the grid boundary point {:?} has ρ′ − k = {} below t_k = {}",
                    grid.point(i),
                    shifted.at(i),
                    t
                ),
            });
        }
    }
    Ok(t)
}

/// Runs the stages `k` of the schedule: `g_k` by sup-convolution,
/// `ρ′ = χ∘ρ` tamed against `g₁`, `ũ_k = max(g_k, ρ′ − k)`, and `u_k` the
/// certified envelope of `ũ_k` on `Ω_k = {ρ′ − k < t_k}` with data `ρ′ − k`,
/// extended by `ρ′ − k`. Each stage is also strictified against `ρ − max ρ`.
pub fn exhaustion_sequence<S: Scalar>(run: &ApproximationRun<S>) -> Result<ApproximationOutput<S>> {
    let grid = run.u.grid().clone();
    let g1 = sup_convolution(&run.u, S::from_usize_lossy(run.k_schedule[0] as usize))?;
    let taming = tame_exhaustion(&run.rho, &g1, &run.spec)?;
    let rho_t = taming.rho.clone();
    let rho_max = run.rho.max_on(&ACTIVE);
    let rho_norm = run.rho.map(|r| r - rho_max);
    let interior = grid.indices_of(PointKind::Interior);
    let compact_pts: Vec<usize> = interior
        .iter()
        .copied()
        .filter(|&i| run.compact[i])
        .collect();
    let mut audits = Vec::new();
    let mut stages: Vec<Stage<S>> = Vec::new();
    for (si, &k) in run.k_schedule.iter().enumerate() {
        let ks = S::from_usize_lossy(k as usize);
        let g_k = if si == 0 {
            g1.clone()
        } else {
            sup_convolution(&run.u, ks)?
        };
        let shifted = rho_t.map(|r| r - ks);
        let obstacle = g_k.zip_map(&shifted, S::max)?;
        let t_k = pick_level(&shifted, &g1, run.ladder_step, k)?;
        let inside: Vec<bool> = (0..grid.len())
            .map(|i| grid.kind(i) == PointKind::Interior && shifted.at(i) < t_k)
            .collect();
        let sub = Arc::new(grid.sub_domain(&inside).map_err(|e| Error::Schedule {
            k: k.to_string(),
            reason: format!("Ω_k unusable: {e}"),
        })?);
        let problem = EnvelopeProblem::new(
            run.spec.clone(),
            obstacle.with_grid(sub.clone())?,
            Some(shifted.with_grid(sub.clone())?),
            run.params.clone(),
        )?;
        let start = match stages.last() {
            Some(p) => p.u_k.zip_map(&obstacle, S::min)?,
            None => obstacle.clone(),
        };
        let sol = solve_obstacle_from(&problem, &start.with_grid(sub.clone())?)?;
        let cert = certify_upper(&problem, &sol.field)?;
        let mut vals = shifted.values().to_vec();
        for i in 0..grid.len() {
            if inside[i] {
                let mut v = cert.field.at(i);
                if let Some(p) = stages.last() {
                    v = v.min(p.u_k.at(i));
                }
                vals[i] = v;
            }
        }
        let u_k = GridField::new(grid.clone(), vals)?;
        let tol = run.audit_tol;
        if let Some(p) = stages.last() {
            audits.push(audit_le(
                k,
                "obstacle decreasing",
                &obstacle,
                &p.obstacle,
                u_k.active(),
                tol,
            ));
            audits.push(audit_le(
                k,
                "u_k decreasing",
                &u_k,
                &p.u_k,
                u_k.active(),
                tol,
            ));
        }
        audits.push(audit_le(
            k,
            "u_k below obstacle",
            &u_k,
            &obstacle,
            u_k.active(),
            tol,
        ));
        let off = (0..grid.len()).filter(|&i| grid.kind(i) != PointKind::Exterior && !inside[i]);
        let mut eq = S::zero();
        for i in off {
            eq = eq.max((u_k.at(i) - obstacle.at(i)).abs());
        }
        audits.push(AuditLine {
            stage: k,
            invariant: "u_k equals obstacle off omega_k".into(),
            worst_slack: eq.as_f64(),
            pass: !(eq > tol),
        });
        audits.push(audit_le(k, "u below u_k", &run.u, &u_k, u_k.active(), tol));
        let mut gap = S::neg_infinity();
        for &i in &compact_pts {
            gap = gap.max(u_k.at(i) - run.u.at(i));
        }
        if let Some(p) = stages.last() {
            audits.push(AuditLine {
                stage: k,
                invariant: "compact gap nonincreasing".into(),
                worst_slack: (gap - p.compact_gap).as_f64(),
                pass: !(gap > p.compact_gap + tol),
            });
        }
        let eps = run.eps_schedule[si];
        let strict = strictify(&u_k, &rho_norm, eps)?;
        let strictness = audit_strictness(
            &strict,
            &run.spec,
            eps * run.c0 - run.strict_slack,
            Some(&compact_pts),
        )?;
        audits.push(AuditLine {
            stage: k,
            invariant: "strictness of u_k + eps rho".into(),
            worst_slack: strictness.required - strictness.margin.worst_margin,
            pass: strictness.pass,
        });
        stages.push(Stage {
            k,
            t_k,
            omega_points: inside.iter().filter(|&&b| b).count(),
            g_k,
            obstacle,
            u_k,
            strict,
            eps,
            solve: sol.summary(),
            eta: cert.eta,
            compact_gap: gap,
            strictness,
        });
    }
    Ok(ApproximationOutput {
        stages,
        audits,
        taming: taming.report,
        tamed_rho: rho_t,
        c0: run.c0,
    })
}
