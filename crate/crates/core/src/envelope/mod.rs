//! Largest subharmonic minorant of an obstacle by a monotone circle-average
//! scheme, with a posteriori audits.

mod audit;
mod solve;
mod stencil;

pub use audit::{
    audit_envelope, comparison_check, comparison_gap, hessian_scale, verify_maximality,
    ConsistencySlack, EnvelopeAudit,
};
pub use solve::{
    certify_upper, solve_obstacle, solve_obstacle_from, sweep_step, Certificate, EnvelopeSolution,
    SolveSummary,
};

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridField, PointKind};
use crate::jet::SubequationSpec;
use crate::scalar::Scalar;
use stencil::{compile, PointRules, RuleBuilder, RuleTable};

/// Fixed-point iteration used by [`solve_obstacle`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Iteration {
    /// Plain `u ← T(u)`: reads only the previous iterate.
    Jacobi,
    /// Projected over-relaxed Gauss–Seidel over parity colours; `omega`
    /// `None` picks a relaxation factor from the domain size.
    Sor { omega: Option<f64> },
}

#[derive(Clone, Debug, Serialize)]
pub struct SolverParams<S> {
    /// Complex directions (or direction frames) per point.
    pub directions: usize,
    /// Samples per circle.
    pub samples: usize,
    /// Stop when `‖T(u) − u‖∞ ≤ tol`.
    pub tol: S,
    pub max_iter: usize,
    pub iteration: Iteration,
}

impl<S: Scalar> SolverParams<S> {
    /// `D = 16` (n = 1) or `32` (n = 2), `S = 16`, `tol = 1e−8`.
    pub fn defaults(n: usize) -> Self {
        SolverParams {
            directions: if n == 1 { 16 } else { 32 },
            samples: 16,
            tol: S::lit(1e-8),
            max_iter: 200_000,
            iteration: Iteration::Sor { omega: None },
        }
    }

    pub fn with_tol(mut self, tol: S) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_directions(mut self, d: usize) -> Self {
        self.directions = d;
        self
    }

    pub fn with_samples(mut self, s: usize) -> Self {
        self.samples = s;
        self
    }

    pub fn with_iteration(mut self, it: Iteration) -> Self {
        self.iteration = it;
        self
    }

    pub fn with_max_iter(mut self, m: usize) -> Self {
        self.max_iter = m;
        self
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.directions < 2 * n || self.directions < 4 {
            return Err(Error::Config(format!(
                "direction budget D = {} (need D ≥ 4 and at least 2 per complex dimension)",
                self.directions
            )));
        }
        if self.samples < 8 || self.samples % 2 != 0 {
            return Err(Error::Config(format!(
                "circle samples S = {} (need S ≥ 8 and even)",
                self.samples
            )));
        }
        if !(self.tol >= S::zero()) {
            return Err(Error::Config(format!("tolerance {}", self.tol)));
        }
        if let Iteration::Sor { omega: Some(w) } = self.iteration {
            if !(w > 0.0 && w < 2.0) {
                return Err(Error::Config(format!(
                    "relaxation factor {w} outside (0, 2)"
                )));
            }
        }
        Ok(())
    }
}

/// The discrete obstacle problem: lattice domain, spec, obstacle `g`,
/// Dirichlet data `φ` on Boundary and solver parameters.
pub struct EnvelopeProblem<S> {
    spec: SubequationSpec<S>,
    obstacle: GridField<S>,
    boundary: GridField<S>,
    params: SolverParams<S>,
    scheme: Arc<Scheme<S>>,
}

/// Precomputed operator `T(u)(x) = min(cap(x), min_d Σ w u)`.
pub(crate) struct Scheme<S> {
    pub grid: Arc<Grid<S>>,
    pub interior: Vec<usize>,
    pub boundary: Vec<usize>,
    /// Interior points split by coordinate parity; points of one colour never
    /// appear in each other's rules.
    pub colours: Vec<Vec<usize>>,
    pub rules: RuleTable<S>,
    /// Effective obstacle on every lattice point.
    pub cap: Vec<S>,
    /// Boundary data on every lattice point (used on Boundary only).
    pub phi: Vec<S>,
}

impl<S: Scalar> Scheme<S> {
    #[inline]
    pub fn raw_at(&self, u: &[S], idx: usize) -> S {
        let pr: &PointRules<S> = self.rules.at(idx);
        let mut best = S::infinity();
        for r in &pr.rules {
            let mut s = S::zero();
            for (&o, &w) in r.offs.iter().zip(&r.weights) {
                s = s + w * u[(idx as isize + o) as usize];
            }
            if s < best {
                best = s;
            }
        }
        best
    }

    #[inline]
    pub fn apply_at(&self, u: &[S], idx: usize) -> S {
        self.raw_at(u, idx).min(self.cap[idx])
    }

    /// One Jacobi application on Interior; Boundary set to `φ`.
    pub fn apply(&self, u: &[S]) -> Vec<S> {
        let mut out = u.to_vec();
        let vals: Vec<S> = self
            .interior
            .par_iter()
            .map(|&i| self.apply_at(u, i))
            .collect();
        for (&i, v) in self.interior.iter().zip(vals) {
            out[i] = v;
        }
        for &i in &self.boundary {
            out[i] = self.phi[i];
        }
        out
    }

    /// `max |T(u) − u|` over Interior.
    pub fn residual(&self, u: &[S]) -> S {
        self.interior
            .par_iter()
            .map(|&i| (self.apply_at(u, i) - u[i]).abs())
            .reduce(S::zero, S::max)
    }

    pub fn min_excess(&self) -> S {
        match &self.rules {
            RuleTable::Shared(r) => r.min_excess(),
            RuleTable::PerPoint(_) => self
                .interior
                .iter()
                .map(|&i| self.rules.at(i).min_excess())
                .fold(S::infinity(), S::min),
        }
    }
}

impl<S: Scalar> EnvelopeProblem<S> {
    /// `boundary` defaults to the obstacle; requires `φ ≤ g` on Boundary.
    pub fn new(
        spec: SubequationSpec<S>,
        obstacle: GridField<S>,
        boundary: Option<GridField<S>>,
        params: SolverParams<S>,
    ) -> Result<Self> {
        let grid = obstacle.grid().clone();
        if spec.dim() != grid.dim() {
            return Err(Error::Dimension(format!(
                "spec of dimension {} on a grid of dimension {}",
                spec.dim(),
                grid.dim()
            )));
        }
        params.validate(grid.n())?;
        let boundary = match boundary {
            Some(b) => {
                b.check_lattice(&obstacle)?;
                b.with_grid(grid.clone())?
            }
            None => obstacle.clone(),
        };
        let compiled = compile(&spec, &grid)?;
        let interior = grid.indices_of(PointKind::Interior);
        let bnd = grid.indices_of(PointKind::Boundary);
        let mut cap = obstacle.values().to_vec();
        if let Some(c) = &compiled.cap {
            for (a, &b) in cap.iter_mut().zip(c) {
                *a = a.min(b);
            }
        }
        for &i in interior.iter().chain(&bnd) {
            if cap[i].is_nan() {
                return Err(Error::Inconsistent(format!(
                    "obstacle is NaN at {:?}",
                    grid.point(i)
                )));
            }
            if !boundary.at(i).is_finite() && grid.kind(i) == PointKind::Boundary {
                return Err(Error::Inconsistent(format!(
                    "boundary data not finite at {:?}",
                    grid.point(i)
                )));
            }
        }
        for &i in &bnd {
            if boundary.at(i) > cap[i] {
                return Err(Error::Precondition(format!(
                    "boundary data {} exceeds the obstacle {} at {:?}",
                    boundary.at(i),
                    cap[i],
                    grid.point(i)
                )));
            }
        }
        let builder = RuleBuilder::new(&grid);
        let (d, s) = (params.directions, params.samples);
        let variable = !compiled.structure.is_constant()
            || compiled
                .congruence
                .as_ref()
                .map_or(false, |c| !c.is_constant());
        let rules = if variable {
            let mut table: Vec<Option<Arc<PointRules<S>>>> = vec![None; grid.len()];
            let built: Vec<(usize, PointRules<S>)> = interior
                .par_iter()
                .map(|&i| {
                    let cong = compiled.congruence.as_ref().map(|c| c.at(i));
                    (
                        i,
                        builder.point_rules(
                            compiled.structure.at(i),
                            cong,
                            compiled.frame_dim,
                            d,
                            s,
                        ),
                    )
                })
                .collect();
            for (i, r) in built {
                table[i] = Some(Arc::new(r));
            }
            RuleTable::PerPoint(table)
        } else {
            let cong = compiled.congruence.as_ref().map(|c| c.at(0));
            RuleTable::Shared(Arc::new(builder.point_rules(
                compiled.structure.at(0),
                cong,
                compiled.frame_dim,
                d,
                s,
            )))
        };
        let ncol = 1usize << grid.dim();
        let mut colours = vec![Vec::new(); ncol];
        for &i in &interior {
            let c = grid
                .coords(i)
                .iter()
                .enumerate()
                .fold(0usize, |acc, (a, &x)| acc | ((x & 1) << a));
            colours[c].push(i);
        }
        colours.retain(|c| !c.is_empty());
        let scheme = Scheme {
            grid: grid.clone(),
            interior,
            boundary: bnd,
            colours,
            rules,
            cap,
            phi: boundary.values().to_vec(),
        };
        Ok(EnvelopeProblem {
            spec,
            obstacle,
            boundary,
            params,
            scheme: Arc::new(scheme),
        })
    }

    pub fn grid(&self) -> &Arc<Grid<S>> {
        self.obstacle.grid()
    }

    pub fn spec(&self) -> &SubequationSpec<S> {
        &self.spec
    }

    pub fn obstacle(&self) -> &GridField<S> {
        &self.obstacle
    }

    pub fn boundary(&self) -> &GridField<S> {
        &self.boundary
    }

    pub fn params(&self) -> &SolverParams<S> {
        &self.params
    }

    /// Obstacle including caps from obstacle-restricted specs.
    pub fn effective_obstacle(&self) -> GridField<S> {
        GridField::new(self.grid().clone(), self.scheme.cap.clone()).expect("cap length")
    }

    pub(crate) fn scheme(&self) -> &Scheme<S> {
        &self.scheme
    }

    /// Smallest stencil average of `|y − x|²` over all rules.
    pub fn min_excess(&self) -> S {
        self.scheme.min_excess()
    }

    /// Initial iterate: the constant `min(min φ|∂, min g|Int)` on Interior, `φ` on Boundary.
    pub fn initial_guess(&self) -> GridField<S> {
        let sch = &self.scheme;
        let mut c = S::infinity();
        for &i in &sch.boundary {
            c = c.min(sch.phi[i]);
        }
        for &i in &sch.interior {
            c = c.min(sch.cap[i]);
        }
        let mut v = self.obstacle.values().to_vec();
        for &i in &sch.interior {
            v[i] = c;
        }
        for &i in &sch.boundary {
            v[i] = sch.phi[i];
        }
        GridField::new(self.grid().clone(), v).expect("field length")
    }
}
