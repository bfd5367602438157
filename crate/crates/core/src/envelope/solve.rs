use rayon::prelude::*;
use serde::Serialize;

use super::{EnvelopeProblem, Iteration, Scheme};
use crate::error::{Error, Result};
use crate::grid::GridField;
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct EnvelopeSolution<S> {
    pub field: GridField<S>,
    /// Sweeps performed.
    pub iterations: usize,
    /// `‖T(u) − u‖∞` of the returned field.
    pub residual: S,
    pub converged: bool,
    /// Relaxation factor in use at exit (`None` for Jacobi).
    pub omega: Option<f64>,
    /// Jacobi: sup change per sweep. SOR: residual at each check.
    pub history: Vec<S>,
    /// Jacobi only: largest pointwise decrease between consecutive iterates
    /// after the first sweep (zero when iterates increase monotonically).
    pub max_decrease: S,
}

impl<S: Scalar> EnvelopeSolution<S> {
    pub fn summary(&self) -> SolveSummary {
        SolveSummary {
            iterations: self.iterations,
            residual: self.residual.as_f64(),
            converged: self.converged,
            omega: self.omega,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveSummary {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub omega: Option<f64>,
}

fn check_on_lattice<S: Scalar>(problem: &EnvelopeProblem<S>, u: &GridField<S>) -> Result<()> {
    if !u.grid().same_lattice(problem.grid()) {
        return Err(Error::Dimension(
            "field is not on the problem's lattice".into(),
        ));
    }
    Ok(())
}

/// One Jacobi step `u ↦ T(u)`: on Interior the minimum of the obstacle and
/// of all circle averages, Boundary values unchanged. Requires `u = φ` on
/// Boundary.
pub fn sweep_step<S: Scalar>(
    problem: &EnvelopeProblem<S>,
    u: &GridField<S>,
) -> Result<GridField<S>> {
    check_on_lattice(problem, u)?;
    let sch = problem.scheme();
    for &i in &sch.boundary {
        if u.at(i) != sch.phi[i] {
            return Err(Error::Precondition(format!(
                "field differs from the boundary data at {:?}",
                sch.grid.point(i)
            )));
        }
    }
    GridField::new(problem.grid().clone(), sch.apply(u.values()))
}

/// Solves from [`EnvelopeProblem::initial_guess`].
pub fn solve_obstacle<S: Scalar>(problem: &EnvelopeProblem<S>) -> Result<EnvelopeSolution<S>> {
    solve_obstacle_from(problem, &problem.initial_guess())
}

/// Solves from a given start (clamped to the obstacle, Boundary reset to `φ`).
pub fn solve_obstacle_from<S: Scalar>(
    problem: &EnvelopeProblem<S>,
    start: &GridField<S>,
) -> Result<EnvelopeSolution<S>> {
    check_on_lattice(problem, start)?;
    let sch = problem.scheme();
    let mut u = start.values().to_vec();
    for &i in &sch.interior {
        u[i] = u[i].min(sch.cap[i]);
        if !u[i].is_finite() {
            return Err(Error::Inconsistent(format!(
                "start value not finite at {:?}",
                sch.grid.point(i)
            )));
        }
    }
    for &i in &sch.boundary {
        u[i] = sch.phi[i];
    }
    let params = problem.params();
    let sol = match params.iteration {
        Iteration::Jacobi => jacobi(sch, u, params.tol, params.max_iter),
        Iteration::Sor { omega } => {
            let w = omega.unwrap_or_else(|| auto_omega(sch));
            sor(sch, u, params.tol, params.max_iter, w)
        }
    };
    let (values, iterations, residual, converged, omega, history, max_decrease) = sol;
    Ok(EnvelopeSolution {
        field: GridField::new(problem.grid().clone(), values)?,
        iterations,
        residual,
        converged,
        omega,
        history,
        max_decrease,
    })
}

type Raw<S> = (Vec<S>, usize, S, bool, Option<f64>, Vec<S>, S);

fn jacobi<S: Scalar>(sch: &Scheme<S>, mut u: Vec<S>, tol: S, max_iter: usize) -> Raw<S> {
    let mut history = Vec::new();
    let mut max_decrease = S::zero();
    let mut change = sch.residual(&u);
    if change <= tol {
        return (u, 0, change, true, None, history, max_decrease);
    }
    for it in 1..=max_iter {
        let next = sch.apply(&u);
        let (ch, dec) = sch
            .interior
            .par_iter()
            .map(|&i| ((next[i] - u[i]).abs(), u[i] - next[i]))
            .reduce(
                || (S::zero(), S::neg_infinity()),
                |a, b| (a.0.max(b.0), a.1.max(b.1)),
            );
        if it > 1 {
            max_decrease = max_decrease.max(dec);
        }
        change = ch;
        history.push(ch);
        u = next;
        if change <= tol {
            return (u, it, change, true, None, history, max_decrease);
        }
    }
    (u, max_iter, change, false, None, history, max_decrease)
}

/// Relaxation factor `2 / (1 + √(1 − ρ²))` from the estimate `ρ = 1 − κ`,
/// `κ = e·λ₁ / (2d)`: `e` the stencil second moment, `λ₁` the first Dirichlet
/// eigenvalue of the ball inscribed in the interior, `d` the averaged dimension.
fn auto_omega<S: Scalar>(sch: &Scheme<S>) -> f64 {
    let g = &sch.grid;
    let h = g.spacing().as_f64();
    let run = (0..g.dim())
        .map(|a| g.max_interior_run(a))
        .min()
        .unwrap_or(1) as f64;
    let radius = 0.5 * (run + 1.0) * h;
    let e = sch.min_excess().as_f64();
    let d = g.dim() as f64;
    let lambda = if g.dim() == 2 { 5.783 } else { 14.682 } / (radius * radius);
    let kappa = (e * lambda / (2.0 * d)).clamp(1e-12, 1.0);
    let rho = 1.0 - kappa;
    (2.0 / (1.0 + (1.0 - rho * rho).sqrt())).clamp(1.0, 1.98)
}

fn sor<S: Scalar>(sch: &Scheme<S>, mut u: Vec<S>, tol: S, max_iter: usize, omega0: f64) -> Raw<S> {
    const CHECK: usize = 20;
    let mut omega = omega0;
    let mut history = Vec::new();
    let mut best_res = sch.residual(&u);
    history.push(best_res);
    if best_res <= tol {
        return (u, 0, best_res, true, Some(omega), history, S::zero());
    }
    let mut best = u.clone();
    let mut stale = 0usize;
    let mut buf: Vec<S> = Vec::new();
    for it in 1..=max_iter {
        let w = S::lit(omega);
        let mut max_update = S::zero();
        for colour in &sch.colours {
            colour
                .par_iter()
                .map(|&i| {
                    let raw = sch.raw_at(&u, i);
                    (u[i] + w * (raw - u[i])).min(sch.cap[i])
                })
                .collect_into_vec(&mut buf);
            for (&i, &v) in colour.iter().zip(&buf) {
                max_update = max_update.max((v - u[i]).abs());
                u[i] = v;
            }
        }
        if it % CHECK != 0 && max_update > tol && it != max_iter {
            continue;
        }
        let res = sch.residual(&u);
        history.push(res);
        if res <= tol {
            return (u, it, res, true, Some(omega), history, S::zero());
        }
        if res < best_res {
            best_res = res;
            best.clone_from(&u);
            stale = 0;
        } else {
            stale += 1;
            let diverging = res > best_res * S::lit(4.0) || !res.is_finite();
            if diverging {
                u.clone_from(&best);
            }
            if diverging || stale >= 10 {
                omega = 1.0 + 0.5 * (omega - 1.0);
                stale = 0;
            }
        }
    }
    let res = sch.residual(&best);
    let final_res = sch.residual(&u);
    if final_res <= res {
        (
            u,
            max_iter,
            final_res,
            false,
            Some(omega),
            history,
            S::zero(),
        )
    } else {
        (best, max_iter, res, false, Some(omega), history, S::zero())
    }
}

/// A discrete supersolution above the exact discrete envelope.
#[derive(Clone, Debug)]
pub struct Certificate<S> {
    /// `T(w)` for the verified supersolution `w = u + ηψ`; satisfies
    /// `T(field) ≤ field` exactly and `field ≤ g` on Interior.
    pub field: GridField<S>,
    pub eta: S,
    /// Residual of the input.
    pub residual: S,
    pub attempts: usize,
}

/// Lifts an approximate fixed point `u` to a field lying above the exact
/// fixed point of `T`: with `ψ = 1 + M − |x − c|²` (concave, so every rule
/// lowers it by at least the smallest stencil second moment `e`),
/// `w = u + ηψ` with `η = 2‖T(u) − u‖∞ / e` satisfies `T(w) ≤ w`; this is
/// checked pointwise (η is enlarged until it holds) and `T(w)` returned.
pub fn certify_upper<S: Scalar>(
    problem: &EnvelopeProblem<S>,
    u: &GridField<S>,
) -> Result<Certificate<S>> {
    check_on_lattice(problem, u)?;
    let sch = problem.scheme();
    let g = &sch.grid;
    let mut base = u.values().to_vec();
    for &i in &sch.boundary {
        base[i] = sch.phi[i];
    }
    let residual = sch.residual(&base);
    let e = sch.min_excess();
    let dim = g.dim();
    let mut lo = vec![S::infinity(); dim];
    let mut hi = vec![S::neg_infinity(); dim];
    for &i in &sch.interior {
        for (a, x) in g.point(i).into_iter().enumerate() {
            lo[a] = lo[a].min(x);
            hi[a] = hi[a].max(x);
        }
    }
    let centre: Vec<S> = lo
        .iter()
        .zip(&hi)
        .map(|(&a, &b)| (a + b) * S::lit(0.5))
        .collect();
    let dist2 = |i: usize| -> S {
        g.point(i)
            .iter()
            .zip(&centre)
            .map(|(&x, &c)| (x - c) * (x - c))
            .sum()
    };
    let m = sch
        .interior
        .iter()
        .map(|&i| dist2(i))
        .fold(S::zero(), S::max);
    let mut psi = vec![S::zero(); g.len()];
    for &i in &sch.interior {
        psi[i] = S::one() + m - dist2(i);
    }
    let scale = sch
        .interior
        .iter()
        .map(|&i| base[i].abs())
        .fold(S::one(), S::max);
    let floor = S::lit(64.0) * S::epsilon() * scale / e;
    let mut eta = (S::lit(2.0) * residual / e).max(floor);
    for attempt in 1..=40 {
        let mut w = base.clone();
        for &i in &sch.interior {
            w[i] = base[i] + eta * psi[i];
        }
        let tw = sch.apply(&w);
        let ok = sch.interior.iter().all(|&i| tw[i] <= w[i]);
        if ok {
            return Ok(Certificate {
                field: GridField::new(g.clone(), tw)?,
                eta,
                residual,
                attempts: attempt,
            });
        }
        eta = eta * S::lit(4.0);
    }
    Err(Error::Inconsistent(
        "could not certify a supersolution above the discrete envelope".into(),
    ))
}
