use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{distance_to_exterior, is_field_subharmonic, rounding_floor, GridField};
use crate::jet::SubequationSpec;
use crate::scalar::Scalar;

/// Convex piecewise-linear `χ` with knots `t_i`, values `χ_i`; slope 1 to
/// the left of the first knot and the last slope to the right.
#[derive(Clone, Debug, Serialize)]
pub struct Chi<S> {
    pub knots: Vec<S>,
    pub values: Vec<S>,
}

impl<S: Scalar> Chi<S> {
    /// Slopes of the segments between consecutive knots.
    pub fn slopes(&self) -> Vec<S> {
        self.knots
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(t, v)| (v[1] - v[0]) / (t[1] - t[0]))
            .collect()
    }

    pub fn eval(&self, t: S) -> S {
        let n = self.knots.len();
        if n == 1 || t <= self.knots[0] {
            return self.values[0] + (t - self.knots[0]);
        }
        if t >= self.knots[n - 1] {
            let s =
                (self.values[n - 1] - self.values[n - 2]) / (self.knots[n - 1] - self.knots[n - 2]);
            return self.values[n - 1] + s * (t - self.knots[n - 1]);
        }
        let i = self.knots.partition_point(|&k| k <= t) - 1;
        if t == self.knots[i] {
            return self.values[i];
        }
        let s = (self.values[i + 1] - self.values[i]) / (self.knots[i + 1] - self.knots[i]);
        self.values[i] + s * (t - self.knots[i])
    }

    /// Exact checks on the knot set: slopes nondecreasing and `≥ 1`.
    pub fn is_convex_with_unit_slopes(&self) -> bool {
        let s = self.slopes();
        s.iter().all(|&v| v >= S::one()) && s.windows(2).all(|w| w[1] >= w[0])
    }
}

/// Upper convex hull of points sorted by `t` (indices).
fn upper_hull<S: Scalar>(pts: &[(S, S)]) -> Vec<usize> {
    let mut h: Vec<usize> = Vec::new();
    for i in 0..pts.len() {
        while h.len() >= 2 {
            let (a, b) = (pts[h[h.len() - 2]], pts[h[h.len() - 1]]);
            let c = pts[i];
            if (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0) >= S::zero() {
                h.pop();
            } else {
                break;
            }
        }
        h.push(i);
    }
    h
}

/// Convex piecewise-linear majorant with all slopes `≥ 1`, built left to
/// right: `χ(t₀) = ψ(t₀)` and each slope is the largest of 1, the previous
/// slope and the least slope clearing every remaining sample. Node values
/// are nudged up by one ulp where rounding would break domination or the
/// slope order; both are asserted exactly before returning.
pub fn convex_majorant_chi<S: Scalar>(samples: &[(S, S)]) -> Result<Chi<S>> {
    if samples.is_empty() {
        return Err(Error::Argument("no samples".into()));
    }
    for (i, w) in samples.windows(2).enumerate() {
        if !(w[1].0 > w[0].0) {
            return Err(Error::Argument(format!(
                "samples not strictly increasing in t at position {}",
                i + 1
            )));
        }
    }
    if samples
        .iter()
        .any(|&(t, v)| !t.is_finite() || !v.is_finite())
    {
        return Err(Error::Argument("non-finite sample".into()));
    }
    let hull = upper_hull(samples);
    let n = samples.len();
    let mut values = vec![samples[0].1; n];
    let knots: Vec<S> = samples.iter().map(|s| s.0).collect();
    let mut prev_slope = S::one();
    let mut hpos = 0usize;
    for i in 0..n - 1 {
        let (ti, ci) = (knots[i], values[i]);
        while hpos < hull.len() && hull[hpos] <= i {
            hpos += 1;
        }
        let mut clear = S::neg_infinity();
        for &j in &hull[hpos..] {
            let (tj, vj) = samples[j];
            clear = clear.max((vj - ci) / (tj - ti));
        }
        let slope = S::one().max(prev_slope).max(clear);
        let dt = knots[i + 1] - ti;
        let mut next = ci + slope * dt;
        // rounding: keep the realised slope ≥ the chosen one and χ ≥ ψ
        while (next - ci) / dt < slope || next < samples[i + 1].1 {
            next = next.step_up();
        }
        values[i + 1] = next;
        prev_slope = (next - ci) / dt;
    }
    let chi = Chi { knots, values };
    if !chi.is_convex_with_unit_slopes() {
        return Err(Error::Inconsistent(
            "convex majorant lost slope order to rounding".into(),
        ));
    }
    if samples.iter().zip(&chi.values).any(|(s, &c)| c < s.1) {
        return Err(Error::Inconsistent(
            "convex majorant fails to dominate".into(),
        ));
    }
    Ok(chi)
}

#[derive(Clone, Debug, Serialize)]
pub struct TamingReport {
    /// `min (ρ′ − g₁ − E)` over Interior ∪ Boundary (≥ 0 up to rounding).
    pub min_excess_over_e: f64,
    /// Smallest discrete-jet margin of `ρ` and of `ρ′` on Interior.
    pub margin_rho: f64,
    pub margin_tamed: f64,
    pub max_slope: f64,
    pub knots: usize,
    pub note: String,
}

#[derive(Clone, Debug)]
pub struct Taming<S> {
    pub rho: GridField<S>,
    pub chi: Chi<S>,
    /// The exhaustion surrogate `E = 1/dist(x, Exterior)`.
    pub e: GridField<S>,
    pub report: TamingReport,
}

/// `E(x) = 1/d(x)` with `d` the distance to the nearest Exterior lattice point.
pub fn exhaustion_surrogate<S: Scalar>(rho: &GridField<S>) -> GridField<S> {
    let d = distance_to_exterior(rho.grid());
    GridField::new(
        rho.grid().clone(),
        d.into_iter().map(|v| S::one() / v).collect(),
    )
    .expect("length")
}

/// `ρ′ = χ∘ρ` with `χ` the convex majorant of `ψ(t) = sup{g₁ + E : ρ ≤ t}`
/// sampled at every value of `ρ` on Interior ∪ Boundary. The strictness of
/// `ρ′` is audited against that of `ρ`.
pub fn tame_exhaustion<S: Scalar>(
    rho: &GridField<S>,
    g1: &GridField<S>,
    spec: &SubequationSpec<S>,
) -> Result<Taming<S>> {
    rho.check_lattice(g1)?;
    let e = exhaustion_surrogate(rho);
    let mut pts: Vec<usize> = rho.active().collect();
    pts.sort_by(|&a, &b| {
        rho.at(a)
            .partial_cmp(&rho.at(b))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut samples: Vec<(S, S)> = Vec::new();
    let mut run = S::neg_infinity();
    for &i in &pts {
        run = run.max(g1.at(i) + e.at(i));
        let t = rho.at(i);
        match samples.last_mut() {
            Some(last) if last.0 == t => last.1 = run,
            _ => samples.push((t, run)),
        }
    }
    let chi = convex_majorant_chi(&samples)?;
    let tamed = rho.map(|t| chi.eval(t));
    let margin_rho = is_field_subharmonic(rho, spec, S::zero())?;
    let margin_tamed = is_field_subharmonic(&tamed, spec, S::zero())?;
    let floor = rounding_floor(&tamed);
    let required = S::lit(margin_rho.worst_margin) - floor;
    if S::lit(margin_tamed.worst_margin) < required {
        return Err(Error::Taming {
            point: margin_tamed.worst_position.clone(),
            margin: margin_tamed.worst_margin,
            required: required.as_f64(),
        });
    }
    let mut min_ex = S::infinity();
    for i in tamed.active() {
        min_ex = min_ex.min(tamed.at(i) - g1.at(i) - e.at(i));
    }
    let max_slope = chi.slopes().last().copied().unwrap_or(S::one());
    Ok(Taming {
        report: TamingReport {
            min_excess_over_e: min_ex.as_f64(),
            margin_rho: margin_rho.worst_margin,
            margin_tamed: margin_tamed.worst_margin,
            max_slope: max_slope.as_f64(),
            knots: chi.knots.len(),
            note: "growth toward the domain boundary is measured against E = 1/dist(x, exterior)"
                .into(),
        },
        rho: tamed,
        chi,
        e,
    })
}
