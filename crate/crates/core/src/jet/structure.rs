use std::sync::Arc;

use serde::Serialize;

use super::Jet2;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::Mat;
use crate::pointwise::Pointwise;
use crate::scalar::Scalar;

/// The standard complex structure on `ℝ²ⁿ` with coordinates ordered
/// `(x₁, y₁, …, xₙ, yₙ)`: `J ∂x_k = ∂y_k`, `J ∂y_k = −∂x_k`.
pub fn standard_complex_structure<S: Scalar>(n: usize) -> Mat<S> {
    let mut j = Mat::zeros(2 * n, 2 * n);
    for k in 0..n {
        j[(2 * k + 1, 2 * k)] = S::one();
        j[(2 * k, 2 * k + 1)] = -S::one();
    }
    j
}

/// A field of complex-structure matrices over a lattice.
#[derive(Clone, Debug)]
pub struct AlmostComplexStructure<S> {
    dim: usize,
    j: Pointwise<Mat<S>>,
}

impl<S: Scalar> AlmostComplexStructure<S> {
    /// Validates `J² = −I` (within `1e-10`, or `10³ε` for coarser scalars)
    /// at every point.
    pub fn new(j: Pointwise<Mat<S>>) -> Result<Self> {
        let first = j
            .iter()
            .next()
            .ok_or_else(|| Error::Dimension("empty complex structure".into()))?;
        let dim = first.rows();
        if dim != 2 && dim != 4 {
            return Err(Error::Dimension(format!(
                "complex structure of real dimension {dim}; expected 2 or 4"
            )));
        }
        let tol = S::lit(1e-10).max(S::lit(1e3) * S::epsilon());
        let minus_id = Mat::<S>::identity(dim).neg();
        for (idx, m) in j.iter().enumerate() {
            if m.rows() != dim || m.cols() != dim {
                return Err(Error::Dimension(format!(
                    "complex structure at point {idx} is not {dim}x{dim}"
                )));
            }
            let dev = m.matmul(m).max_abs_diff(&minus_id);
            if !(dev <= tol) {
                return Err(Error::Inconsistent(format!(
                    "J² ≠ -I at point {idx}: deviation {dev:e}"
                )));
            }
        }
        Ok(AlmostComplexStructure { dim, j })
    }

    pub fn standard(n: usize) -> Self {
        AlmostComplexStructure {
            dim: 2 * n,
            j: Pointwise::Constant(standard_complex_structure(n)),
        }
    }

    #[inline]
    pub fn at(&self, idx: usize) -> &Mat<S> {
        self.j.at(idx)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_constant(&self) -> bool {
        self.j.is_constant()
    }

    pub fn field(&self) -> &Pointwise<Mat<S>> {
        &self.j
    }
}

/// One fibre of an affine jet-equivalence:
/// `r' = r + r₀`, `p' = k p + p₀`, `A' = h A hᵀ + L(p) + A₀`,
/// with `L(p) = Σᵢ pᵢ Lᵢ`.
#[derive(Clone, Debug, PartialEq)]
pub struct JetMap<S> {
    pub r0: S,
    pub p0: Vec<S>,
    pub a0: Mat<S>,
    pub k: Mat<S>,
    pub h: Mat<S>,
    pub l: Vec<Mat<S>>,
}

impl<S: Scalar> JetMap<S> {
    pub fn identity(dim: usize) -> Self {
        JetMap {
            r0: S::zero(),
            p0: vec![S::zero(); dim],
            a0: Mat::zeros(dim, dim),
            k: Mat::identity(dim),
            h: Mat::identity(dim),
            l: vec![Mat::zeros(dim, dim); dim],
        }
    }

    /// The obstacle shift `(r, J) ↦ (r − g, J)`.
    pub fn obstacle_shift(dim: usize, g: S) -> Self {
        JetMap {
            r0: -g,
            ..Self::identity(dim)
        }
    }

    pub fn dim(&self) -> usize {
        self.p0.len()
    }

    fn validate(&self) -> Result<()> {
        let d = self.dim();
        let sq = |m: &Mat<S>, name: &str| {
            if m.rows() != d || m.cols() != d {
                Err(Error::Dimension(format!(
                    "{name} is {}x{}, expected {d}x{d}",
                    m.rows(),
                    m.cols()
                )))
            } else {
                Ok(())
            }
        };
        sq(&self.a0, "A0")?;
        sq(&self.k, "k")?;
        sq(&self.h, "h")?;
        if self.l.len() != d {
            return Err(Error::Dimension(format!(
                "L has {} components, expected {d}",
                self.l.len()
            )));
        }
        for li in &self.l {
            sq(li, "L component")?;
        }
        Ok(())
    }

    fn l_of(&self, p: &[S]) -> Mat<S> {
        let d = self.dim();
        let mut out = Mat::zeros(d, d);
        for (pi, li) in p.iter().zip(&self.l) {
            if *pi != S::zero() {
                out = out.add(&li.scale(*pi));
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.r0.is_finite()
            && self.p0.iter().all(|v| v.is_finite())
            && self.a0.is_finite()
            && self.k.is_finite()
            && self.h.is_finite()
            && self.l.iter().all(|m| m.is_finite())
    }

    /// `true` when the map leaves the gradient out of the Hessian and adds no
    /// constant Hessian, i.e. `A' = h A hᵀ`.
    pub fn is_hessian_congruence(&self) -> bool {
        self.a0.max_abs() == S::zero() && self.l.iter().all(|m| m.max_abs() == S::zero())
    }

    pub fn apply(&self, jet: &Jet2<S>) -> Result<Jet2<S>> {
        self.validate()?;
        if jet.dim() != self.dim() {
            return Err(Error::Dimension(format!(
                "jet of dimension {} against equivalence of dimension {}",
                jet.dim(),
                self.dim()
            )));
        }
        if self.k.inverse().is_none() {
            return Err(Error::Invertibility("k(x) is singular".into()));
        }
        if self.h.inverse().is_none() {
            return Err(Error::Invertibility("h(x) is singular".into()));
        }
        let r = jet.r() + self.r0;
        let p: Vec<S> = self
            .k
            .matvec(jet.p())
            .into_iter()
            .zip(&self.p0)
            .map(|(a, &b)| a + b)
            .collect();
        let a = self
            .h
            .congruence(jet.a())
            .add(&self.l_of(jet.p()))
            .add(&self.a0);
        Jet2::new(r, p, a)
    }

    /// The explicit inverse map.
    pub fn inverse(&self) -> Result<Self> {
        self.validate()?;
        let d = self.dim();
        let kinv = self
            .k
            .inverse()
            .ok_or_else(|| Error::Invertibility("k(x) is singular".into()))?;
        let hinv = self
            .h
            .inverse()
            .ok_or_else(|| Error::Invertibility("h(x) is singular".into()))?;
        let p0 = kinv
            .matvec(&self.p0)
            .into_iter()
            .map(|v| -v)
            .collect::<Vec<_>>();
        // p = k⁻¹p' + p0_inv, so L(p) = L(k⁻¹p') − L(k⁻¹p₀)
        let kinv_p0 = kinv.matvec(&self.p0);
        let a0 = hinv.congruence(&self.l_of(&kinv_p0).sub(&self.a0));
        let l = (0..d)
            .map(|i| {
                let col: Vec<S> = (0..d).map(|r| kinv[(r, i)]).collect();
                hinv.congruence(&self.l_of(&col)).neg()
            })
            .collect();
        Ok(JetMap {
            r0: -self.r0,
            p0,
            a0,
            k: kinv,
            h: hinv,
            l,
        })
    }
}

/// An affine jet-equivalence over a lattice.
#[derive(Clone, Debug)]
pub struct JetEquivalence<S> {
    dim: usize,
    maps: Pointwise<JetMap<S>>,
}

/// Conditioning and discrete Lipschitz data of a jet-equivalence.
#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceRegularity {
    pub max_condition_k: f64,
    pub max_condition_h: f64,
    pub lipschitz_k: f64,
    pub lipschitz_h: f64,
    pub lipschitz_l: f64,
    pub data_finite: bool,
}

impl<S: Scalar> JetEquivalence<S> {
    /// Validates dimensions, finiteness and invertibility of `k`, `h` everywhere.
    pub fn new(maps: Pointwise<JetMap<S>>) -> Result<Self> {
        let first = maps
            .iter()
            .next()
            .ok_or_else(|| Error::Dimension("empty jet-equivalence".into()))?;
        let dim = first.dim();
        for (idx, m) in maps.iter().enumerate() {
            if m.dim() != dim {
                return Err(Error::Dimension(format!(
                    "jet map at point {idx} has dimension {}",
                    m.dim()
                )));
            }
            m.validate()?;
            if !m.is_finite() {
                return Err(Error::Inconsistent(format!(
                    "non-finite jet-equivalence data at point {idx}"
                )));
            }
            if m.k.inverse().is_none() || m.h.inverse().is_none() {
                return Err(Error::Invertibility(format!(
                    "k or h singular at point {idx}"
                )));
            }
        }
        Ok(JetEquivalence { dim, maps })
    }

    pub fn constant(map: JetMap<S>) -> Result<Self> {
        Self::new(Pointwise::Constant(map))
    }

    pub fn identity(dim: usize) -> Self {
        JetEquivalence {
            dim,
            maps: Pointwise::Constant(JetMap::identity(dim)),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn at(&self, idx: usize) -> &JetMap<S> {
        self.maps.at(idx)
    }

    pub fn maps(&self) -> &Pointwise<JetMap<S>> {
        &self.maps
    }

    pub fn is_hessian_congruence(&self) -> bool {
        self.maps.iter().all(|m| m.is_hessian_congruence())
    }

    pub fn inverse(&self) -> Result<Self> {
        let maps = match &self.maps {
            Pointwise::Constant(m) => Pointwise::Constant(m.inverse()?),
            Pointwise::PerPoint(ms) => Pointwise::PerPoint(Arc::new(
                ms.iter().map(|m| m.inverse()).collect::<Result<Vec<_>>>()?,
            )),
        };
        Ok(JetEquivalence {
            dim: self.dim,
            maps,
        })
    }

    /// Condition numbers of `k`, `h` and discrete Lipschitz constants of
    /// `k`, `h`, `L` along lattice axes.
    pub fn regularity(&self, grid: &Grid<S>) -> EquivalenceRegularity {
        let mut rep = EquivalenceRegularity {
            max_condition_k: 0.0,
            max_condition_h: 0.0,
            lipschitz_k: 0.0,
            lipschitz_h: 0.0,
            lipschitz_l: 0.0,
            data_finite: true,
        };
        for m in self.maps.iter() {
            rep.max_condition_k = rep.max_condition_k.max(m.k.condition_number().as_f64());
            rep.max_condition_h = rep.max_condition_h.max(m.h.condition_number().as_f64());
            rep.data_finite &= m.is_finite();
        }
        if let Pointwise::PerPoint(ms) = &self.maps {
            let h = grid.spacing().as_f64();
            for idx in 0..grid.len().min(ms.len()) {
                for axis in 0..grid.dim() {
                    if let Some(nb) = grid.axis_neighbor(idx, axis, 1) {
                        let (a, b) = (&ms[idx], &ms[nb]);
                        rep.lipschitz_k = rep.lipschitz_k.max(a.k.max_abs_diff(&b.k).as_f64() / h);
                        rep.lipschitz_h = rep.lipschitz_h.max(a.h.max_abs_diff(&b.h).as_f64() / h);
                        let dl =
                            a.l.iter()
                                .zip(&b.l)
                                .fold(0.0f64, |acc, (x, y)| acc.max(x.max_abs_diff(y).as_f64()));
                        rep.lipschitz_l = rep.lipschitz_l.max(dl / h);
                    }
                }
            }
        }
        rep
    }
}

/// Applies the jet-equivalence at lattice point `x`.
pub fn transform_jet<S: Scalar>(
    equiv: &JetEquivalence<S>,
    x: usize,
    jet: &Jet2<S>,
) -> Result<Jet2<S>> {
    equiv.at(x).apply(jet)
}
