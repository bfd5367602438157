//! Circle-average stencils: weights over the `3^{2n}` lattice neighbourhood
//! obtained by multilinear interpolation of circle samples.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{king_offsets, Grid};
use crate::jet::{standard_complex_structure, SpecNode, SubequationSpec};
use crate::linalg::Mat;
use crate::pointwise::Pointwise;
use crate::scalar::Scalar;

/// One averaging rule: `Σ w·u(x + off)`.
#[derive(Clone, Debug)]
pub(crate) struct Rule<S> {
    pub offs: Vec<isize>,
    pub weights: Vec<S>,
    /// Average of `|y − x|²` over the rule (interpolated), in physical units.
    pub excess: S,
}

/// All rules (directions or frames) at one point.
#[derive(Clone, Debug)]
pub(crate) struct PointRules<S> {
    pub rules: Vec<Rule<S>>,
}

impl<S: Scalar> PointRules<S> {
    pub fn min_excess(&self) -> S {
        self.rules
            .iter()
            .map(|r| r.excess)
            .fold(S::infinity(), S::min)
    }
}

/// What the scheme needs from a spec: the complex structure and Hessian
/// congruence at each point, the circle-product dimension, and value caps.
pub(crate) struct Compiled<S> {
    pub structure: Pointwise<Mat<S>>,
    pub congruence: Option<Pointwise<Mat<S>>>,
    pub frame_dim: usize,
    pub cap: Option<Vec<S>>,
}

fn compose_congruence<S: Scalar>(
    outer: Option<Pointwise<Mat<S>>>,
    h: Pointwise<Mat<S>>,
    len: usize,
) -> Pointwise<Mat<S>> {
    // A ↦ h (H A Hᵀ) hᵀ, so the composed congruence is h·H
    match (outer, h) {
        (None, h) => h,
        (Some(Pointwise::Constant(a)), Pointwise::Constant(b)) => Pointwise::Constant(b.matmul(&a)),
        (Some(a), b) => Pointwise::PerPoint(Arc::new(
            (0..len).map(|i| b.at(i).matmul(a.at(i))).collect(),
        )),
    }
}

/// Walks the spec tree down to its primitive.
pub(crate) fn compile<S: Scalar>(spec: &SubequationSpec<S>, grid: &Grid<S>) -> Result<Compiled<S>> {
    let len = grid.len();
    let mut congruence: Option<Pointwise<Mat<S>>> = None;
    let mut shift: Option<Vec<S>> = None;
    let mut cap: Option<Vec<S>> = None;
    let mut node = &spec.node;
    loop {
        match node {
            SpecNode::PshStandard { n } => {
                return Ok(Compiled {
                    structure: Pointwise::Constant(standard_complex_structure(*n)),
                    congruence,
                    frame_dim: 1,
                    cap,
                })
            }
            SpecNode::PshAlmostComplex(j) => {
                if let Some(l) = j.field().len() {
                    if l != len {
                        return Err(Error::Dimension(format!(
                            "complex structure has {l} points, grid has {len}"
                        )));
                    }
                }
                return Ok(Compiled {
                    structure: j.field().clone(),
                    congruence,
                    frame_dim: 1,
                    cap,
                });
            }
            SpecNode::SigmaM { n, m } => {
                return Ok(Compiled {
                    structure: Pointwise::Constant(standard_complex_structure(*n)),
                    congruence,
                    frame_dim: n - m + 1,
                    cap,
                })
            }
            SpecNode::Dual(_) => {
                return Err(Error::Config(
                    "the envelope scheme does not support dual subequations".into(),
                ))
            }
            SpecNode::ObstacleRestrict { inner, obstacle } => {
                if let Some(l) = obstacle.len() {
                    if l != len {
                        return Err(Error::Dimension(format!(
                            "obstacle has {l} points, grid has {len}"
                        )));
                    }
                }
                // constraint r + shift ≤ g, i.e. r ≤ g − shift
                let c = cap.get_or_insert_with(|| vec![S::infinity(); len]);
                for (i, ci) in c.iter_mut().enumerate() {
                    let s = shift.as_ref().map_or(S::zero(), |s| s[i]);
                    *ci = ci.min(*obstacle.at(i) - s);
                }
                node = inner;
            }
            SpecNode::Pullback { inner, equiv } => {
                if let Some(l) = equiv.maps().len() {
                    if l != len {
                        return Err(Error::Dimension(format!(
                            "jet-equivalence has {l} points, grid has {len}"
                        )));
                    }
                }
                let mut hs = Vec::new();
                for (i, m) in equiv.maps().iter().enumerate() {
                    if !m.is_hessian_congruence() {
                        return Err(Error::Config(format!(
                            "pullback with first-order or constant Hessian terms (L or A0 nonzero at point {i}) is not supported by the envelope scheme"
                        )));
                    }
                    hs.push(m.h.clone());
                }
                let h = if equiv.maps().is_constant() {
                    Pointwise::Constant(hs.pop().expect("constant map"))
                } else {
                    Pointwise::PerPoint(Arc::new(hs))
                };
                congruence = Some(compose_congruence(congruence, h, len));
                let s = shift.get_or_insert_with(|| vec![S::zero(); len]);
                for (i, si) in s.iter_mut().enumerate() {
                    *si = *si + equiv.at(i).r0;
                }
                node = inner;
            }
        }
    }
}

/// Columns `[e, Je, w, Jw]` of a basis carrying `J` to the standard structure.
fn adapted_basis<S: Scalar>(j: &Mat<S>) -> Mat<S> {
    let d = j.rows();
    let mut cols: Vec<Vec<S>> = Vec::new();
    for k in 0..d {
        if cols.len() == d {
            break;
        }
        let mut w = vec![S::zero(); d];
        w[k] = S::one();
        // remove the component along the J-invariant span built so far
        let mut basis: Vec<Vec<S>> = Vec::new();
        for c in &cols {
            let mut c = c.clone();
            for b in &basis {
                let dot: S = c.iter().zip(b).map(|(&x, &y)| x * y).sum();
                c.iter_mut().zip(b).for_each(|(x, &y)| *x = *x - dot * y);
            }
            let nrm = c.iter().map(|&x| x * x).sum::<S>().sqrt();
            basis.push(c.iter().map(|&x| x / nrm).collect());
        }
        for b in &basis {
            let dot: S = w.iter().zip(b).map(|(&x, &y)| x * y).sum();
            w.iter_mut().zip(b).for_each(|(x, &y)| *x = *x - dot * y);
        }
        let nrm = w.iter().map(|&x| x * x).sum::<S>().sqrt();
        if nrm < S::lit(1e-6) {
            continue;
        }
        let w: Vec<S> = w.iter().map(|&x| x / nrm).collect();
        let jw = j.matvec(&w);
        cols.push(w);
        cols.push(jw);
    }
    let mut p = Mat::zeros(d, d);
    for (c, col) in cols.iter().enumerate() {
        for r in 0..d {
            p[(r, c)] = col[r];
        }
    }
    p
}

/// Unit complex directions (standard structure) for the rules at `n`.
fn base_directions(n: usize, count: usize, samples: usize) -> Vec<Vec<f64>> {
    if n == 1 {
        return (0..count)
            .map(|d| {
                let phi = 2.0 * PI * d as f64 / (count * samples) as f64;
                vec![phi.cos(), phi.sin()]
            })
            .collect();
    }
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
            let alpha = z.clamp(-1.0, 1.0).acos();
            let beta = golden * i as f64;
            let (c, s) = ((alpha / 2.0).cos(), (alpha / 2.0).sin());
            vec![c, 0.0, s * beta.cos(), s * beta.sin()]
        })
        .collect()
}

/// `(−b̄, ā)` for `v = (a, b)` in `(x₁, y₁, x₂, y₂)` coordinates.
fn complex_orthogonal(v: &[f64]) -> Vec<f64> {
    vec![-v[2], v[3], v[0], -v[1]]
}

fn standard_j(v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for k in 0..v.len() / 2 {
        out[2 * k] = -v[2 * k + 1];
        out[2 * k + 1] = v[2 * k];
    }
    out
}

pub(crate) struct RuleBuilder<S> {
    dim: usize,
    lin: Vec<isize>,
    h: S,
}

impl<S: Scalar> RuleBuilder<S> {
    pub fn new(grid: &Grid<S>) -> Self {
        let dim = grid.dim();
        let lin = king_offsets(dim)
            .iter()
            .map(|o| grid.linear_offset(o))
            .collect();
        RuleBuilder {
            dim,
            lin,
            h: grid.spacing(),
        }
    }

    /// Rule averaging multilinear interpolants at the displacements `pts`
    /// (units of `h`, sup norm ≤ 1).
    fn rule(&self, pts: &[Vec<f64>]) -> Rule<S> {
        let dim = self.dim;
        let mut acc = vec![0.0f64; self.lin.len()];
        let wpt = 1.0 / pts.len() as f64;
        for p in pts {
            for corner in 0..(1usize << dim) {
                let mut w = wpt;
                let mut slot = 0usize;
                for (i, &t) in p.iter().enumerate() {
                    let (lo, frac) = if t >= 0.0 {
                        (0isize, t)
                    } else {
                        (-1isize, 1.0 + t)
                    };
                    let up = (corner >> i) & 1 == 1;
                    let o = if up { lo + 1 } else { lo };
                    w *= if up { frac } else { 1.0 - frac };
                    slot = slot * 3 + (o + 1) as usize;
                }
                acc[slot] += w;
            }
        }
        let offs3 = king_offsets(dim);
        let mut offs = Vec::new();
        let mut weights = Vec::new();
        let mut excess = 0.0;
        for (slot, &w) in acc.iter().enumerate() {
            if w > 0.0 {
                offs.push(self.lin[slot]);
                weights.push(S::lit(w));
                let r2: isize = offs3[slot].iter().map(|&o| o * o).sum();
                excess += w * r2 as f64;
            }
        }
        let h = self.h.as_f64();
        Rule {
            offs,
            weights,
            excess: S::lit(excess * h * h),
        }
    }

    /// Rules at one point: for each direction, circle (or product of circles)
    /// samples mapped by `congᵀ·P` and shrunk to sup norm ≤ 1 if needed.
    pub fn point_rules(
        &self,
        j: &Mat<S>,
        cong: Option<&Mat<S>>,
        frame_dim: usize,
        directions: usize,
        samples: usize,
    ) -> PointRules<S> {
        let n = self.dim / 2;
        let p = adapted_basis(j).map(|v| v.as_f64());
        let map = match cong {
            Some(c) => c.transpose().map(|v| v.as_f64()).matmul(&p),
            None => p,
        };
        let thetas: Vec<(f64, f64)> = (0..samples)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / samples as f64;
                (t.cos(), t.sin())
            })
            .collect();
        let rules = base_directions(n, directions, samples)
            .into_iter()
            .map(|v| {
                let mut disp: Vec<Vec<f64>> = Vec::new();
                if frame_dim == 1 {
                    let jv = standard_j(&v);
                    for &(c, s) in &thetas {
                        disp.push(v.iter().zip(&jv).map(|(&a, &b)| c * a + s * b).collect());
                    }
                } else {
                    let v2 = complex_orthogonal(&v);
                    let (jv, jv2) = (standard_j(&v), standard_j(&v2));
                    let r = 1.0 / (frame_dim as f64).sqrt();
                    for &(c1, s1) in &thetas {
                        for &(c2, s2) in &thetas {
                            disp.push(
                                (0..self.dim)
                                    .map(|i| {
                                        r * (c1 * v[i] + s1 * jv[i] + c2 * v2[i] + s2 * jv2[i])
                                    })
                                    .collect(),
                            );
                        }
                    }
                }
                let mut disp: Vec<Vec<f64>> = disp.iter().map(|d| map.matvec(d)).collect();
                let sup = disp
                    .iter()
                    .flat_map(|d| d.iter().map(|x| x.abs()))
                    .fold(0.0f64, f64::max);
                if sup > 1.0 {
                    for d in disp.iter_mut() {
                        d.iter_mut().for_each(|x| *x /= sup);
                    }
                }
                self.rule(&disp)
            })
            .collect();
        PointRules { rules }
    }
}

/// Per-point rules, shared when the structure and congruence are constant.
pub(crate) enum RuleTable<S> {
    Shared(Arc<PointRules<S>>),
    PerPoint(Vec<Option<Arc<PointRules<S>>>>),
}

impl<S: Scalar> RuleTable<S> {
    #[inline]
    pub fn at(&self, idx: usize) -> &PointRules<S> {
        match self {
            RuleTable::Shared(r) => r,
            RuleTable::PerPoint(v) => v[idx]
                .as_ref()
                .expect("rules built for every interior point"),
        }
    }
}
