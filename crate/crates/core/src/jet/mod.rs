//! Pointwise 2-jet algebra: complex Hessians, Gårding chains, cone membership
//! margins, duality and affine jet-equivalences.

mod audit;
mod spec;
mod structure;

pub use audit::{
    audit_spec, inclusion_check, monotonicity_check, random_jet, sigma_nesting_check,
    InclusionReport, MonotonicityReport, SpecAuditReport,
};
pub use spec::{dual_spec, membership, SpecNode, SubequationSpec};
pub use structure::{
    standard_complex_structure, transform_jet, AlmostComplexStructure, EquivalenceRegularity,
    JetEquivalence, JetMap,
};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::scalar::Scalar;

/// A full 2-jet `(r, p, A)` at a point of `ℝ²ⁿ`, `n ∈ {1, 2}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet2<S> {
    r: S,
    p: Vec<S>,
    a: Mat<S>,
}

impl<S: Scalar> Jet2<S> {
    /// Builds a jet; `a` is symmetrized.
    pub fn new(r: S, p: Vec<S>, a: Mat<S>) -> Result<Self> {
        let d = p.len();
        if d != 2 && d != 4 {
            return Err(Error::Dimension(format!(
                "gradient length {d}; expected 2 or 4 (complex dimension 1 or 2)"
            )));
        }
        if a.rows() != d || a.cols() != d {
            return Err(Error::Dimension(format!(
                "hessian is {}x{}, gradient has length {d}",
                a.rows(),
                a.cols()
            )));
        }
        Ok(Jet2 {
            r,
            p,
            a: a.symmetrized(),
        })
    }

    /// Jet with zero value and gradient.
    pub fn from_hessian(a: Mat<S>) -> Result<Self> {
        let d = a.rows();
        Self::new(S::zero(), vec![S::zero(); d], a)
    }

    #[inline]
    pub fn r(&self) -> S {
        self.r
    }

    #[inline]
    pub fn p(&self) -> &[S] {
        &self.p
    }

    #[inline]
    pub fn a(&self) -> &Mat<S> {
        &self.a
    }

    /// Real dimension `2n`.
    #[inline]
    pub fn dim(&self) -> usize {
        self.p.len()
    }

    /// Complex dimension `n`.
    #[inline]
    pub fn n(&self) -> usize {
        self.p.len() / 2
    }

    pub fn neg(&self) -> Self {
        Jet2 {
            r: -self.r,
            p: self.p.iter().map(|&v| -v).collect(),
            a: self.a.neg(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if other.dim() != self.dim() {
            return Err(Error::Dimension(format!(
                "adding jets of dimension {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(Jet2 {
            r: self.r + other.r,
            p: self.p.iter().zip(&other.p).map(|(&a, &b)| a + b).collect(),
            a: self.a.add(&other.a),
        })
    }

    pub fn scale(&self, s: S) -> Self {
        Jet2 {
            r: self.r * s,
            p: self.p.iter().map(|&v| v * s).collect(),
            a: self.a.scale(s),
        }
    }

    pub fn with_r(mut self, r: S) -> Self {
        self.r = r;
        self
    }

    pub fn with_hessian(&self, a: Mat<S>) -> Result<Self> {
        Self::new(self.r, self.p.clone(), a)
    }

    /// Raw parts, for transforms that rebuild the jet.
    pub fn into_parts(self) -> (S, Vec<S>, Mat<S>) {
        (self.r, self.p, self.a)
    }
}

fn check_pair(a: &Mat<impl Scalar>, j: &Mat<impl Scalar>) -> Result<()> {
    if !a.is_square() || !j.is_square() {
        return Err(Error::Dimension(
            "hermitian part needs square matrices".into(),
        ));
    }
    if a.rows() != j.rows() {
        return Err(Error::Dimension(format!(
            "matrix is {0}x{0} but complex structure is {1}x{1}",
            a.rows(),
            j.rows()
        )));
    }
    if a.rows() % 2 != 0 {
        return Err(Error::Dimension(format!("odd real dimension {}", a.rows())));
    }
    Ok(())
}

/// `H = ½(A + Jᵀ A J)`: the part of `A` invariant under the complex structure.
pub fn hermitian_part<S: Scalar>(a: &Mat<S>, j: &Mat<S>) -> Result<Mat<S>> {
    check_pair(a, j)?;
    let jaj = j.transpose().matmul(a).matmul(j);
    Ok(a.add(&jaj).scale(S::lit(0.5)).symmetrized())
}

/// Eigenvalues of a `J`-invariant symmetric `H` seen as a Hermitian form on
/// `(ℝ²ⁿ, J)`, ascending. The real spectrum of `H` lists each of them twice;
/// consecutive pairs of the sorted real spectrum are averaged.
pub fn complex_eigenvalues<S: Scalar>(h: &Mat<S>, j: &Mat<S>) -> Result<Vec<S>> {
    check_pair(h, j)?;
    let jhj = j.transpose().matmul(h).matmul(j);
    let tol = S::epsilon().sqrt() * (S::one() + h.max_abs());
    let dev = jhj.max_abs_diff(h);
    if dev > tol {
        return Err(Error::Inconsistent(format!(
            "matrix is not J-invariant: |JᵀHJ - H| = {dev:e} exceeds {tol:e}"
        )));
    }
    let real = h.sym_eigenvalues();
    let half = S::lit(0.5);
    Ok(real.chunks(2).map(|c| (c[0] + c[1]) * half).collect())
}

/// The ℓ-th elementary symmetric polynomial of `lams`, `1 ≤ ℓ ≤ len`.
pub fn sigma_l<S: Scalar>(lams: &[S], l: usize) -> Result<S> {
    if l == 0 || l > lams.len() {
        return Err(Error::Argument(format!(
            "sigma index {l} outside 1..={}",
            lams.len()
        )));
    }
    Ok(elementary_symmetric(lams)[l])
}

/// All elementary symmetric polynomials `e_0 .. e_len` by the usual recurrence.
fn elementary_symmetric<S: Scalar>(lams: &[S]) -> Vec<S> {
    let mut e = vec![S::zero(); lams.len() + 1];
    e[0] = S::one();
    for (i, &x) in lams.iter().enumerate() {
        for k in (1..=i + 1).rev() {
            e[k] = e[k] + x * e[k - 1];
        }
    }
    e
}

/// True iff `σ_ℓ(lams) ≥ 0` for `ℓ = 1..=m`.
pub fn in_garding_cone<S: Scalar>(lams: &[S], m: usize) -> bool {
    let e = elementary_symmetric(lams);
    e[1..=m.min(lams.len())].iter().all(|&v| v >= S::zero())
}

/// Signed margin of `lams` with respect to the closed Gårding cone `Γ̄_m`:
/// the largest `t` with `lams − t·(1,…,1) ∈ Γ̄_m`.
///
/// Equals the mean for `m = 1` and the minimum for `m = len`; in between it is
/// bracketed by those two and found by bisection. Monotone under adding
/// nonnegative vectors and 1-Lipschitz in the sup norm.
pub fn garding_margin<S: Scalar>(lams: &[S], m: usize) -> S {
    let n = lams.len();
    assert!(m >= 1 && m <= n, "garding margin index");
    let lo = lams.iter().copied().fold(S::infinity(), S::min);
    let mean = lams.iter().copied().sum::<S>() / S::from_usize_lossy(n);
    if m == n {
        return lo;
    }
    if m == 1 {
        return mean;
    }
    let shifted = |t: S| lams.iter().map(|&x| x - t).collect::<Vec<_>>();
    let (mut a, mut b) = (lo, mean);
    for _ in 0..200 {
        let mid = (a + b) * S::lit(0.5);
        if mid <= a || mid >= b {
            break;
        }
        if in_garding_cone(&shifted(mid), m) {
            a = mid;
        } else {
            b = mid;
        }
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    fn j1() -> Mat<f64> {
        standard_complex_structure(1)
    }

    #[test]
    fn hermitian_part_examples() {
        let h = hermitian_part(&Mat::identity(2), &j1()).unwrap();
        assert_eq!(h, Mat::identity(2));
        let h = hermitian_part(&Mat::from_diag(&[1.0, -1.0]), &j1()).unwrap();
        assert_eq!(h, Mat::zeros(2, 2));
        let a = Mat::from_diag(&[1.0, 1.0, -1.0, -1.0]);
        let h = hermitian_part(&a, &standard_complex_structure(2)).unwrap();
        assert_eq!(h, a);
    }

    #[test]
    fn hermitian_part_dimension_errors() {
        let j = j1();
        assert!(matches!(
            hermitian_part(&Mat::<f64>::zeros(2, 3), &j),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            hermitian_part(&Mat::<f64>::identity(4), &j),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn complex_eigenvalue_examples() {
        let j2 = standard_complex_structure(2);
        let ev = complex_eigenvalues(&Mat::<f64>::identity(4), &j2).unwrap();
        assert_eq!(ev, vec![1.0, 1.0]);
        let ev = complex_eigenvalues(&Mat::from_diag(&[1.0, 1.0, -1.0, -1.0]), &j2).unwrap();
        assert_eq!(ev, vec![-1.0, 1.0]);
        // not invariant
        let err = complex_eigenvalues(&Mat::from_diag(&[1.0, -1.0, 0.0, 0.0]), &j2);
        assert!(matches!(err, Err(Error::Inconsistent(_))));
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(sigma_l(&[2.0, -1.0], 1).unwrap(), 1.0);
        assert_eq!(sigma_l(&[2.0, -1.0], 2).unwrap(), -2.0);
        assert_eq!(sigma_l(&[1.0, 1.0, 1.0], 2).unwrap(), 3.0);
        assert!(matches!(
            sigma_l(&[1.0f64, 2.0], 3),
            Err(Error::Argument(_))
        ));
        assert!(matches!(sigma_l(&[1.0f64], 0), Err(Error::Argument(_))));
    }

    #[test]
    fn garding_margin_closed_forms() {
        assert_eq!(garding_margin(&[2.0, -1.0], 1), 0.5);
        assert_eq!(garding_margin(&[2.0, -1.0], 2), -1.0);
        // n = 3, m = 2: margin t solves σ₂(λ − t) = 0 at the boundary of Γ₂
        let lams = [3.0, 1.0, -0.5];
        let t = garding_margin(&lams, 2);
        let shifted: Vec<f64> = lams.iter().map(|x| x - t).collect();
        assert!(sigma_l(&shifted, 2).unwrap().abs() < 1e-9);
        assert!(sigma_l(&shifted, 1).unwrap() >= 0.0);
    }

    #[test]
    fn jet_construction_symmetrizes_and_checks_dims() {
        let a = Mat::from_rows(&[&[1.0, 2.0], &[0.0, 1.0]]);
        let j = Jet2::new(0.0, vec![0.0, 0.0], a).unwrap();
        assert_eq!(j.a()[(0, 1)], 1.0);
        assert_eq!(j.a()[(1, 0)], 1.0);
        assert!(Jet2::new(0.0, vec![0.0; 3], Mat::identity(3)).is_err());
        assert!(Jet2::new(0.0, vec![0.0; 2], Mat::identity(4)).is_err());
    }
}
