use std::fmt;
use std::sync::Arc;

use super::structure::{standard_complex_structure, AlmostComplexStructure, JetEquivalence};
use super::{complex_eigenvalues, garding_margin, hermitian_part, Jet2};
use crate::error::{Error, Result};
use crate::pointwise::Pointwise;
use crate::scalar::Scalar;

/// Constructor tree of a subequation.
#[derive(Clone, Debug)]
pub enum SpecNode<S> {
    /// Plurisubharmonic jets for the standard complex structure on `ℂⁿ`.
    PshStandard {
        n: usize,
    },
    /// Plurisubharmonic jets for a pointwise complex structure.
    PshAlmostComplex(Arc<AlmostComplexStructure<S>>),
    /// `σ_ℓ(Hess_ℂ) ≥ 0` for `ℓ = 1..=m` (standard structure, flat Kähler form).
    SigmaM {
        n: usize,
        m: usize,
    },
    Dual(Box<SpecNode<S>>),
    /// `r ≤ g(x)` together with membership of the reduced jet.
    ObstacleRestrict {
        inner: Box<SpecNode<S>>,
        obstacle: Pointwise<S>,
    },
    /// Membership of the transformed jet.
    Pullback {
        inner: Box<SpecNode<S>>,
        equiv: Arc<JetEquivalence<S>>,
    },
}

/// A subequation together with the unit its margins are expressed in.
///
/// Margins: PSH primitives use the smallest eigenvalue of the Hermitian part
/// of `A`; Σ_m uses the Gårding shift margin of the complex eigenvalues (see
/// [`garding_margin`]), so both agree on `Σ_n = PSH`. Dividing by
/// `margin_unit` fixes the fibre metric used for c-strictness.
#[derive(Clone, Debug)]
pub struct SubequationSpec<S> {
    pub node: SpecNode<S>,
    pub margin_unit: S,
}

impl<S: Scalar> SubequationSpec<S> {
    fn wrap(node: SpecNode<S>) -> Self {
        SubequationSpec {
            node,
            margin_unit: S::one(),
        }
    }

    pub fn psh(n: usize) -> Result<Self> {
        check_n(n)?;
        Ok(Self::wrap(SpecNode::PshStandard { n }))
    }

    pub fn psh_almost_complex(j: AlmostComplexStructure<S>) -> Self {
        Self::wrap(SpecNode::PshAlmostComplex(Arc::new(j)))
    }

    pub fn sigma(n: usize, m: usize) -> Result<Self> {
        check_n(n)?;
        if m == 0 || m > n {
            return Err(Error::Argument(format!(
                "sigma:{m} needs 1 <= m <= n = {n}"
            )));
        }
        Ok(Self::wrap(SpecNode::SigmaM { n, m }))
    }

    pub fn dual(&self) -> Self {
        SubequationSpec {
            node: SpecNode::Dual(Box::new(self.node.clone())),
            margin_unit: self.margin_unit,
        }
    }

    pub fn obstacle(&self, obstacle: Pointwise<S>) -> Self {
        SubequationSpec {
            node: SpecNode::ObstacleRestrict {
                inner: Box::new(self.node.clone()),
                obstacle,
            },
            margin_unit: self.margin_unit,
        }
    }

    pub fn pullback(&self, equiv: JetEquivalence<S>) -> Result<Self> {
        if equiv.dim() != self.dim() {
            return Err(Error::Dimension(format!(
                "pullback of a spec of dimension {} by an equivalence of dimension {}",
                self.dim(),
                equiv.dim()
            )));
        }
        Ok(SubequationSpec {
            node: SpecNode::Pullback {
                inner: Box::new(self.node.clone()),
                equiv: Arc::new(equiv),
            },
            margin_unit: self.margin_unit,
        })
    }

    pub fn with_margin_unit(mut self, unit: S) -> Self {
        self.margin_unit = unit;
        self
    }

    /// Real jet dimension `2n`.
    pub fn dim(&self) -> usize {
        self.node.dim()
    }

    pub fn n(&self) -> usize {
        self.dim() / 2
    }

    pub fn membership(&self, x: usize, jet: &Jet2<S>) -> Result<S> {
        membership(self, x, jet)
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 1 || n == 2 {
        Ok(())
    } else {
        Err(Error::Dimension(format!(
            "complex dimension {n}; only 1 and 2 are supported"
        )))
    }
}

impl<S: Scalar> SpecNode<S> {
    pub fn dim(&self) -> usize {
        match self {
            SpecNode::PshStandard { n } | SpecNode::SigmaM { n, .. } => 2 * n,
            SpecNode::PshAlmostComplex(j) => j.dim(),
            SpecNode::Dual(inner)
            | SpecNode::ObstacleRestrict { inner, .. }
            | SpecNode::Pullback { inner, .. } => inner.dim(),
        }
    }

    fn margin(&self, x: usize, jet: &Jet2<S>) -> Result<S> {
        match self {
            SpecNode::PshStandard { n } => {
                let h = hermitian_part(jet.a(), &standard_complex_structure(*n))?;
                Ok(h.sym_eigenvalues()[0])
            }
            SpecNode::PshAlmostComplex(j) => {
                let h = hermitian_part(jet.a(), j.at(x))?;
                Ok(h.sym_eigenvalues()[0])
            }
            SpecNode::SigmaM { n, m } => {
                let j = standard_complex_structure(*n);
                let h = hermitian_part(jet.a(), &j)?;
                let lams = complex_eigenvalues(&h, &j)?;
                Ok(garding_margin(&lams, *m))
            }
            SpecNode::Dual(inner) => Ok(-inner.margin(x, &jet.neg())?),
            SpecNode::ObstacleRestrict { inner, obstacle } => {
                let reduced = inner.margin(x, jet)?;
                Ok(reduced.min(*obstacle.at(x) - jet.r()))
            }
            SpecNode::Pullback { inner, equiv } => inner.margin(x, &equiv.at(x).apply(jet)?),
        }
    }

    /// The innermost primitive under obstacle/pullback wrappers, if any, and
    /// whether a dual was encountered on the way.
    pub fn primitive(&self) -> (&SpecNode<S>, bool) {
        match self {
            SpecNode::Dual(inner) => {
                let (p, d) = inner.primitive();
                (p, !d)
            }
            SpecNode::ObstacleRestrict { inner, .. } | SpecNode::Pullback { inner, .. } => {
                inner.primitive()
            }
            other => (other, false),
        }
    }
}

/// Signed margin of `jet` with respect to `spec` at lattice point `x`:
/// positive inside, zero on the boundary, negative outside.
pub fn membership<S: Scalar>(spec: &SubequationSpec<S>, x: usize, jet: &Jet2<S>) -> Result<S> {
    if jet.dim() != spec.dim() {
        return Err(Error::Dimension(format!(
            "jet of dimension {} against a spec of dimension {}",
            jet.dim(),
            spec.dim()
        )));
    }
    Ok(spec.node.margin(x, jet)? / spec.margin_unit)
}

/// `F̃ = {J : −J ∉ Int F}`; its margin is `−margin_F(−J)`.
pub fn dual_spec<S: Scalar>(spec: &SubequationSpec<S>) -> SubequationSpec<S> {
    spec.dual()
}

impl<S: Scalar> fmt::Display for SpecNode<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpecNode::PshStandard { .. } => write!(f, "psh"),
            SpecNode::PshAlmostComplex(_) => write!(f, "psh-j"),
            SpecNode::SigmaM { m, .. } => write!(f, "sigma:{m}"),
            SpecNode::Dual(inner) => write!(f, "dual({inner})"),
            SpecNode::ObstacleRestrict { inner, .. } => write!(f, "obstacle({inner})"),
            SpecNode::Pullback { inner, .. } => write!(f, "pullback({inner})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::JetMap;
    use crate::linalg::Mat;

    fn hess(rows: &[&[f64]]) -> Jet2<f64> {
        Jet2::from_hessian(Mat::from_rows(rows)).unwrap()
    }

    #[test]
    fn psh_margin_examples() {
        let psh = SubequationSpec::psh(1).unwrap();
        let m = membership(&psh, 0, &hess(&[&[1.0, 0.0], &[0.0, -2.0]])).unwrap();
        assert_eq!(m, -0.5);
        let m = membership(&psh, 0, &hess(&[&[0.0, 3.0], &[3.0, 0.0]])).unwrap();
        assert_eq!(m, 0.0);
    }

    #[test]
    fn sigma_membership_examples() {
        // complex eigenvalues [2, −1]: diag(2, 2, −1, −1) in (x₁, y₁, x₂, y₂)
        let jet = Jet2::from_hessian(Mat::from_diag(&[2.0, 2.0, -1.0, -1.0])).unwrap();
        let s2 = SubequationSpec::sigma(2, 2).unwrap();
        let s1 = SubequationSpec::sigma(2, 1).unwrap();
        assert!(membership(&s2, 0, &jet).unwrap() < 0.0);
        assert!(membership(&s1, 0, &jet).unwrap() >= 0.0);
        assert!(matches!(
            SubequationSpec::<f64>::sigma(2, 3),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn obstacle_restriction_binds_on_value() {
        let spec = SubequationSpec::psh(1)
            .unwrap()
            .obstacle(Pointwise::Constant(1.0));
        let jet = Jet2::new(3.0, vec![0.0, 0.0], Mat::identity(2)).unwrap();
        assert_eq!(membership(&spec, 0, &jet).unwrap(), -2.0);
    }

    #[test]
    fn dual_examples() {
        let d1 = SubequationSpec::psh(1).unwrap().dual();
        assert!(membership(&d1, 0, &hess(&[&[3.0, 0.0], &[0.0, -1.0]])).unwrap() >= 0.0);
        let d2 = SubequationSpec::psh(2).unwrap().dual();
        let jet = Jet2::from_hessian(Mat::from_diag(&[1.0, 1.0, -5.0, -5.0])).unwrap();
        assert_eq!(membership(&d2, 0, &jet).unwrap(), 1.0);
    }

    #[test]
    fn pullback_by_obstacle_shift_matches_obstacle_restrict() {
        // F^g = Φ*(ℝ₋ × F₀) with Φ(r, J) = (r − g, J)
        let g = 0.75;
        let restricted = SubequationSpec::psh(1)
            .unwrap()
            .obstacle(Pointwise::Constant(0.0));
        let eq = JetEquivalence::constant(JetMap::obstacle_shift(2, g)).unwrap();
        let pulled = restricted.pullback(eq).unwrap();
        let direct = SubequationSpec::psh(1)
            .unwrap()
            .obstacle(Pointwise::Constant(g));
        for r in [-1.0, 0.5, 0.75, 2.0] {
            let jet = Jet2::new(r, vec![0.0, 0.0], Mat::from_diag(&[0.5, 1.5])).unwrap();
            assert_eq!(
                membership(&pulled, 0, &jet).unwrap(),
                membership(&direct, 0, &jet).unwrap()
            );
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let spec = SubequationSpec::<f64>::psh(2).unwrap();
        let jet = Jet2::from_hessian(Mat::identity(2)).unwrap();
        assert!(matches!(
            membership(&spec, 0, &jet),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn margin_unit_rescales() {
        let spec = SubequationSpec::psh(1).unwrap().with_margin_unit(4.0);
        let jet = Jet2::from_hessian(Mat::from_diag(&[2.0, 2.0])).unwrap();
        assert_eq!(membership(&spec, 0, &jet).unwrap(), 0.5);
    }
}
