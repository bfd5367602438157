use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::spec::{membership, SubequationSpec};
use super::Jet2;
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::scalar::Scalar;

const MAX_REJECTIONS: usize = 1_000_000;

fn normal<S: Scalar, R: Rng + ?Sized>(rng: &mut R) -> S {
    S::lit(rng.sample::<f64, _>(StandardNormal))
}

/// Random jet of real dimension `dim`: `r ~ U(−2, 2)`, `p ~ N(0, I)`,
/// `A` a symmetrized Gaussian matrix plus `s·I` with `s ~ U(−1.5, 1.5)`.
pub fn random_jet<S: Scalar, R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Jet2<S> {
    let r = S::lit(rng.gen_range(-2.0..2.0));
    let p = (0..dim).map(|_| normal(rng)).collect();
    let mut a = Mat::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            a[(i, j)] = normal(rng);
        }
    }
    let s = S::lit(rng.gen_range(-1.5..1.5));
    let a = a.symmetrized().add(&Mat::identity(dim).scale(s));
    Jet2::new(r, p, a).expect("random jet dimension")
}

/// Random positive semidefinite matrix `t·BBᵀ`, `t ~ U(0, 1)`.
fn random_psd<S: Scalar, R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Mat<S> {
    let mut b = Mat::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            b[(i, j)] = normal(rng);
        }
    }
    let t = S::lit(rng.gen_range(0.0..1.0));
    b.matmul(&b.transpose()).scale(t)
}

fn sample_member<S: Scalar, R: Rng + ?Sized>(
    rng: &mut R,
    spec: &SubequationSpec<S>,
    x: usize,
) -> Result<Jet2<S>> {
    for _ in 0..MAX_REJECTIONS {
        let jet = random_jet(rng, spec.dim());
        if membership(spec, x, &jet)? >= S::zero() {
            return Ok(jet);
        }
    }
    Err(Error::Sampling(format!(
        "no member of {} found in {MAX_REJECTIONS} draws",
        spec.node
    )))
}

#[derive(Clone, Debug, Serialize)]
pub struct MonotonicityReport {
    pub samples: usize,
    pub violations: usize,
    /// Smallest margin of `f + m` under `F` seen.
    pub worst_margin: f64,
    /// First violating pair, flattened as `(r, p…, A row-major…)`.
    pub witness: Option<(Vec<f64>, Vec<f64>)>,
}

fn flatten<S: Scalar>(j: &Jet2<S>) -> Vec<f64> {
    std::iter::once(j.r())
        .chain(j.p().iter().copied())
        .chain(j.a().as_slice().iter().copied())
        .map(|v| v.as_f64())
        .collect()
}

/// Samples pairs `f ∈ F`, `m ∈ M` and checks `f + m ∈ F`.
pub fn monotonicity_check<S: Scalar>(
    spec_f: &SubequationSpec<S>,
    spec_m: &SubequationSpec<S>,
    samples: usize,
    seed: u64,
) -> Result<MonotonicityReport> {
    if spec_f.dim() != spec_m.dim() {
        return Err(Error::Dimension(format!(
            "monotonicity check between dimensions {} and {}",
            spec_f.dim(),
            spec_m.dim()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = MonotonicityReport {
        samples,
        violations: 0,
        worst_margin: f64::INFINITY,
        witness: None,
    };
    for _ in 0..samples {
        let f = sample_member(&mut rng, spec_f, 0)?;
        let m = sample_member(&mut rng, spec_m, 0)?;
        let margin = membership(spec_f, 0, &f.add(&m)?)?.as_f64();
        report.worst_margin = report.worst_margin.min(margin);
        if margin < 0.0 {
            report.violations += 1;
            if report.witness.is_none() {
                report.witness = Some((flatten(&f), flatten(&m)));
            }
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct SpecAuditReport {
    pub spec: String,
    pub samples: usize,
    /// Jets with `|margin| > τ` that entered the double-dual comparison.
    pub double_dual_checked: usize,
    pub double_dual_agree: usize,
    pub positivity_violations: usize,
    /// Most negative `margin(A + P) − margin(A)`.
    pub worst_positivity: f64,
}

impl SpecAuditReport {
    pub fn pass(&self) -> bool {
        self.double_dual_agree == self.double_dual_checked && self.positivity_violations == 0
    }
}

/// Randomized audit of a spec: duality involution on jets with
/// `|margin| > tau`, and positivity under adding PSD matrices.
pub fn audit_spec<S: Scalar>(
    spec: &SubequationSpec<S>,
    samples: usize,
    seed: u64,
    tau: S,
) -> Result<SpecAuditReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dd = spec.dual().dual();
    let dim = spec.dim();
    let slack = S::lit(1e3) * S::epsilon();
    let mut rep = SpecAuditReport {
        spec: spec.node.to_string(),
        samples,
        double_dual_checked: 0,
        double_dual_agree: 0,
        positivity_violations: 0,
        worst_positivity: 0.0,
    };
    for _ in 0..samples {
        let jet = random_jet(&mut rng, dim);
        let m = membership(spec, 0, &jet)?;
        if m.abs() > tau {
            rep.double_dual_checked += 1;
            let m2 = membership(&dd, 0, &jet)?;
            if (m >= S::zero()) == (m2 >= S::zero()) {
                rep.double_dual_agree += 1;
            }
        }
        let p = random_psd(&mut rng, dim);
        let bumped = jet.with_hessian(jet.a().add(&p))?;
        let diff = membership(spec, 0, &bumped)? - m;
        rep.worst_positivity = rep.worst_positivity.min(diff.as_f64());
        if diff < -slack * (S::one() + m.abs() + p.max_abs()) {
            rep.positivity_violations += 1;
        }
    }
    Ok(rep)
}

#[derive(Clone, Debug, Serialize)]
pub struct InclusionReport {
    pub samples: usize,
    pub members: usize,
    pub violations: usize,
}

/// Counts sampled members of `a` that are not members of `b`.
pub fn inclusion_check<S: Scalar>(
    a: &SubequationSpec<S>,
    b: &SubequationSpec<S>,
    samples: usize,
    seed: u64,
) -> Result<InclusionReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = InclusionReport {
        samples,
        members: 0,
        violations: 0,
    };
    for _ in 0..samples {
        let jet = random_jet(&mut rng, a.dim());
        if membership(a, 0, &jet)? >= S::zero() {
            rep.members += 1;
            if membership(b, 0, &jet)? < S::zero() {
                rep.violations += 1;
            }
        }
    }
    Ok(rep)
}

/// Checks `Σ_{m+1} ⊆ Σ_m` for every `m < n` on random jets.
pub fn sigma_nesting_check<S: Scalar>(
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<InclusionReport> {
    let mut total = InclusionReport {
        samples: 0,
        members: 0,
        violations: 0,
    };
    for m in 1..n {
        let rep = inclusion_check(
            &SubequationSpec::<S>::sigma(n, m + 1)?,
            &SubequationSpec::sigma(n, m)?,
            samples,
            seed.wrapping_add(m as u64),
        )?;
        total.samples += rep.samples;
        total.members += rep.members;
        total.violations += rep.violations;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psh_is_self_monotone() {
        let psh = SubequationSpec::<f64>::psh(2).unwrap();
        let rep = monotonicity_check(&psh, &psh, 2000, 1).unwrap();
        assert_eq!(rep.violations, 0);
    }

    #[test]
    fn dual_psh_is_not_a_monotonicity_cone() {
        let psh = SubequationSpec::<f64>::psh(2).unwrap();
        let rep = monotonicity_check(&psh, &psh.dual(), 2000, 3).unwrap();
        assert!(rep.violations > 0);
        assert!(rep.witness.is_some());
    }

    #[test]
    fn empty_spec_gives_sampling_error() {
        // r ≤ −10 is never drawn
        let spec = SubequationSpec::<f64>::psh(1)
            .unwrap()
            .obstacle(crate::pointwise::Pointwise::Constant(-10.0));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            sample_member(&mut rng, &spec, 0),
            Err(Error::Sampling(_))
        ));
    }

    #[test]
    fn audits_are_seed_deterministic() {
        let s = SubequationSpec::<f64>::sigma(2, 1).unwrap();
        let a = audit_spec(&s, 500, 9, 1e-6).unwrap();
        let b = audit_spec(&s, 500, 9, 1e-6).unwrap();
        assert_eq!(a.double_dual_checked, b.double_dual_checked);
        assert_eq!(a.worst_positivity, b.worst_positivity);
        assert!(a.pass());
    }
}
