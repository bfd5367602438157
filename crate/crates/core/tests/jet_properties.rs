use approx::assert_abs_diff_eq;
use nalgebra::DMatrix;
use proptest::prelude::*;
use pshkit_core::jet::{
    complex_eigenvalues, hermitian_part, membership, monotonicity_check, sigma_l,
    standard_complex_structure, transform_jet, Jet2, JetEquivalence, JetMap, SubequationSpec,
};
use pshkit_core::linalg::Mat;
use pshkit_core::Pointwise;

fn sym(dim: usize, v: &[f64]) -> Mat<f64> {
    Mat::from_row_major(dim, dim, v[..dim * dim].to_vec()).symmetrized()
}

fn jet(dim: usize, r: f64, p: &[f64], a: &[f64]) -> Jet2<f64> {
    Jet2::new(r, p[..dim].to_vec(), sym(dim, a)).unwrap()
}

fn spectrum(m: &Mat<f64>) -> Vec<f64> {
    let d = DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice());
    let mut ev: Vec<f64> = d.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

fn psd(dim: usize, b: &[f64]) -> Mat<f64> {
    let b = Mat::from_row_major(dim, dim, b[..dim * dim].to_vec());
    b.matmul(&b.transpose())
}

fn entries() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, 16)
}

fn dims() -> impl Strategy<Value = usize> {
    prop_oneof![Just(2usize), Just(4usize)]
}

proptest! {
    #[test]
    fn hermitian_part_is_invariant_projection(dim in dims(), a in entries()) {
        let j = standard_complex_structure::<f64>(dim / 2);
        let h = hermitian_part(&sym(dim, &a), &j).unwrap();
        let hh = hermitian_part(&h, &j).unwrap();
        prop_assert!(hh.max_abs_diff(&h) <= 1e-12);
        let jhj = j.transpose().matmul(&h).matmul(&j);
        prop_assert!(jhj.max_abs_diff(&h) <= 1e-12);
    }

    #[test]
    fn complex_eigenvalues_double_up_to_the_real_spectrum(dim in dims(), a in entries()) {
        let j = standard_complex_structure::<f64>(dim / 2);
        let h = hermitian_part(&sym(dim, &a), &j).unwrap();
        let lams = complex_eigenvalues(&h, &j).unwrap();
        let doubled: Vec<f64> = lams.iter().flat_map(|&l| [l, l]).collect();
        let oracle = spectrum(&h);
        for (x, y) in doubled.iter().zip(&oracle) {
            prop_assert!((x - y).abs() <= 1e-9, "{doubled:?} vs {oracle:?}");
        }
    }

    #[test]
    fn psh_margin_is_smallest_hermitian_eigenvalue(dim in dims(), a in entries()) {
        let spec = SubequationSpec::<f64>::psh(dim / 2).unwrap();
        let j = standard_complex_structure::<f64>(dim / 2);
        let aa = sym(dim, &a);
        let m = membership(&spec, 0, &Jet2::from_hessian(aa.clone()).unwrap()).unwrap();
        let oracle = spectrum(&hermitian_part(&aa, &j).unwrap())[0];
        prop_assert!((m - oracle).abs() <= 1e-9);
    }

    #[test]
    fn psh_margin_is_one_lipschitz(dim in dims(), a in entries(), b in entries()) {
        let spec = SubequationSpec::<f64>::psh(dim / 2).unwrap();
        let (x, y) = (sym(dim, &a), sym(dim, &b));
        let mx = membership(&spec, 0, &Jet2::from_hessian(x.clone()).unwrap()).unwrap();
        let my = membership(&spec, 0, &Jet2::from_hessian(y.clone()).unwrap()).unwrap();
        let dist = spectrum(&x.sub(&y)).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!((mx - my).abs() <= dist + 1e-9);
    }

    #[test]
    fn positivity_for_every_primitive(
        a in entries(), b in entries(), p in entries(), r in -2.0..2.0f64, m in 1usize..=2,
    ) {
        let specs = [
            SubequationSpec::<f64>::psh(2).unwrap(),
            SubequationSpec::sigma(2, m).unwrap(),
            SubequationSpec::sigma(2, m).unwrap().dual(),
            SubequationSpec::psh(2).unwrap().obstacle(Pointwise::Constant(0.5)),
        ];
        let j = jet(4, r, &p, &a);
        let bumped = j.with_hessian(j.a().add(&psd(4, &b))).unwrap();
        for spec in &specs {
            let before = membership(spec, 0, &j).unwrap();
            let after = membership(spec, 0, &bumped).unwrap();
            prop_assert!(after >= before - 1e-9 * (1.0 + before.abs()), "{}: {before} -> {after}", spec.node);
        }
    }

    #[test]
    fn reduced_specs_ignore_the_value(a in entries(), p in entries(), r in -5.0..5.0f64, s in -5.0..5.0f64) {
        for spec in [SubequationSpec::<f64>::psh(2).unwrap(), SubequationSpec::sigma(2, 1).unwrap()] {
            let m1 = membership(&spec, 0, &jet(4, r, &p, &a)).unwrap();
            let m2 = membership(&spec, 0, &jet(4, s, &p, &a)).unwrap();
            prop_assert_eq!(m1, m2);
        }
    }

    #[test]
    fn double_dual_matches_away_from_the_boundary(dim in dims(), a in entries(), m in 1usize..=2) {
        let n = dim / 2;
        let spec = SubequationSpec::<f64>::sigma(n, m.min(n)).unwrap();
        let j = Jet2::from_hessian(sym(dim, &a)).unwrap();
        let m0 = membership(&spec, 0, &j).unwrap();
        prop_assume!(m0.abs() > 1e-6);
        let m2 = membership(&spec.dual().dual(), 0, &j).unwrap();
        prop_assert_eq!(m0 >= 0.0, m2 >= 0.0);
    }

    #[test]
    fn sigma_chain_nests(a in entries()) {
        let j = Jet2::from_hessian(sym(4, &a)).unwrap();
        let s2 = membership(&SubequationSpec::<f64>::sigma(2, 2).unwrap(), 0, &j).unwrap();
        let s1 = membership(&SubequationSpec::<f64>::sigma(2, 1).unwrap(), 0, &j).unwrap();
        prop_assert!(s2 < 0.0 || s1 >= 0.0);
    }

    #[test]
    fn psh_members_are_dual_members(dim in dims(), a in entries()) {
        let spec = SubequationSpec::<f64>::psh(dim / 2).unwrap();
        let j = Jet2::from_hessian(sym(dim, &a)).unwrap();
        if membership(&spec, 0, &j).unwrap() >= 0.0 {
            prop_assert!(membership(&spec.dual(), 0, &j).unwrap() >= 0.0);
        }
    }

    #[test]
    fn sigma_l_matches_expansion(l in prop::collection::vec(-4.0..4.0f64, 3)) {
        let e1 = l[0] + l[1] + l[2];
        let e2 = l[0] * l[1] + l[0] * l[2] + l[1] * l[2];
        let e3 = l[0] * l[1] * l[2];
        assert_abs_diff_eq!(sigma_l(&l, 1).unwrap(), e1, epsilon = 1e-12);
        assert_abs_diff_eq!(sigma_l(&l, 2).unwrap(), e2, epsilon = 1e-12);
        assert_abs_diff_eq!(sigma_l(&l, 3).unwrap(), e3, epsilon = 1e-12);
    }

    #[test]
    fn equivalence_round_trips(
        a in entries(), p in entries(), r in -2.0..2.0f64,
        kk in entries(), hh in entries(), a0 in entries(), p0 in entries(), r0 in -1.0..1.0f64,
    ) {
        let dim = 4;
        let near_id = |v: &[f64]| Mat::identity(dim).add(&Mat::from_row_major(dim, dim, v[..16].to_vec()).scale(0.05));
        let map = JetMap {
            r0,
            p0: p0[..dim].to_vec(),
            a0: sym(dim, &a0),
            k: near_id(&kk),
            h: near_id(&hh),
            l: vec![sym(dim, &kk).scale(0.1); dim],
        };
        let eq = JetEquivalence::constant(map).unwrap();
        let inv = eq.inverse().unwrap();
        let j = jet(dim, r, &p, &a);
        let back = transform_jet(&inv, 0, &transform_jet(&eq, 0, &j).unwrap()).unwrap();
        prop_assert!((back.r() - j.r()).abs() <= 1e-10);
        for (x, y) in back.p().iter().zip(j.p()) {
            prop_assert!((x - y).abs() <= 1e-10);
        }
        prop_assert!(back.a().max_abs_diff(j.a()) <= 1e-10);
    }
}

#[test]
fn garding_cone_is_monotone_under_psd_directions() {
    let s22 = SubequationSpec::<f64>::sigma(2, 2).unwrap();
    let psh = SubequationSpec::<f64>::psh(2).unwrap();
    let rep = monotonicity_check(&s22, &psh, 10_000, 3).unwrap();
    assert_eq!(rep.violations, 0);
    let s21 = SubequationSpec::<f64>::sigma(2, 1).unwrap();
    assert_eq!(
        monotonicity_check(&s21, &s21, 10_000, 4)
            .unwrap()
            .violations,
        0
    );
}
