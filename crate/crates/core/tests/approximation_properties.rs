use std::sync::Arc;

use proptest::prelude::*;
use pshkit_core::approx::{
    audit_strictness, convex_majorant_chi, exhaustion_sequence, smooth_with_budget, strictify,
    sup_convolution, ApproximationRun,
};
use pshkit_core::envelope::SolverParams;
use pshkit_core::grid::{build_disc_domain, Grid, GridField, PointKind};
use pshkit_core::jet::SubequationSpec;

fn disc(h: f64) -> Arc<Grid<f64>> {
    Arc::new(build_disc_domain(1, 1.0, h).unwrap())
}

fn r2(x: &[f64]) -> f64 {
    x[0] * x[0] + x[1] * x[1]
}

fn active(grid: &Grid<f64>) -> Vec<usize> {
    (0..grid.len())
        .filter(|&i| grid.kind(i) != PointKind::Exterior)
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sup_convolution_matches_brute_force(vals in prop::collection::vec(-2.0..2.0f64, 81), k in 1u32..6) {
        let grid = disc(0.25);
        let u = GridField::new(grid.clone(), vals).unwrap();
        let g = sup_convolution(&u, k as f64).unwrap();
        let pts = active(&grid);
        for &i in &pts {
            let x = grid.point(i);
            let best = pts
                .iter()
                .map(|&j| {
                    let y = grid.point(j);
                    u.at(j) - k as f64 * ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt()
                })
                .fold(f64::NEG_INFINITY, f64::max);
            prop_assert!((g.at(i) - best).abs() <= 1e-12, "{} vs {best}", g.at(i));
        }
    }

    #[test]
    fn sup_convolutions_decrease_to_the_sample(vals in prop::collection::vec(-2.0..2.0f64, 289)) {
        let grid = disc(0.125);
        let u = GridField::new(grid.clone(), vals).unwrap();
        let mut prev = sup_convolution(&u, 1.0).unwrap();
        for k in [2.0, 4.0, 8.0] {
            let g = sup_convolution(&u, k).unwrap();
            for i in active(&grid) {
                prop_assert!(u.at(i) <= g.at(i));
                prop_assert!(g.at(i) <= prev.at(i));
            }
            prev = g;
        }
    }

    #[test]
    fn chi_is_a_convex_majorant(
        steps in prop::collection::vec(0.01..1.0f64, 1..40),
        vals in prop::collection::vec(-5.0..5.0f64, 40),
    ) {
        let mut t = -1.0;
        let samples: Vec<(f64, f64)> = steps
            .iter()
            .zip(&vals)
            .map(|(dt, v)| {
                t += dt;
                (t, *v)
            })
            .collect();
        let chi = convex_majorant_chi(&samples).unwrap();
        prop_assert!(chi.is_convex_with_unit_slopes());
        for w in chi.slopes().windows(2) {
            prop_assert!(w[0] <= w[1]);
        }
        prop_assert!(chi.slopes().iter().all(|&s| s >= 1.0));
        for &(t, psi) in &samples {
            prop_assert!(chi.eval(t) >= psi, "chi({t}) = {} < {psi}", chi.eval(t));
        }
        prop_assert_eq!(chi.eval(samples[0].0), samples[0].1);
    }
}

#[test]
fn chi_rejects_unsorted_samples() {
    assert!(convex_majorant_chi(&[(0.0, 1.0), (0.0, 2.0)]).is_err());
    assert!(convex_majorant_chi::<f64>(&[]).is_err());
}

#[test]
fn chi_examples() {
    let grid: Vec<f64> = (0..=30).map(|i| 0.1 * i as f64).collect();
    let constant: Vec<(f64, f64)> = grid.iter().map(|&t| (t, 0.7)).collect();
    let chi = convex_majorant_chi(&constant).unwrap();
    assert!(chi.slopes().iter().all(|&s| (s - 1.0).abs() <= 1e-12));
    for &t in &grid {
        assert!((chi.eval(t) - (0.7 + t)).abs() <= 1e-12);
    }
    let identity: Vec<(f64, f64)> = grid.iter().map(|&t| (t, t)).collect();
    let chi = convex_majorant_chi(&identity).unwrap();
    for &t in &grid {
        assert!((chi.eval(t) - t).abs() <= 1e-12);
    }
    let parabola: Vec<(f64, f64)> = grid.iter().map(|&t| (t, t * t)).collect();
    let chi = convex_majorant_chi(&parabola).unwrap();
    assert!(chi.is_convex_with_unit_slopes());
    assert!(parabola.iter().all(|&(t, v)| chi.eval(t) >= v));
    assert!(chi.eval(3.0) <= 9.0 + 0.7);
}

fn regression_run(h: f64) -> ApproximationRun<f64> {
    let grid = disc(h);
    let u = GridField::from_fn(grid.clone(), |x| (r2(x) - 0.5).max(6.0 * (x[0] - 0.3)));
    let rho = GridField::from_fn(grid.clone(), |x| r2(x) - 1.0);
    let compact: Vec<bool> = (0..grid.len())
        .map(|i| grid.kind(i) == PointKind::Interior && r2(&grid.point(i)) <= 0.25)
        .collect();
    let eps: Vec<f64> = (1..=4).map(|k| 0.1 / k as f64).collect();
    ApproximationRun::new(
        u,
        rho,
        SubequationSpec::psh(1).unwrap(),
        vec![1, 2, 3, 4],
        eps,
        SolverParams::defaults(1).with_tol(1e-9),
    )
    .unwrap()
    .with_compact(compact)
    .unwrap()
}

#[test]
fn exhaustion_sequence_decreases_to_the_sample() {
    let run = regression_run(1.0 / 16.0);
    let out = exhaustion_sequence(&run).unwrap();
    assert!(
        out.all_pass(),
        "{:#?}",
        out.audits.iter().filter(|a| !a.pass).collect::<Vec<_>>()
    );
    assert_eq!(out.stages.len(), 4);
    let grid = run.u.grid();
    for w in out.stages.windows(2) {
        for i in active(grid) {
            assert!(w[1].u_k.at(i) <= w[0].u_k.at(i) + 1e-9);
        }
        assert!(w[1].compact_gap < w[0].compact_gap);
    }
    for s in &out.stages {
        for i in active(grid) {
            assert!(run.u.at(i) <= s.u_k.at(i) + 1e-9);
            assert!(s.u_k.at(i) <= s.obstacle.at(i) + 1e-9);
        }
    }
}

#[test]
fn schedules_are_validated() {
    let grid = disc(0.125);
    let u = GridField::from_fn(grid.clone(), r2);
    let rho = GridField::from_fn(grid.clone(), |x| r2(x) - 1.0);
    let spec = SubequationSpec::psh(1).unwrap();
    let p = SolverParams::defaults(1);
    let make = |k: Vec<u32>, e: Vec<f64>| {
        ApproximationRun::new(u.clone(), rho.clone(), spec.clone(), k, e, p.clone())
    };
    assert!(make(vec![1, 2], vec![0.2, 0.1]).is_ok());
    assert!(make(vec![2, 1], vec![0.2, 0.1]).is_err());
    assert!(make(vec![0, 1], vec![0.2, 0.1]).is_err());
    assert!(make(vec![1, 2], vec![0.1, 0.2]).is_err());
    assert!(make(vec![1, 2], vec![0.1]).is_err());
    let flat = GridField::from_fn(grid.clone(), |x| x[0]);
    assert!(
        ApproximationRun::new(u.clone(), flat, spec.clone(), vec![1], vec![0.1], p.clone())
            .is_err()
    );
}

#[test]
fn strictify_adds_eps_times_the_margin_of_rho() {
    let grid = disc(1.0 / 16.0);
    let spec = SubequationSpec::psh(1).unwrap();
    let u = GridField::from_fn(grid.clone(), |x| x[0] * x[0] - x[1] * x[1] + x[0]);
    let rho = GridField::from_fn(grid.clone(), |x| r2(x) - 1.0);
    for eps in [0.05, 0.1, 0.4] {
        let v = strictify(&u, &rho, eps).unwrap();
        let rep = audit_strictness(&v, &spec, 2.0 * eps - 1e-9, None).unwrap();
        assert!(rep.pass, "eps {eps}: {:?}", rep.margin);
        assert!((rep.margin.worst_margin - 2.0 * eps).abs() <= 1e-9);
    }
    assert!(strictify(&u, &rho, -0.1).is_err());
}

#[test]
fn smoothing_keeps_half_the_budget() {
    let grid = disc(1.0 / 32.0);
    let spec = SubequationSpec::psh(1).unwrap();
    let f = GridField::from_fn(grid.clone(), |x| {
        (r2(x) - 0.3).max(2.0 * x[0]) + 0.2 * r2(x)
    });
    let smoothed = smooth_with_budget(&f, 4.0 / 32.0, &spec, 0.4).unwrap();
    assert!(smoothed.report.pass, "{:?}", smoothed.report);
    assert!(smoothed.report.output.worst_margin >= 0.2);
    for i in grid.indices_of(PointKind::Boundary) {
        assert_eq!(smoothed.field.at(i), f.at(i));
    }
    assert!(smooth_with_budget(&f, 0.5 / 32.0, &spec, 0.4).is_err());
    assert!(smooth_with_budget(&f, 4.0 / 32.0, &spec, 0.0).is_err());
}
