use std::sync::Arc;

use proptest::prelude::*;
use pshkit_core::grid::{
    build_disc_domain, discrete_jet, distance_to_set, read_field, write_field, Grid, GridField,
    PointKind,
};

fn quadratic(c: &[f64]) -> impl Fn(&[f64]) -> f64 + '_ {
    move |x: &[f64]| {
        let d = x.len();
        let mut v = c[0];
        for i in 0..d {
            v += c[1 + i] * x[i];
            for j in 0..d {
                v += 0.5 * c[1 + d + i * d + j] * x[i] * x[j];
            }
        }
        v
    }
}

fn disc(n: usize, h: f64) -> Arc<Grid<f64>> {
    Arc::new(build_disc_domain(n, 1.0, h).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn jets_are_exact_on_quadratics(c in prop::collection::vec(-2.0..2.0f64, 21)) {
        let grid = disc(2, 0.25);
        let d = 4;
        let f = GridField::from_fn(grid.clone(), quadratic(&c));
        for i in grid.indices_of(PointKind::Interior) {
            let x = grid.point(i);
            let j = discrete_jet(&f, i).unwrap();
            prop_assert!((j.r() - quadratic(&c)(&x)).abs() <= 1e-12);
            for a in 0..d {
                let mut grad = c[1 + a];
                for b in 0..d {
                    grad += 0.5 * (c[1 + d + a * d + b] + c[1 + d + b * d + a]) * x[b];
                }
                prop_assert!((j.p()[a] - grad).abs() <= 1e-10);
                for b in 0..d {
                    let hess = 0.5 * (c[1 + d + a * d + b] + c[1 + d + b * d + a]);
                    prop_assert!((j.a()[(a, b)] - hess).abs() <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn jets_are_linear(s in -3.0..3.0f64, t in -3.0..3.0f64, seed in 0u64..1000) {
        let grid = disc(1, 0.125);
        let f = GridField::from_fn(grid.clone(), |x| (x[0] * 3.0 + seed as f64).sin() * x[1].exp());
        let g = GridField::from_fn(grid.clone(), |x| x[0].powi(3) - x[0] * x[1] * x[1]);
        let comb = f.zip_map(&g, |a, b| s * a + t * b).unwrap();
        for i in grid.indices_of(PointKind::Interior) {
            let lhs = discrete_jet(&comb, i).unwrap();
            let rhs = discrete_jet(&f, i).unwrap().scale(s).add(&discrete_jet(&g, i).unwrap().scale(t)).unwrap();
            prop_assert!((lhs.r() - rhs.r()).abs() <= 1e-12);
            for (x, y) in lhs.p().iter().zip(rhs.p()) {
                prop_assert!((x - y).abs() <= 1e-9);
            }
            prop_assert!(lhs.a().max_abs_diff(rhs.a()) <= 1e-7);
        }
    }

    #[test]
    fn field_files_round_trip(vals in prop::collection::vec(-1e6..1e6f64, 81)) {
        let grid = disc(1, 0.25);
        let f = GridField::new(grid.clone(), vals).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.fld");
        write_field(&f, &path).unwrap();
        let back = read_field::<f64>(&path).unwrap();
        prop_assert!(back.grid().same_layout(&grid));
        for i in f.active() {
            prop_assert_eq!(back.at(i).to_bits(), f.at(i).to_bits());
        }
    }

    #[test]
    fn distance_transform_matches_brute_force(seeds in prop::collection::vec(any::<bool>(), 289)) {
        let grid = disc(1, 0.125);
        prop_assume!(seeds.contains(&true));
        let d = distance_to_set(&grid, |i| seeds[i]);
        let pts: Vec<Vec<f64>> = (0..grid.len()).filter(|&i| seeds[i]).map(|i| grid.point(i)).collect();
        for i in 0..grid.len() {
            let x = grid.point(i);
            let best = pts
                .iter()
                .map(|p| ((x[0] - p[0]).powi(2) + (x[1] - p[1]).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min);
            prop_assert!((d[i] - best).abs() <= 1e-12, "{} vs {}", d[i], best);
        }
    }
}

#[test]
fn distance_to_empty_set_is_infinite() {
    let grid = disc(1, 0.25);
    assert!(distance_to_set(&grid, |_| false)
        .iter()
        .all(|d| d.is_infinite()));
}

#[test]
fn disc_masks_are_symmetric_and_grow_with_the_radius() {
    let h = 1.0 / 16.0;
    let mut prev: Option<Vec<Vec<i64>>> = None;
    for r in [0.4, 0.55, 0.7, 0.85, 1.0] {
        let grid = build_disc_domain::<f64>(1, r, h).unwrap();
        let key = |i: usize| -> Vec<i64> {
            grid.point(i)
                .iter()
                .map(|v| (v / h).round() as i64)
                .collect()
        };
        let interior: Vec<Vec<i64>> = grid
            .indices_of(PointKind::Interior)
            .into_iter()
            .map(key)
            .collect();
        for p in &interior {
            for q in [vec![-p[0], p[1]], vec![p[0], -p[1]], vec![p[1], p[0]]] {
                assert!(interior.contains(&q), "r = {r}: {p:?} without {q:?}");
            }
        }
        if let Some(smaller) = prev {
            for p in &smaller {
                assert!(interior.contains(p), "r = {r} lost {p:?}");
            }
        }
        prev = Some(interior);
    }
}

#[test]
fn boundary_points_touch_the_interior() {
    let grid = disc(2, 0.25);
    let offs = pshkit_core::grid::king_offsets(grid.dim());
    for i in grid.indices_of(PointKind::Boundary) {
        assert!(offs.iter().any(|o| grid
            .offset(i, o)
            .is_some_and(|j| grid.kind(j) == PointKind::Interior)));
    }
    for i in grid.indices_of(PointKind::Interior) {
        for o in &offs {
            let j = grid.offset(i, o).unwrap();
            assert_ne!(grid.kind(j), PointKind::Exterior);
        }
    }
}
