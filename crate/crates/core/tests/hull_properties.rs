use std::sync::Arc;

use pshkit_core::envelope::SolverParams;
use pshkit_core::grid::{build_disc_domain, Grid, PointKind};
use pshkit_core::hull::{hull, relative_extremal, CompactSet, DEFAULT_THETA};
use pshkit_core::jet::SubequationSpec;

const H: f64 = 1.0 / 32.0;

fn disc() -> Arc<Grid<f64>> {
    Arc::new(build_disc_domain(1, 1.0, H).unwrap())
}

fn params() -> SolverParams<f64> {
    SolverParams::defaults(1).with_tol(1e-10)
}

fn psh() -> SubequationSpec<f64> {
    SubequationSpec::psh(1).unwrap()
}

fn norm(x: &[f64]) -> f64 {
    (x[0] * x[0] + x[1] * x[1]).sqrt()
}

#[test]
fn whole_interior_is_its_own_hull() {
    let grid = disc();
    let k = CompactSet::interior(&*grid);
    let u = relative_extremal(&grid, &psh(), &k, &params()).unwrap();
    for i in grid.indices_of(PointKind::Interior) {
        assert_eq!(u.field.at(i), -1.0);
    }
    let kh = hull(&grid, &psh(), &k, DEFAULT_THETA, &params()).unwrap();
    assert_eq!(kh, k);
}

#[test]
fn circle_hull_fills_the_disc() {
    let grid = disc();
    let k =
        CompactSet::from_predicate(&*grid, |x| (norm(x) - 0.5).abs() <= H / 2f64.sqrt()).unwrap();
    let kh = hull(&grid, &psh(), &k, DEFAULT_THETA, &params()).unwrap();
    for i in grid.indices_of(PointKind::Interior) {
        let r = norm(&grid.point(i));
        if r < 0.5 - H {
            assert!(kh.contains(i), "r = {r} missing");
        } else if r > 0.5 + 2.0 * H {
            assert!(!kh.contains(i), "r = {r} included");
        }
    }
}

#[test]
fn hulls_grow_with_the_set() {
    let grid = disc();
    let small = CompactSet::from_predicate(&*grid, |x| norm(&[x[0] - 0.2, x[1]]) <= 0.15).unwrap();
    let big = CompactSet::from_predicate(&*grid, |x| norm(&[x[0] - 0.2, x[1]]) <= 0.3).unwrap();
    assert!(small.is_subset(&big));
    let u_small = relative_extremal(&grid, &psh(), &small, &params())
        .unwrap()
        .field;
    let u_big = relative_extremal(&grid, &psh(), &big, &params())
        .unwrap()
        .field;
    for i in grid.indices_of(PointKind::Interior) {
        assert!(u_big.at(i) <= u_small.at(i) + 1e-9);
    }
    let h_small = hull(&grid, &psh(), &small, DEFAULT_THETA, &params()).unwrap();
    let h_big = hull(&grid, &psh(), &big, DEFAULT_THETA, &params()).unwrap();
    assert!(small.is_subset(&h_small));
    assert!(h_small.is_subset(&h_big));
}

#[test]
fn hull_of_a_hull_stays_within_one_ring() {
    let grid = disc();
    let k = CompactSet::from_predicate(&*grid, |x| (norm(x) - 0.4).abs() <= H).unwrap();
    let once = hull(&grid, &psh(), &k, DEFAULT_THETA, &params()).unwrap();
    let twice = hull(&grid, &psh(), &once, DEFAULT_THETA, &params()).unwrap();
    assert!(once.is_subset(&twice));
    let offs = pshkit_core::grid::king_offsets(2);
    for i in once.symmetric_difference(&twice) {
        assert!(
            offs.iter()
                .filter_map(|o| grid.offset(i, o))
                .any(|j| once.contains(j)),
            "{:?} is far from the first hull",
            grid.point(i)
        );
    }
}

#[test]
fn separated_discs_are_not_joined() {
    let grid = disc();
    let k = CompactSet::from_predicate(&*grid, |x| {
        norm(&[x[0] - 0.4, x[1]]) <= 0.12 || norm(&[x[0] + 0.4, x[1]]) <= 0.12
    })
    .unwrap();
    let kh = hull(&grid, &psh(), &k, DEFAULT_THETA, &params()).unwrap();
    for i in grid.indices_of(PointKind::Interior) {
        let x = grid.point(i);
        let far = norm(&[x[0] - 0.4, x[1]]).min(norm(&[x[0] + 0.4, x[1]])) > 0.12 + 2.0 * H;
        if far {
            assert!(!kh.contains(i), "{x:?} joined the hull");
        }
    }
}

#[test]
fn sets_must_lie_in_the_interior() {
    let grid = disc();
    assert!(CompactSet::from_predicate(&*grid, |_| false).is_err());
    let mut members = vec![false; grid.len()];
    members[grid.indices_of(PointKind::Boundary)[0]] = true;
    assert!(CompactSet::new(&*grid, members).is_err());
    let k = CompactSet::interior(&*grid);
    for theta in [0.0, 1.0, -0.5] {
        assert!(hull(&grid, &psh(), &k, theta, &params()).is_err());
    }
}
