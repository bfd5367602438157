use super::{Grid, PointKind};
use crate::scalar::Scalar;

/// Squared 1-D distance transform of sampled `f` (lower envelope of parabolas).
fn transform_line(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    let mut first = None;
    for q in 0..n {
        if !f[q].is_finite() {
            continue;
        }
        match first {
            None => {
                first = Some(q);
                v[0] = q;
                z[0] = f64::NEG_INFINITY;
                z[1] = f64::INFINITY;
            }
            Some(_) => loop {
                let p = v[k];
                let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64))
                    / (2.0 * (q as f64 - p as f64));
                if s <= z[k] && k > 0 {
                    k -= 1;
                    continue;
                }
                if s <= z[k] {
                    v[0] = q;
                    z[0] = f64::NEG_INFINITY;
                    z[1] = f64::INFINITY;
                    break;
                }
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = f64::INFINITY;
                break;
            },
        }
    }
    if first.is_none() {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        return;
    }
    let mut k = 0usize;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let d = q as f64 - p as f64;
        *o = d * d + f[p];
    }
}

/// Euclidean distance from every lattice point to the nearest Exterior point,
/// counting the layer just outside the lattice as Exterior.
pub fn distance_to_exterior<S: Scalar>(grid: &Grid<S>) -> Vec<S> {
    transform(grid, |i| grid.kind(i) == PointKind::Exterior, true)
}

/// Euclidean distance to the nearest lattice point with `seed(i)`
/// (infinite when there is none).
pub fn distance_to_set<S: Scalar>(grid: &Grid<S>, seed: impl Fn(usize) -> bool) -> Vec<S> {
    transform(grid, seed, false)
}

fn transform<S: Scalar>(grid: &Grid<S>, seed: impl Fn(usize) -> bool, faces: bool) -> Vec<S> {
    let dims = grid.dims();
    let strides = grid.strides();
    let len = grid.len();
    let mut d2: Vec<f64> = (0..len)
        .map(|i| if seed(i) { 0.0 } else { f64::INFINITY })
        .collect();
    let maxd = *dims.iter().max().unwrap_or(&1);
    let mut line = vec![0.0; maxd];
    let mut out = vec![0.0; maxd];
    let mut v = vec![0usize; maxd];
    let mut z = vec![0.0; maxd + 1];
    for axis in 0..dims.len() {
        let n = dims[axis];
        let s = strides[axis];
        for start in 0..len {
            if (start / s) % n != 0 {
                continue;
            }
            for q in 0..n {
                line[q] = d2[start + q * s];
            }
            transform_line(&line[..n], &mut out[..n], &mut v, &mut z);
            for q in 0..n {
                d2[start + q * s] = out[q];
            }
        }
    }
    let h = grid.spacing();
    (0..len)
        .map(|i| {
            if !faces {
                return S::lit(d2[i].sqrt()) * h;
            }
            let face = grid
                .coords(i)
                .iter()
                .zip(dims)
                .map(|(&c, &n)| (c + 1).min(n - c))
                .min()
                .unwrap_or(1) as f64;
            S::lit(d2[i].min(face * face).sqrt()) * h
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_disc_domain;

    #[test]
    fn matches_brute_force() {
        let g = build_disc_domain(1, 1.0, 0.1).unwrap();
        let d = distance_to_exterior(&g);
        let ext: Vec<Vec<f64>> = g
            .indices_of(PointKind::Exterior)
            .iter()
            .map(|&i| g.point(i))
            .collect();
        for i in 0..g.len() {
            let x = g.point(i);
            let mut best = f64::INFINITY;
            for e in &ext {
                best = best.min(((x[0] - e[0]).powi(2) + (x[1] - e[1]).powi(2)).sqrt());
            }
            let c = g.coords(i);
            for (a, &n) in c.iter().zip(g.dims()) {
                best = best.min((a + 1).min(n - a) as f64 * 0.1);
            }
            assert!(
                (d[i] - best).abs() < 1e-9,
                "point {c:?}: {} vs {best}",
                d[i]
            );
        }
    }
}
