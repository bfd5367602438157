use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::GridField;
use crate::scalar::Scalar;

const BLOCK: usize = 4;

struct Block<S> {
    lo: Vec<S>,
    hi: Vec<S>,
    max: S,
    members: Vec<usize>,
}

/// `g_k(x) = max_y (u(y) − k|x − y|)` over lattice points `y` of
/// Interior ∪ Boundary, evaluated on the same points (other points keep `u`).
///
/// Exact on the lattice: candidates are grouped in blocks whose bound
/// `max u − k·dist(x, block)` prunes the search.
pub fn sup_convolution<S: Scalar>(u: &GridField<S>, k: S) -> Result<GridField<S>> {
    if !(k > S::zero()) || !k.is_finite() {
        return Err(Error::Argument(format!("slope k = {k} must be positive")));
    }
    let grid = u.grid();
    let dim = grid.dim();
    let active: Vec<usize> = u.active().collect();
    let pos: Vec<Vec<S>> = (0..grid.len()).map(|i| grid.point(i)).collect();
    let mut blocks: std::collections::BTreeMap<Vec<usize>, Block<S>> = Default::default();
    for &i in &active {
        let key: Vec<usize> = grid.coords(i).iter().map(|c| c / BLOCK).collect();
        let b = blocks.entry(key).or_insert_with(|| Block {
            lo: vec![S::infinity(); dim],
            hi: vec![S::neg_infinity(); dim],
            max: S::neg_infinity(),
            members: Vec::new(),
        });
        for a in 0..dim {
            b.lo[a] = b.lo[a].min(pos[i][a]);
            b.hi[a] = b.hi[a].max(pos[i][a]);
        }
        b.max = b.max.max(u.at(i));
        b.members.push(i);
    }
    let blocks: Vec<Block<S>> = blocks.into_values().collect();
    let vals = u.values();
    let out: Vec<S> = active
        .par_iter()
        .map(|&x| {
            let px = &pos[x];
            let mut best = vals[x];
            let mut bounds: Vec<(S, usize)> = blocks
                .iter()
                .enumerate()
                .map(|(bi, b)| {
                    let d2: S = (0..dim)
                        .map(|a| {
                            let t = if px[a] < b.lo[a] {
                                b.lo[a] - px[a]
                            } else if px[a] > b.hi[a] {
                                px[a] - b.hi[a]
                            } else {
                                S::zero()
                            };
                            t * t
                        })
                        .sum();
                    (b.max - k * d2.sqrt(), bi)
                })
                .filter(|&(bd, _)| bd > best)
                .collect();
            bounds.sort_by(|a, b| {
                b.0.partial_cmp(&a.0)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a.1.cmp(&b.1))
            });
            for (bd, bi) in bounds {
                if bd <= best {
                    break;
                }
                for &y in &blocks[bi].members {
                    let d2: S = px
                        .iter()
                        .zip(&pos[y])
                        .map(|(&a, &b)| (a - b) * (a - b))
                        .sum();
                    let cand = vals[y] - k * d2.sqrt();
                    if cand > best {
                        best = cand;
                    }
                }
            }
            best
        })
        .collect();
    let mut values = vals.to_vec();
    for (&i, v) in active.iter().zip(out) {
        values[i] = v;
    }
    GridField::new(grid.clone(), values)
}
