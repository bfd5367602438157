//! Rectangular lattices over domains in `ℝ²ⁿ`, masks, fields, discrete jets
//! and field files.

mod edt;
mod io;
mod jets;

pub use edt::{distance_to_exterior, distance_to_set};
pub use io::{
    read_complex_structure, read_equivalence, read_field, read_mask, write_field, write_mask,
};
pub use jets::{
    check_strict_pseudoconvex, discrete_jet, is_field_subharmonic, rounding_floor, strict_margin,
    subharmonic_on, SubharmonicReport,
};

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[repr(u8)]
pub enum PointKind {
    Exterior = 0,
    Boundary = 1,
    Interior = 2,
}

impl PointKind {
    pub fn label(self) -> u8 {
        self as u8
    }

    pub fn from_label(v: u8) -> Option<Self> {
        match v {
            0 => Some(PointKind::Exterior),
            1 => Some(PointKind::Boundary),
            2 => Some(PointKind::Interior),
            _ => None,
        }
    }
}

/// A lattice `origin + h·ℤ^{2n}` restricted to `dims`, with a point mask.
/// Linear indices are row-major with the last axis fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<S> {
    n: usize,
    dims: Vec<usize>,
    h: S,
    origin: Vec<S>,
    mask: Vec<PointKind>,
    strides: Vec<usize>,
}

fn strides_for(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

/// All offsets in `{−1, 0, 1}^dim`, first axis slowest.
pub fn king_offsets(dim: usize) -> Vec<Vec<isize>> {
    let total = 3usize.pow(dim as u32);
    (0..total)
        .map(|mut t| {
            let mut o = vec![0isize; dim];
            for i in (0..dim).rev() {
                o[i] = (t % 3) as isize - 1;
                t /= 3;
            }
            o
        })
        .collect()
}

impl<S: Scalar> Grid<S> {
    /// Builds a grid from an explicit mask and checks the mask invariants:
    /// every Interior point has all lattice neighbours (axis and diagonal)
    /// inside the lattice and in Interior ∪ Boundary, and every Boundary point
    /// is adjacent to an Interior point.
    pub fn new(
        n: usize,
        dims: Vec<usize>,
        h: S,
        origin: Vec<S>,
        mask: Vec<PointKind>,
    ) -> Result<Self> {
        let grid = Self::unchecked(n, dims, h, origin, mask)?;
        grid.validate_mask()?;
        Ok(grid)
    }

    fn unchecked(
        n: usize,
        dims: Vec<usize>,
        h: S,
        origin: Vec<S>,
        mask: Vec<PointKind>,
    ) -> Result<Self> {
        if n != 1 && n != 2 {
            return Err(Error::Dimension(format!(
                "complex dimension {n}; only 1 and 2 are supported"
            )));
        }
        if dims.len() != 2 * n || origin.len() != 2 * n {
            return Err(Error::Dimension(format!(
                "n = {n} needs {} extents and origin coordinates, got {} and {}",
                2 * n,
                dims.len(),
                origin.len()
            )));
        }
        if !(h > S::zero()) || !h.is_finite() {
            return Err(Error::Argument(format!(
                "spacing h = {h} must be positive and finite"
            )));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::Argument("origin must be finite".into()));
        }
        let total: usize = dims.iter().product();
        if dims.iter().any(|&d| d == 0) || mask.len() != total {
            return Err(Error::Dimension(format!(
                "mask has {} entries for dims {dims:?}",
                mask.len()
            )));
        }
        let strides = strides_for(&dims);
        Ok(Grid {
            n,
            dims,
            h,
            origin,
            mask,
            strides,
        })
    }

    fn validate_mask(&self) -> Result<()> {
        let offs = king_offsets(self.dim());
        for idx in 0..self.len() {
            match self.mask[idx] {
                PointKind::Interior => {
                    for o in &offs {
                        match self.offset(idx, o) {
                            Some(j) if self.mask[j] != PointKind::Exterior => {}
                            _ => {
                                return Err(Error::Inconsistent(format!(
                                    "interior point {:?} has a neighbour at offset {o:?} outside Interior ∪ Boundary",
                                    self.coords(idx)
                                )))
                            }
                        }
                    }
                }
                PointKind::Boundary => {
                    let adjacent = offs
                        .iter()
                        .any(|o| matches!(self.offset(idx, o), Some(j) if self.mask[j] == PointKind::Interior));
                    if !adjacent {
                        return Err(Error::Inconsistent(format!(
                            "boundary point {:?} is not adjacent to Interior",
                            self.coords(idx)
                        )));
                    }
                }
                PointKind::Exterior => {}
            }
        }
        if !self.mask.contains(&PointKind::Interior) {
            return Err(Error::Resolution("mask has no interior points".into()));
        }
        Ok(())
    }

    /// Lattice of extents `dims` with Interior the points of `inside` whose
    /// neighbours all lie in `inside`, and Boundary the remaining neighbours
    /// of Interior.
    pub fn from_inside(
        n: usize,
        dims: Vec<usize>,
        h: S,
        origin: Vec<S>,
        inside: &[bool],
    ) -> Result<Self> {
        let total: usize = dims.iter().product();
        let mut grid = Self::unchecked(n, dims, h, origin, vec![PointKind::Exterior; total])?;
        if inside.len() != total {
            return Err(Error::Dimension(format!(
                "inside set has {} entries for {total} lattice points",
                inside.len()
            )));
        }
        let offs = king_offsets(grid.dim());
        let interior: Vec<bool> = (0..total)
            .map(|idx| {
                inside[idx]
                    && offs
                        .iter()
                        .all(|o| matches!(grid.offset(idx, o), Some(j) if inside[j]))
            })
            .collect();
        for idx in 0..total {
            if interior[idx] {
                grid.mask[idx] = PointKind::Interior;
                for o in &offs {
                    let j = grid.offset(idx, o).expect("interior neighbour");
                    if !interior[j] {
                        grid.mask[j] = PointKind::Boundary;
                    }
                }
            }
        }
        if !grid.mask.contains(&PointKind::Interior) {
            return Err(Error::Resolution(
                "domain has no interior points at this spacing".into(),
            ));
        }
        Ok(grid)
    }

    /// Lattice mask of `{ψ < 0}` with a one-cell collar as Boundary.
    pub fn from_defining_function(
        n: usize,
        dims: Vec<usize>,
        h: S,
        origin: Vec<S>,
        psi: impl Fn(&[S]) -> S,
    ) -> Result<Self> {
        let total: usize = dims.iter().product();
        let probe = Self::unchecked(
            n,
            dims.clone(),
            h,
            origin.clone(),
            vec![PointKind::Exterior; total],
        )?;
        let inside: Vec<bool> = (0..total)
            .map(|i| psi(&probe.point(i)) < S::zero())
            .collect();
        Self::from_inside(n, dims, h, origin, &inside)
    }

    /// Same lattice, Interior replaced by `interior` (which must lie in the
    /// current Interior); Boundary becomes the neighbours of the new Interior.
    pub fn sub_domain(&self, interior: &[bool]) -> Result<Self> {
        if interior.len() != self.len() {
            return Err(Error::Dimension("sub-domain selection length".into()));
        }
        let mut mask = vec![PointKind::Exterior; self.len()];
        let offs = king_offsets(self.dim());
        for idx in 0..self.len() {
            if !interior[idx] {
                continue;
            }
            if self.mask[idx] != PointKind::Interior {
                return Err(Error::Domain(format!(
                    "sub-domain point {:?} is not interior to the parent grid",
                    self.coords(idx)
                )));
            }
            mask[idx] = PointKind::Interior;
        }
        for idx in 0..self.len() {
            if interior[idx] {
                for o in &offs {
                    let j = self.offset(idx, o).expect("interior neighbour");
                    if !interior[j] {
                        mask[j] = PointKind::Boundary;
                    }
                }
            }
        }
        if !mask.contains(&PointKind::Interior) {
            return Err(Error::Resolution("empty sub-domain".into()));
        }
        Ok(Grid {
            mask,
            ..self.clone()
        })
    }

    /// Complex dimension.
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Real dimension `2n`.
    #[inline]
    pub fn dim(&self) -> usize {
        2 * self.n
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    #[inline]
    pub fn spacing(&self) -> S {
        self.h
    }

    pub fn origin(&self) -> &[S] {
        &self.origin
    }

    pub fn mask(&self) -> &[PointKind] {
        &self.mask
    }

    #[inline]
    pub fn kind(&self, idx: usize) -> PointKind {
        self.mask[idx]
    }

    pub fn coords(&self, mut idx: usize) -> Vec<usize> {
        let mut c = vec![0; self.dims.len()];
        for (i, &s) in self.strides.iter().enumerate() {
            c[i] = idx / s;
            idx %= s;
        }
        c
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        coords.iter().zip(&self.strides).map(|(c, s)| c * s).sum()
    }

    /// Physical position of a lattice point.
    pub fn point(&self, idx: usize) -> Vec<S> {
        self.coords(idx)
            .iter()
            .zip(&self.origin)
            .map(|(&c, &o)| o + S::from_usize_lossy(c) * self.h)
            .collect()
    }

    /// Neighbour `step` cells along `axis`, if inside the lattice.
    pub fn axis_neighbor(&self, idx: usize, axis: usize, step: isize) -> Option<usize> {
        let c = (idx / self.strides[axis]) % self.dims[axis];
        let t = c as isize + step;
        if t < 0 || t >= self.dims[axis] as isize {
            None
        } else {
            Some((idx as isize + step * self.strides[axis] as isize) as usize)
        }
    }

    /// Point at a lattice offset, if inside the lattice.
    pub fn offset(&self, idx: usize, off: &[isize]) -> Option<usize> {
        let mut j = idx as isize;
        for (axis, &o) in off.iter().enumerate() {
            if o == 0 {
                continue;
            }
            let c = (idx / self.strides[axis]) % self.dims[axis];
            let t = c as isize + o;
            if t < 0 || t >= self.dims[axis] as isize {
                return None;
            }
            j += o * self.strides[axis] as isize;
        }
        Some(j as usize)
    }

    /// Linear index shift of a lattice offset (valid where the offset point exists).
    pub fn linear_offset(&self, off: &[isize]) -> isize {
        off.iter()
            .zip(&self.strides)
            .map(|(&o, &s)| o * s as isize)
            .sum()
    }

    pub fn indices_of(&self, kind: PointKind) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.mask[i] == kind).collect()
    }

    pub fn count(&self, kind: PointKind) -> usize {
        self.mask.iter().filter(|&&k| k == kind).count()
    }

    /// Same lattice, header and mask.
    pub fn same_layout(&self, other: &Self) -> bool {
        self == other
    }

    /// Same lattice and header (masks may differ).
    pub fn same_lattice(&self, other: &Self) -> bool {
        self.n == other.n
            && self.dims == other.dims
            && self.h == other.h
            && self.origin == other.origin
    }

    /// Largest number of Interior points on a lattice line parallel to `axis`.
    pub fn max_interior_run(&self, axis: usize) -> usize {
        let mut counts = std::collections::HashMap::new();
        for idx in 0..self.len() {
            if self.mask[idx] == PointKind::Interior {
                let mut c = self.coords(idx);
                c[axis] = 0;
                *counts.entry(c).or_insert(0usize) += 1;
            }
        }
        counts.values().copied().max().unwrap_or(0)
    }
}

/// Ball `|x| < radius` in `ℂⁿ ≅ ℝ²ⁿ` centred at the origin, lattice of
/// `2⌈radius/h⌉ + 1` points per axis symmetric about 0.
pub fn build_disc_domain<S: Scalar>(n: usize, radius: S, h: S) -> Result<Grid<S>> {
    if n != 1 && n != 2 {
        return Err(Error::Dimension(format!(
            "complex dimension {n}; only 1 and 2 are supported"
        )));
    }
    if !(h > S::zero()) || !(radius > S::lit(2.0) * h) {
        return Err(Error::Resolution(format!(
            "radius {radius} must exceed 2h = {}",
            S::lit(2.0) * h
        )));
    }
    let half = (radius / h - S::lit(1e-9)).ceil().to_usize().unwrap_or(0);
    let dims = vec![2 * half + 1; 2 * n];
    let origin = vec![-(S::from_usize_lossy(half) * h); 2 * n];
    let r2 = radius * radius;
    let grid = Grid::from_defining_function(n, dims, h, origin, |x| {
        x.iter().map(|&v| v * v).sum::<S>() - r2
    })
    .map_err(|e| match e {
        Error::Resolution(_) => {
            Error::Resolution(format!("radius {radius} at h = {h} leaves no interior"))
        }
        other => other,
    })?;
    for axis in 0..grid.dim() {
        let run = grid.max_interior_run(axis);
        if run < 5 {
            return Err(Error::Resolution(format!(
                "only {run} interior points along axis {axis} (radius {radius}, h = {h}); at least 5 needed"
            )));
        }
    }
    Ok(grid)
}

/// Samples on every lattice point of a grid; values off Interior ∪ Boundary
/// are carried but ignored by all operations.
#[derive(Clone, Debug)]
pub struct GridField<S> {
    grid: Arc<Grid<S>>,
    values: Vec<S>,
}

impl<S: Scalar> GridField<S> {
    pub fn new(grid: Arc<Grid<S>>, values: Vec<S>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Dimension(format!(
                "{} values for a lattice of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(GridField { grid, values })
    }

    pub fn from_fn(grid: Arc<Grid<S>>, f: impl Fn(&[S]) -> S) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.point(i))).collect();
        GridField { grid, values }
    }

    pub fn constant(grid: Arc<Grid<S>>, c: S) -> Self {
        let values = vec![c; grid.len()];
        GridField { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> &Arc<Grid<S>> {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[S] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [S] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<S> {
        self.values
    }

    #[inline]
    pub fn at(&self, idx: usize) -> S {
        self.values[idx]
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Self {
        GridField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(S, S) -> S) -> Result<Self> {
        self.check_lattice(other)?;
        Ok(GridField {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Same values on another grid over the same lattice.
    pub fn with_grid(&self, grid: Arc<Grid<S>>) -> Result<Self> {
        if !grid.same_lattice(&self.grid) {
            return Err(Error::Dimension("grids do not share a lattice".into()));
        }
        Ok(GridField {
            grid,
            values: self.values.clone(),
        })
    }

    pub fn check_lattice(&self, other: &Self) -> Result<()> {
        if self.grid.same_lattice(&other.grid) {
            Ok(())
        } else {
            Err(Error::Dimension("fields live on different lattices".into()))
        }
    }

    /// Indices of Interior ∪ Boundary points.
    pub fn active(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.grid.len()).filter(move |&i| self.grid.kind(i) != PointKind::Exterior)
    }

    /// Finite on Interior ∪ Boundary.
    pub fn check_finite(&self) -> Result<()> {
        for i in self.active() {
            if !self.values[i].is_finite() {
                return Err(Error::Inconsistent(format!(
                    "non-finite value at lattice point {:?}",
                    self.grid.coords(i)
                )));
            }
        }
        Ok(())
    }

    /// `max |a − b|` over points of the given kinds.
    pub fn max_abs_diff_on(&self, other: &Self, kinds: &[PointKind]) -> S {
        let mut m = S::zero();
        for i in 0..self.grid.len() {
            if kinds.contains(&self.grid.kind(i)) {
                m = m.max((self.values[i] - other.values[i]).abs());
            }
        }
        m
    }

    /// `max (a − b)` over points of the given kinds (−∞ if none).
    pub fn max_excess_on(&self, other: &Self, kinds: &[PointKind]) -> S {
        let mut m = S::neg_infinity();
        for i in 0..self.grid.len() {
            if kinds.contains(&self.grid.kind(i)) {
                m = m.max(self.values[i] - other.values[i]);
            }
        }
        m
    }

    pub fn max_on(&self, kinds: &[PointKind]) -> S {
        let mut m = S::neg_infinity();
        for i in 0..self.grid.len() {
            if kinds.contains(&self.grid.kind(i)) {
                m = m.max(self.values[i]);
            }
        }
        m
    }

    pub fn min_on(&self, kinds: &[PointKind]) -> S {
        let mut m = S::infinity();
        for i in 0..self.grid.len() {
            if kinds.contains(&self.grid.kind(i)) {
                m = m.min(self.values[i]);
            }
        }
        m
    }
}

pub const ACTIVE: [PointKind; 2] = [PointKind::Interior, PointKind::Boundary];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disc_quarter_spacing() {
        let g = build_disc_domain(1, 1.0, 0.25).unwrap();
        assert_eq!(g.dims(), &[9, 9]);
        let centre = g.index(&[4, 4]);
        assert_eq!(g.kind(centre), PointKind::Interior);
        assert_eq!(g.point(centre), vec![0.0, 0.0]);
    }

    #[test]
    fn disc_half_spacing_is_too_coarse() {
        assert!(matches!(
            build_disc_domain(1, 1.0, 0.5),
            Err(Error::Resolution(_))
        ));
        assert!(matches!(
            build_disc_domain(1, 0.4, 0.25),
            Err(Error::Resolution(_))
        ));
    }

    #[test]
    fn mask_symmetry() {
        for (n, h) in [(1, 1.0 / 16.0), (1, 0.1), (2, 0.25)] {
            let g = build_disc_domain(n, 1.0, h).unwrap();
            for idx in 0..g.len() {
                let mirrored: Vec<usize> = g
                    .coords(idx)
                    .iter()
                    .zip(g.dims())
                    .map(|(&c, &d)| d - 1 - c)
                    .collect();
                assert_eq!(g.kind(idx), g.kind(g.index(&mirrored)));
            }
        }
    }

    #[test]
    fn boundary_is_neighbour_collar() {
        let g = build_disc_domain(1, 1.0, 0.125).unwrap();
        let offs = king_offsets(2);
        for idx in g.indices_of(PointKind::Boundary) {
            assert!(offs
                .iter()
                .any(|o| g.offset(idx, o).map(|j| g.kind(j)) == Some(PointKind::Interior)));
        }
        assert!(Grid::new(
            1,
            g.dims().to_vec(),
            0.125,
            g.origin().to_vec(),
            g.mask().to_vec()
        )
        .is_ok());
    }

    #[test]
    fn bad_mask_rejected() {
        let mut mask = vec![PointKind::Exterior; 25];
        mask[12] = PointKind::Interior;
        assert!(matches!(
            Grid::new(1, vec![5, 5], 0.1, vec![0.0, 0.0], mask),
            Err(Error::Inconsistent(_))
        ));
    }

    #[test]
    fn offsets_and_neighbours() {
        let g = build_disc_domain(2, 1.0, 0.25).unwrap();
        let idx = g.index(&[4, 4, 4, 4]);
        assert_eq!(g.axis_neighbor(idx, 3, 1), Some(g.index(&[4, 4, 4, 5])));
        assert_eq!(g.offset(idx, &[-1, 0, 1, 0]), Some(g.index(&[3, 4, 5, 4])));
        assert_eq!(g.axis_neighbor(g.index(&[0, 0, 0, 0]), 0, -1), None);
        assert_eq!(king_offsets(2).len(), 9);
    }

    #[test]
    fn sub_domain_collar() {
        let g = build_disc_domain(1, 1.0, 0.125).unwrap();
        let keep: Vec<bool> = (0..g.len())
            .map(|i| {
                g.kind(i) == PointKind::Interior
                    && g.point(i).iter().map(|v| v * v).sum::<f64>() < 0.25
            })
            .collect();
        let s = g.sub_domain(&keep).unwrap();
        for i in 0..g.len() {
            if s.kind(i) != PointKind::Exterior {
                assert_ne!(g.kind(i), PointKind::Exterior);
            }
        }
    }
}
