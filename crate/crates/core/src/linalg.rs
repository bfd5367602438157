//! Small dense matrices (dimension at most a handful) used for pointwise jet
//! algebra. Row-major storage.

use std::ops::{Index, IndexMut};

use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct Mat<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Mat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn from_diag(d: &[S]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds a matrix from row-major data. Panics if the length is wrong.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<S>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data length");
        Mat { rows, cols, data }
    }

    pub fn from_rows(rows: &[&[S]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Mat {
            rows: r,
            cols: c,
            data,
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul shape");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == S::zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] = out[(i, j)] + a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(self.cols, v.len(), "matvec shape");
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    /// `selfᵀ v`.
    pub fn tr_matvec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(self.rows, v.len(), "tr_matvec shape");
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)] * v[i]).sum())
            .collect()
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, s: S) -> Self {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&a| a * s).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        self.scale(-S::one())
    }

    /// `½(M + Mᵀ)`.
    pub fn symmetrized(&self) -> Self {
        assert!(self.is_square());
        let half = S::lit(0.5);
        let mut out = self.clone();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let v = (self[(i, j)] + self[(j, i)]) * half;
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        out
    }

    /// `self · m · selfᵀ`.
    pub fn congruence(&self, m: &Self) -> Self {
        self.matmul(m).matmul(&self.transpose())
    }

    pub fn max_abs(&self) -> S {
        self.data.iter().fold(S::zero(), |acc, &v| acc.max(v.abs()))
    }

    pub fn max_abs_diff(&self, rhs: &Self) -> S {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        self.data
            .iter()
            .zip(&rhs.data)
            .fold(S::zero(), |acc, (&a, &b)| acc.max((a - b).abs()))
    }

    pub fn trace(&self) -> S {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Eigenvalues of a symmetric matrix, ascending, by cyclic Jacobi rotations.
    /// Only the upper triangle is read.
    pub fn sym_eigenvalues(&self) -> Vec<S> {
        assert!(self.is_square(), "eigenvalues of a non-square matrix");
        let n = self.rows;
        let mut a = self.symmetrized();
        let two = S::lit(2.0);
        for _sweep in 0..64 {
            let mut off = S::zero();
            for i in 0..n {
                for j in (i + 1)..n {
                    off = off + a[(i, j)] * a[(i, j)];
                }
            }
            let scale = a.max_abs();
            if off.sqrt() <= S::epsilon() * S::lit(1e-2) * scale || off == S::zero() {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    if apq == S::zero() {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (two * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + S::one()).sqrt());
                    let c = S::one() / (t * t + S::one()).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut ev: Vec<S> = (0..n).map(|i| a[(i, i)]).collect();
        ev.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
        ev
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting; `None` when
    /// a pivot falls below `n·ε·‖M‖`.
    pub fn inverse(&self) -> Option<Self> {
        assert!(self.is_square(), "inverse of a non-square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        let thresh =
            S::from_usize_lossy(n) * S::epsilon() * a.max_abs().max(S::min_positive_value());
        for col in 0..n {
            let (piv, pval) =
                (col..n)
                    .map(|r| (r, a[(r, col)].abs()))
                    .fold(
                        (col, S::zero()),
                        |best, cur| if cur.1 > best.1 { cur } else { best },
                    );
            if pval <= thresh {
                return None;
            }
            if piv != col {
                for j in 0..n {
                    a.data.swap(piv * n + j, col * n + j);
                    inv.data.swap(piv * n + j, col * n + j);
                }
            }
            let d = a[(col, col)];
            for j in 0..n {
                a[(col, j)] = a[(col, j)] / d;
                inv[(col, j)] = inv[(col, j)] / d;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[(r, col)];
                if f == S::zero() {
                    continue;
                }
                for j in 0..n {
                    a[(r, j)] = a[(r, j)] - f * a[(col, j)];
                    inv[(r, j)] = inv[(r, j)] - f * inv[(col, j)];
                }
            }
        }
        Some(inv)
    }

    /// Singular values, ascending.
    pub fn singular_values(&self) -> Vec<S> {
        self.transpose()
            .matmul(self)
            .sym_eigenvalues()
            .into_iter()
            .map(|l| l.max(S::zero()).sqrt())
            .collect()
    }

    /// Spectral (operator 2-) norm.
    pub fn spectral_norm(&self) -> S {
        self.singular_values()
            .last()
            .copied()
            .unwrap_or_else(S::zero)
    }

    /// 2-norm condition number; infinite for singular input.
    pub fn condition_number(&self) -> S {
        let sv = self.singular_values();
        match (sv.first(), sv.last()) {
            (Some(&lo), Some(&hi)) if lo > S::zero() => hi / lo,
            _ => S::infinity(),
        }
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(S) -> T) -> Mat<T> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

impl<S> Index<(usize, usize)> for Mat<S> {
    type Output = S;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S> IndexMut<(usize, usize)> for Mat<S> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn jacobi_eigenvalues_of_known_matrix() {
        let m = Mat::from_rows(&[&[2.0, 1.0, 0.0], &[1.0, 2.0, 0.0], &[0.0, 0.0, -3.0]]);
        let ev = m.sym_eigenvalues();
        assert_relative_eq!(ev[0], -3.0, epsilon = 1e-14);
        assert_relative_eq!(ev[1], 1.0, epsilon = 1e-14);
        assert_relative_eq!(ev[2], 3.0, epsilon = 1e-14);
    }

    #[test]
    fn inverse_round_trip_and_singular() {
        let m = Mat::from_rows(&[&[0.0, 2.0], &[1.0, 3.0]]);
        let inv = m.inverse().unwrap();
        let id = m.matmul(&inv);
        assert!(id.max_abs_diff(&Mat::identity(2)) < 1e-15);
        let s = Mat::from_rows(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert!(s.inverse().is_none());
        assert!(s.condition_number() > 1e15);
    }

    #[test]
    fn works_in_single_precision() {
        let m: Mat<f32> = Mat::from_rows(&[&[4.0, 0.0], &[0.0, 1.0]]);
        assert_eq!(m.sym_eigenvalues(), vec![1.0, 4.0]);
        assert!((m.condition_number() - 4.0).abs() < 1e-5);
    }
}
