//! Minimal dense linear algebra over [`Scalar`] rings.
//!
//! Everything here runs on matrices whose entries are jets as happily as on
//! plain floats: pivoting and rank decisions look only at the numeric value
//! slot (see [`Scalar::mag`]), while the arithmetic itself stays in the ring.
//! Dimensions are tiny (ambient dimension plus a few), so the dense
//! full-pivot algorithms below are both adequate and the easiest to make
//! deterministic.

use crate::error::GeomError;
use crate::scalar::{RingScalar, Scalar};

/// Row-major dense matrix.
#[derive(Clone, Debug)]
pub struct Mat<S> {
    rows: usize,
    cols: usize,
    d: Vec<S>,
}

impl<S: RingScalar> Mat<S> {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut d = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                d.push(f(i, j));
            }
        }
        Mat { rows, cols, d }
    }

    pub fn zero_like(sample: &S, rows: usize, cols: usize) -> Self {
        Mat::from_fn(rows, cols, |_, _| sample.zero_like())
    }

    pub fn identity_like(sample: &S, n: usize) -> Self {
        Mat::from_fn(n, n, |i, j| if i == j { sample.one_like() } else { sample.zero_like() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, i: usize, j: usize) -> &S {
        &self.d[i * self.cols + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut S {
        &mut self.d[i * self.cols + j]
    }

    pub fn sample(&self) -> &S {
        &self.d[0]
    }

    pub fn add(&self, rhs: &Mat<S>) -> Mat<S> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Mat::from_fn(self.rows, self.cols, |i, j| self.at(i, j).add(rhs.at(i, j)))
    }

    pub fn sub(&self, rhs: &Mat<S>) -> Mat<S> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Mat::from_fn(self.rows, self.cols, |i, j| self.at(i, j).sub(rhs.at(i, j)))
    }

    pub fn mul(&self, rhs: &Mat<S>) -> Mat<S> {
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        Mat::from_fn(self.rows, rhs.cols, |i, j| {
            let mut acc = self.d[0].zero_like();
            for k in 0..self.cols {
                acc = acc.add(&self.at(i, k).mul(rhs.at(k, j)));
            }
            acc
        })
    }

    pub fn mul_vec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(self.cols, v.len(), "matrix-vector shape mismatch");
        (0..self.rows)
            .map(|i| {
                let mut acc = self.d[0].zero_like();
                for k in 0..self.cols {
                    acc = acc.add(&self.at(i, k).mul(&v[k]));
                }
                acc
            })
            .collect()
    }

    pub fn scale_ring(&self, k: &S) -> Mat<S> {
        Mat::from_fn(self.rows, self.cols, |i, j| self.at(i, j).mul(k))
    }

    pub fn trace(&self) -> S {
        assert_eq!(self.rows, self.cols, "trace of a non-square matrix");
        let mut acc = self.d[0].zero_like();
        for i in 0..self.rows {
            acc = acc.add(self.at(i, i));
        }
        acc
    }
}

impl<S: Scalar> Mat<S> {
    /// Largest `mag` over all entries (for floats, the infinity norm of the
    /// value matrix).
    pub fn max_mag(&self) -> f64 {
        self.d.iter().fold(0.0_f64, |m, s| m.max(s.mag()))
    }
}

/// Relative pivot threshold shared by the elimination routines: a pivot
/// smaller than this times the largest initial entry magnitude is treated as
/// zero.  Matches the degeneracy threshold used for Gram-matrix rank
/// decisions throughout the crate.
pub const PIVOT_REL_TOL: f64 = 1e-10;

/// Full-pivot LU factorization `P A Q = L U` for repeated solves against the
/// same square matrix (frame expansions solve a handful of right-hand sides
/// against one Gram matrix per point).
pub struct Lu<S> {
    n: usize,
    lu: Mat<S>,
    pinv: Vec<S>,
    perm_r: Vec<usize>,
    perm_c: Vec<usize>,
}

impl<S: Scalar> Lu<S> {
    pub fn factor(a: &Mat<S>, context: &'static str) -> Result<Lu<S>, GeomError> {
        assert_eq!(a.rows(), a.cols(), "LU of a non-square matrix");
        let n = a.rows();
        let mut lu = a.clone();
        let scale = lu.max_mag().max(1.0);
        let tol = PIVOT_REL_TOL * scale;
        let mut perm_r: Vec<usize> = (0..n).collect();
        let mut perm_c: Vec<usize> = (0..n).collect();
        let mut pinv = Vec::with_capacity(n);
        for k in 0..n {
            let (mut bi, mut bj, mut best) = (k, k, -1.0);
            for i in k..n {
                for j in k..n {
                    let m = lu.at(i, j).mag();
                    if m > best {
                        best = m;
                        bi = i;
                        bj = j;
                    }
                }
            }
            if best < tol {
                return Err(GeomError::Singular { context, pivot: best });
            }
            if bi != k {
                for j in 0..n {
                    let (a, b) = (k * n + j, bi * n + j);
                    lu.d.swap(a, b);
                }
                perm_r.swap(k, bi);
            }
            if bj != k {
                for i in 0..n {
                    let (a, b) = (i * n + k, i * n + bj);
                    lu.d.swap(a, b);
                }
                perm_c.swap(k, bj);
            }
            let piv_inv = lu.at(k, k).recip()?;
            for i in k + 1..n {
                let f = lu.at(i, k).mul(&piv_inv);
                for j in k + 1..n {
                    let upd = lu.at(i, j).sub(&f.mul(lu.at(k, j)));
                    *lu.at_mut(i, j) = upd;
                }
                *lu.at_mut(i, k) = f;
            }
            pinv.push(piv_inv);
        }
        Ok(Lu { n, lu, pinv, perm_r, perm_c })
    }

    pub fn solve(&self, b: &[S]) -> Vec<S> {
        assert_eq!(b.len(), self.n, "solve shape mismatch");
        let n = self.n;
        // Forward substitution on the row-permuted right-hand side.
        let mut y: Vec<S> = (0..n).map(|i| b[self.perm_r[i]].clone()).collect();
        for i in 1..n {
            let mut acc = y[i].clone();
            for j in 0..i {
                acc = acc.sub(&self.lu.at(i, j).mul(&y[j]));
            }
            y[i] = acc;
        }
        // Back substitution.
        for k in (0..n).rev() {
            let mut acc = y[k].clone();
            for j in k + 1..n {
                acc = acc.sub(&self.lu.at(k, j).mul(&y[j]));
            }
            y[k] = acc.mul(&self.pinv[k]);
        }
        // Undo the column permutation.
        let mut x: Vec<S> = vec![b[0].zero_like(); n];
        for k in 0..n {
            x[self.perm_c[k]] = y[k].clone();
        }
        x
    }
}

/// Null-space basis of a rectangular matrix, full pivoting, rank decided by
/// [`PIVOT_REL_TOL`] against the largest initial entry.  Returned vectors
/// have one free coordinate pinned to one and are otherwise unnormalized.
pub fn null_space<S: Scalar>(a: &Mat<S>) -> Result<Vec<Vec<S>>, GeomError> {
    let (r, c) = (a.rows(), a.cols());
    let mut u = a.clone();
    let scale = u.max_mag().max(1.0);
    let tol = PIVOT_REL_TOL * scale;
    let mut perm_c: Vec<usize> = (0..c).collect();
    let mut pinv: Vec<S> = Vec::new();
    let mut rank = 0usize;
    for k in 0..r.min(c) {
        let (mut bi, mut bj, mut best) = (k, k, -1.0);
        for i in k..r {
            for j in k..c {
                let m = u.at(i, j).mag();
                if m > best {
                    best = m;
                    bi = i;
                    bj = j;
                }
            }
        }
        if best < tol {
            break;
        }
        if bi != k {
            for j in 0..c {
                let (x, y) = (k * c + j, bi * c + j);
                u.d.swap(x, y);
            }
        }
        if bj != k {
            for i in 0..r {
                let (x, y) = (i * c + k, i * c + bj);
                u.d.swap(x, y);
            }
            perm_c.swap(k, bj);
        }
        let piv_inv = u.at(k, k).recip()?;
        for i in k + 1..r {
            let f = u.at(i, k).mul(&piv_inv);
            for j in k..c {
                let upd = u.at(i, j).sub(&f.mul(u.at(k, j)));
                *u.at_mut(i, j) = upd;
            }
        }
        pinv.push(piv_inv);
        rank += 1;
    }
    let zero = a.sample().zero_like();
    let one = a.sample().one_like();
    let mut basis = Vec::with_capacity(c - rank);
    for free in rank..c {
        let mut y: Vec<S> = vec![zero.clone(); c];
        y[free] = one.clone();
        for k in (0..rank).rev() {
            let mut acc = zero.clone();
            for j in k + 1..c {
                acc = acc.add(&u.at(k, j).mul(&y[j]));
            }
            y[k] = acc.neg().mul(&pinv[k]);
        }
        let mut x = vec![zero.clone(); c];
        for j in 0..c {
            x[perm_c[j]] = y[j].clone();
        }
        basis.push(x);
    }
    Ok(basis)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: usize, cols: usize, v: &[f64]) -> Mat<f64> {
        assert_eq!(v.len(), rows * cols);
        Mat::from_fn(rows, cols, |i, j| v[i * cols + j])
    }

    #[test]
    fn lu_solves_small_system() {
        let a = m(3, 3, &[0.0, 2.0, 1.0, 1.0, -1.0, 0.5, 3.0, 0.0, -2.0]);
        let lu = Lu::factor(&a, "test").unwrap();
        let x = lu.solve(&[3.0, 1.5, -1.0]);
        let b = a.mul_vec(&x);
        for (bi, want) in b.iter().zip([3.0, 1.5, -1.0]) {
            assert!((bi - want).abs() < 1e-12);
        }
    }

    #[test]
    fn lu_rejects_singular() {
        let a = m(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(
            Lu::factor(&a, "test"),
            Err(GeomError::Singular { .. })
        ));
    }

    #[test]
    fn null_space_of_rank_one() {
        // Rows all proportional: rank 1 in R^3, null space dimension 2.
        let a = m(3, 3, &[1.0, 2.0, -1.0, 2.0, 4.0, -2.0, -3.0, -6.0, 3.0]);
        let ns = null_space(&a).unwrap();
        assert_eq!(ns.len(), 2);
        for v in &ns {
            let r = a.mul_vec(v);
            assert!(r.iter().all(|x| x.abs() < 1e-10));
        }
    }

    #[test]
    fn null_space_trivial_for_invertible() {
        let a = m(2, 2, &[2.0, 1.0, 1.0, 1.0]);
        assert!(null_space(&a).unwrap().is_empty());
    }
}
