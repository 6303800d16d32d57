//! Small dense linear algebra over `f64`.
//!
//! Charts in this crate are low-dimensional (n = 2 or 3 in every shipped
//! example), so a compact row-major matrix with Cholesky, partially pivoted
//! LU, and a cyclic Jacobi eigensolver covers everything the geometry needs.
//! Symmetric spectra are always obtained through Jacobi rotations (or the
//! Cholesky-reduced generalized problem), never through nonsymmetric
//! iteration, so computed eigenvalues of self-adjoint operators stay real.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::real;

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diag(entries: &[f64]) -> Self {
        let mut m = Mat::zeros(entries.len(), entries.len());
        for (i, &v) in entries.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
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

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mat_mul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "dimension mismatch in mat_mul");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "dimension mismatch in mul_vec");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn scale(&self, s: f64) -> Mat {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= s;
        }
        out
    }

    pub fn add(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (v, w) in out.data.iter_mut().zip(&other.data) {
            *v += *w;
        }
        out
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (v, w) in out.data.iter_mut().zip(&other.data) {
            *v -= *w;
        }
        out
    }

    /// Replaces the matrix by its symmetric part `(M + M^T)/2`.
    pub fn symmetrize(&mut self) {
        assert!(self.is_square());
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let s = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = s;
                self[(j, i)] = s;
            }
        }
    }

    /// Largest absolute deviation from symmetry, with its index pair.
    pub fn symmetry_defect(&self) -> (f64, usize, usize) {
        let mut worst = (0.0f64, 0, 0);
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let d = real::abs(self[(i, j)] - self[(j, i)]);
                if d > worst.0 {
                    worst = (d, i, j);
                }
            }
        }
        worst
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn norm_inf(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(real::abs(*v)))
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl core::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Lower Cholesky factor of a symmetric positive-definite matrix.
///
/// On failure returns the offending pivot so callers can report how far from
/// positive definite the input was.
pub fn cholesky(m: &Mat) -> core::result::Result<Mat, f64> {
    assert!(m.is_square());
    let n = m.rows();
    let mut l = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return Err(s);
                }
                l[(i, i)] = real::sqrt(s);
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    Ok(l)
}

/// Solves `L y = b` for lower-triangular `L`.
pub fn forward_substitute(l: &Mat, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            let t = l[(i, k)] * y[k];
            y[i] -= t;
        }
        y[i] /= l[(i, i)];
    }
    y
}

/// Solves `L^T x = y` for lower-triangular `L`.
pub fn back_substitute_transposed(l: &Mat, y: &[f64]) -> Vec<f64> {
    let n = l.rows();
    let mut x = y.to_vec();
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            let t = l[(k, i)] * x[k];
            x[i] -= t;
        }
        x[i] /= l[(i, i)];
    }
    x
}

/// Inverse and determinant of an SPD matrix from its Cholesky factor.
pub fn spd_inverse_det(m: &Mat) -> core::result::Result<(Mat, f64), f64> {
    let l = cholesky(m)?;
    let n = m.rows();
    let mut det = 1.0;
    for i in 0..n {
        det *= l[(i, i)] * l[(i, i)];
    }
    let mut inv = Mat::zeros(n, n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let y = forward_substitute(&l, &e);
        let x = back_substitute_transposed(&l, &y);
        for i in 0..n {
            inv[(i, j)] = x[i];
        }
    }
    inv.symmetrize();
    Ok((inv, det))
}

/// LU decomposition with partial pivoting; returns (LU, perm, sign).
fn lu_decompose(m: &Mat) -> Option<(Mat, Vec<usize>, f64)> {
    assert!(m.is_square());
    let n = m.rows();
    let mut lu = m.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_val = real::abs(lu[(col, col)]);
        for r in (col + 1)..n {
            let v = real::abs(lu[(r, col)]);
            if v > pivot_val {
                pivot_val = v;
                pivot_row = r;
            }
        }
        if pivot_val == 0.0 || !pivot_val.is_finite() {
            return None;
        }
        if pivot_row != col {
            for j in 0..n {
                let tmp = lu[(col, j)];
                lu[(col, j)] = lu[(pivot_row, j)];
                lu[(pivot_row, j)] = tmp;
            }
            perm.swap(col, pivot_row);
            sign = -sign;
        }
        let d = lu[(col, col)];
        for r in (col + 1)..n {
            let f = lu[(r, col)] / d;
            lu[(r, col)] = f;
            for j in (col + 1)..n {
                let t = f * lu[(col, j)];
                lu[(r, j)] -= t;
            }
        }
    }
    Some((lu, perm, sign))
}

/// General (not necessarily symmetric) inverse via pivoted LU.
pub fn lu_inverse(m: &Mat) -> Option<Mat> {
    let n = m.rows();
    let (lu, perm, _) = lu_decompose(m)?;
    let mut inv = Mat::zeros(n, n);
    for col in 0..n {
        let mut b = vec![0.0; n];
        for (i, &pi) in perm.iter().enumerate() {
            b[i] = if pi == col { 1.0 } else { 0.0 };
        }
        for i in 0..n {
            for k in 0..i {
                let t = lu[(i, k)] * b[k];
                b[i] -= t;
            }
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let t = lu[(i, k)] * b[k];
                b[i] -= t;
            }
            b[i] /= lu[(i, i)];
        }
        for i in 0..n {
            inv[(i, col)] = b[i];
        }
    }
    Some(inv)
}

pub fn lu_det(m: &Mat) -> f64 {
    match lu_decompose(m) {
        Some((lu, _, sign)) => {
            let mut det = sign;
            for i in 0..m.rows() {
                det *= lu[(i, i)];
            }
            det
        }
        None => 0.0,
    }
}

/// Integer power of a square matrix; negative powers go through `lu_inverse`.
pub fn mat_powi(m: &Mat, power: i32) -> Option<Mat> {
    let n = m.rows();
    let base = if power < 0 { lu_inverse(m)? } else { m.clone() };
    let mut out = Mat::identity(n);
    for _ in 0..power.unsigned_abs() {
        out = out.mat_mul(&base);
    }
    Some(out)
}

const JACOBI_MAX_SWEEPS: usize = 64;

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn sym_eigenvalues(m: &Mat) -> Result<Vec<f64>> {
    assert!(m.is_square());
    let n = m.rows();
    if n == 1 {
        return Ok(vec![m[(0, 0)]]);
    }
    let mut a = m.clone();
    a.symmetrize();
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        let scale = a.norm_inf().max(1e-300);
        if real::sqrt(off) <= 1e-15 * scale * (n as f64) {
            let mut eigs: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
            eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
            return Ok(eigs);
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if real::abs(apq) <= 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + real::sqrt(1.0 + theta * theta))
                } else {
                    -1.0 / (-theta + real::sqrt(1.0 + theta * theta))
                };
                let c = 1.0 / real::sqrt(1.0 + t * t);
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
    Err(Error::EigenFailure(JACOBI_MAX_SWEEPS))
}

/// Eigenvalues of the symmetric generalized problem `a v = lambda b v`
/// with `b` positive definite, via the Cholesky reduction
/// `L^{-1} a L^{-T}` where `b = L L^T`.
pub fn generalized_sym_eigenvalues(a: &Mat, b: &Mat) -> Result<Vec<f64>> {
    let n = a.rows();
    let l = cholesky(b).map_err(|pivot| Error::NotPositiveDefinite {
        point: Vec::new(),
        pivot,
    })?;
    // C = L^{-1} a L^{-T}, built column by column.
    let mut c = Mat::zeros(n, n);
    for j in 0..n {
        let col: Vec<f64> = (0..n).map(|i| a[(i, j)]).collect();
        let y = forward_substitute(&l, &col);
        for i in 0..n {
            c[(i, j)] = y[i];
        }
    }
    let mut ct = c.transpose();
    for j in 0..n {
        let col: Vec<f64> = (0..n).map(|i| ct[(i, j)]).collect();
        let y = forward_substitute(&l, &col);
        for i in 0..n {
            ct[(i, j)] = y[i];
        }
    }
    sym_eigenvalues(&ct)
}

/// Singular values of a rectangular matrix, descending, via the Gram matrix
/// of its smaller side.
pub fn singular_values(m: &Mat) -> Result<Vec<f64>> {
    let gram = if m.rows() <= m.cols() {
        m.mat_mul(&m.transpose())
    } else {
        m.transpose().mat_mul(m)
    };
    let mut eigs = sym_eigenvalues(&gram)?;
    eigs.reverse();
    Ok(eigs.into_iter().map(|e| real::sqrt(e.max(0.0))).collect())
}

/// Rank by singular-value threshold `rank_tol * sigma_max`.
pub fn numeric_rank(m: &Mat, rank_tol: f64) -> Result<usize> {
    let sv = singular_values(m)?;
    let cutoff = rank_tol * sv.first().copied().unwrap_or(0.0);
    Ok(sv.iter().filter(|s| **s > cutoff).count())
}

/// Euclidean inner product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
