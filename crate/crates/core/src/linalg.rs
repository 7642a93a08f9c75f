//! Dense linear algebra kernels: LU with partial pivoting, Cholesky,
//! symmetric eigensolver (Householder tridiagonalization + implicit QL),
//! and 2-norm singular values via Golub-Kahan bidiagonalization.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::math::{abs, hypot, sqrt};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix is singular: pivot {pivot} fell below the threshold")]
    Singular { pivot: usize },
    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("eigenvalue iteration failed to converge")]
    NoConvergence,
}

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major data.
    ///
    /// Panics if `data.len() != rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length does not match shape");
        Self { rows, cols, data }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.as_ref().len(), cols, "ragged rows");
            data.extend_from_slice(r.as_ref());
        }
        Self { rows: rows.len(), cols, data }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
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
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
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

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let brow = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len());
        (0..self.rows).map(|i| crate::math::dot(self.row(i), x)).collect()
    }

    /// `self^T x`
    pub fn tr_matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, x.len());
        let mut y = vec![0.0; self.cols];
        for i in 0..self.rows {
            let xi = x[i];
            for (yj, a) in y.iter_mut().zip(self.row(i)) {
                *yj += a * xi;
            }
        }
        y
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(abs(*v)))
    }

    pub fn sub(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        DenseMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn scaled(&self, s: f64) -> DenseMatrix {
        DenseMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn require_square(&self) -> Result<usize, LinalgError> {
        if self.rows != self.cols {
            return Err(LinalgError::NotSquare { rows: self.rows, cols: self.cols });
        }
        Ok(self.rows)
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// `P A = L U` with unit lower `L`; `perm[i]` is the source row of row `i`.
#[derive(Debug, Clone)]
pub struct LuFactorization {
    lu: DenseMatrix,
    perm: Vec<usize>,
}

/// Pivots with magnitude at or below `1e-14 * max|A|` are treated as zero.
pub const PIVOT_TOLERANCE: f64 = 1e-14;

pub fn lu_factor(a: &DenseMatrix) -> Result<LuFactorization, LinalgError> {
    let n = a.require_square()?;
    let threshold = PIVOT_TOLERANCE * a.max_abs();
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut p = k;
        let mut best = abs(lu[(k, k)]);
        for i in k + 1..n {
            let v = abs(lu[(i, k)]);
            if v > best {
                best = v;
                p = i;
            }
        }
        if best <= threshold || best == 0.0 {
            return Err(LinalgError::Singular { pivot: k });
        }
        if p != k {
            for j in 0..n {
                lu.data.swap(k * n + j, p * n + j);
            }
            perm.swap(k, p);
        }
        let pivot = lu[(k, k)];
        for i in k + 1..n {
            let f = lu[(i, k)] / pivot;
            lu[(i, k)] = f;
            if f == 0.0 {
                continue;
            }
            let (top, bottom) = lu.data.split_at_mut(i * n);
            let krow = &top[k * n + k + 1..k * n + n];
            let irow = &mut bottom[k + 1..n];
            for (x, y) in irow.iter_mut().zip(krow) {
                *x -= f * y;
            }
        }
    }
    Ok(LuFactorization { lu, perm })
}

impl LuFactorization {
    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let s: f64 = (0..i).map(|j| row[j] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s: f64 = (i + 1..n).map(|j| row[j] * x[j]).sum();
            x[i] = (x[i] - s) / row[i];
        }
        x
    }

    /// Solves `A^T x = b`.
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        // A^T = U^T L^T P
        let mut z = b.to_vec();
        for i in 0..n {
            let d = self.lu[(i, i)];
            z[i] /= d;
            let zi = z[i];
            let row = self.lu.row(i);
            for j in i + 1..n {
                z[j] -= row[j] * zi;
            }
        }
        for i in (0..n).rev() {
            let zi = z[i];
            let row = self.lu.row(i);
            for j in 0..i {
                z[j] -= row[j] * zi;
            }
        }
        let mut x = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = z[i];
        }
        x
    }

    pub fn inverse(&self) -> DenseMatrix {
        let n = self.dim();
        let mut inv = DenseMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = self.solve(&e);
            e[j] = 0.0;
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv
    }
}

pub fn lu_solve(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    Ok(lu_factor(a)?.solve(b))
}

pub fn invert(a: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    Ok(lu_factor(a)?.inverse())
}

/// Lower Cholesky factor `L` with `A = L L^T`.
pub fn cholesky(a: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    let n = a.require_square()?;
    check_symmetric(a)?;
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(LinalgError::NotPositiveDefinite { pivot: j });
        }
        let d = sqrt(d);
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Solves `L x = b` for lower-triangular `L`.
pub fn solve_lower(l: &DenseMatrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    let mut x = b.to_vec();
    for i in 0..n {
        let row = l.row(i);
        let s: f64 = (0..i).map(|j| row[j] * x[j]).sum();
        x[i] = (x[i] - s) / row[i];
    }
    x
}

/// Solves `L^T x = b` for lower-triangular `L`.
pub fn solve_lower_transpose(l: &DenseMatrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    let mut x = b.to_vec();
    for i in (0..n).rev() {
        x[i] /= l[(i, i)];
        let xi = x[i];
        let row = l.row(i);
        for j in 0..i {
            x[j] -= row[j] * xi;
        }
    }
    x
}

fn check_symmetric(a: &DenseMatrix) -> Result<(), LinalgError> {
    let n = a.rows();
    let tol = 1e-12 * a.max_abs();
    for i in 0..n {
        for j in 0..i {
            if abs(a[(i, j)] - a[(j, i)]) > tol {
                return Err(LinalgError::NotSymmetric);
            }
        }
    }
    Ok(())
}

/// Eigen-decomposition of a symmetric matrix; `values` ascending and
/// `vectors` holds the matching orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

pub fn sym_eig(a: &DenseMatrix) -> Result<SymmetricEigen, LinalgError> {
    let n = a.require_square()?;
    check_symmetric(a)?;
    let mut w = a.clone();
    let mut q = DenseMatrix::identity(n);
    for k in 0..n.saturating_sub(2) {
        let x: Vec<f64> = (k + 1..n).map(|i| w[(i, k)]).collect();
        let Some(h) = Householder::new(&x) else { continue };
        let m = n - k - 1;
        let off = k + 1;
        // p = beta * A22 v
        let mut p = vec![0.0; m];
        for i in 0..m {
            let row = &w.row(off + i)[off..];
            p[i] = h.beta * crate::math::dot(row, &h.v);
        }
        let kk = 0.5 * h.beta * crate::math::dot(&p, &h.v);
        let wv: Vec<f64> = p.iter().zip(&h.v).map(|(pi, vi)| pi - kk * vi).collect();
        for i in 0..m {
            for j in 0..m {
                w[(off + i, off + j)] -= h.v[i] * wv[j] + wv[i] * h.v[j];
            }
        }
        w[(off, k)] = h.alpha;
        w[(k, off)] = h.alpha;
        for i in 1..m {
            w[(off + i, k)] = 0.0;
            w[(k, off + i)] = 0.0;
        }
        for r in 0..n {
            let row = &mut q.row_mut(r)[off..];
            let s = h.beta * crate::math::dot(row, &h.v);
            for (x, v) in row.iter_mut().zip(&h.v) {
                *x -= s * v;
            }
        }
    }
    let mut d: Vec<f64> = (0..n).map(|i| w[(i, i)]).collect();
    let mut e: Vec<f64> = (0..n).map(|i| if i + 1 < n { w[(i + 1, i)] } else { 0.0 }).collect();
    tridiagonal_ql(&mut d, &mut e, Some(&mut q))?;
    Ok(sort_eigen(d, q))
}

/// Eigen-decomposition of the symmetric tridiagonal matrix with diagonal
/// `diag` and sub-diagonal `off` (`off.len() == diag.len() - 1`).
pub fn sym_tridiagonal_eig(diag: &[f64], off: &[f64]) -> Result<SymmetricEigen, LinalgError> {
    let n = diag.len();
    assert!(off.len() + 1 == n || (n == 0 && off.is_empty()));
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.push(0.0);
    let mut z = DenseMatrix::identity(n);
    tridiagonal_ql(&mut d, &mut e, Some(&mut z))?;
    Ok(sort_eigen(d, z))
}

fn sort_eigen(d: Vec<f64>, z: DenseMatrix) -> SymmetricEigen {
    let n = d.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let values = order.iter().map(|&i| d[i]).collect();
    let mut vectors = DenseMatrix::zeros(z.rows(), n);
    for (newj, &oldj) in order.iter().enumerate() {
        for r in 0..z.rows() {
            vectors[(r, newj)] = z[(r, oldj)];
        }
    }
    SymmetricEigen { values, vectors }
}

/// Implicit QL with Wilkinson shifts on a symmetric tridiagonal matrix.
/// `e[i]` couples `d[i]` and `d[i+1]`; `e[n-1]` is ignored. Rotations are
/// accumulated into the columns of `z` when supplied.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], mut z: Option<&mut DenseMatrix>) -> Result<(), LinalgError> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = abs(d[m]) + abs(d[m + 1]);
                if abs(e[m]) <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            if iter == 100 {
                return Err(LinalgError::NoConvergence);
            }
            iter += 1;
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = hypot(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = hypot(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_deref_mut() {
                    for k in 0..z.rows() {
                        let row = z.row_mut(k);
                        let f = row[i + 1];
                        row[i + 1] = s * row[i] + c * f;
                        row[i] = c * row[i] - s * f;
                    }
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

struct Householder {
    v: Vec<f64>,
    beta: f64,
    alpha: f64,
}

impl Householder {
    /// Reflector `H = I - beta v v^T` with `H x = alpha e_1`; `None` when
    /// `x` is already zero.
    fn new(x: &[f64]) -> Option<Self> {
        let sigma = crate::math::norm2(x);
        if sigma == 0.0 {
            return None;
        }
        let x0 = x[0];
        let alpha = if x0 >= 0.0 { -sigma } else { sigma };
        let mut v = x.to_vec();
        v[0] -= alpha;
        let beta = 1.0 / (sigma * (sigma + abs(x0)));
        Some(Self { v, beta, alpha })
    }
}

/// Singular values in descending order.
pub fn singular_values(a: &DenseMatrix) -> Result<Vec<f64>, LinalgError> {
    let mut w = if a.rows() >= a.cols() { a.clone() } else { a.transpose() };
    let (m, n) = (w.rows(), w.cols());
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n.saturating_sub(1)];
    let mut wrow = vec![0.0; n];
    for k in 0..n {
        let x: Vec<f64> = (k..m).map(|i| w[(i, k)]).collect();
        match Householder::new(&x) {
            Some(h) => {
                d[k] = h.alpha;
                // rows k..m, cols k+1..n
                let cols = n - k - 1;
                wrow[..cols].iter_mut().for_each(|v| *v = 0.0);
                for (i, vi) in h.v.iter().enumerate() {
                    let row = &w.row(k + i)[k + 1..];
                    for (acc, a) in wrow[..cols].iter_mut().zip(row) {
                        *acc += vi * a;
                    }
                }
                for (i, vi) in h.v.iter().enumerate() {
                    let f = h.beta * vi;
                    let row = &mut w.row_mut(k + i)[k + 1..];
                    for (a, s) in row.iter_mut().zip(&wrow[..cols]) {
                        *a -= f * s;
                    }
                }
            }
            None => d[k] = 0.0,
        }
        if k + 1 < n {
            let x: Vec<f64> = w.row(k)[k + 1..].to_vec();
            match Householder::new(&x) {
                Some(h) => {
                    e[k] = h.alpha;
                    for i in k + 1..m {
                        let row = &mut w.row_mut(i)[k + 1..];
                        let s = h.beta * crate::math::dot(row, &h.v);
                        for (a, v) in row.iter_mut().zip(&h.v) {
                            *a -= s * v;
                        }
                    }
                }
                None => e[k] = 0.0,
            }
        }
    }
    // Golub-Kahan tridiagonal: zero diagonal, off-diagonal d0 e0 d1 e1 ... d_{n-1}.
    let mut tg = vec![0.0; 2 * n];
    let mut off = vec![0.0; 2 * n];
    for k in 0..n {
        off[2 * k] = d[k];
        if k + 1 < n {
            off[2 * k + 1] = e[k];
        }
    }
    tridiagonal_ql(&mut tg, &mut off, None)?;
    tg.sort_by(|a, b| b.total_cmp(a));
    Ok(tg.into_iter().take(n).map(abs).collect())
}

/// `sigma_max / sigma_min`; `f64::INFINITY` for exactly singular input.
pub fn condition_2norm(a: &DenseMatrix) -> Result<f64, LinalgError> {
    a.require_square()?;
    let s = singular_values(a)?;
    let (Some(&max), Some(&min)) = (s.first(), s.last()) else {
        return Ok(1.0);
    };
    if min == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(max / min)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg_matrix(n: usize, m: usize, seed: u64) -> DenseMatrix {
        let mut s = seed;
        let mut data = Vec::with_capacity(n * m);
        for _ in 0..n * m {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            data.push(((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0);
        }
        DenseMatrix::from_vec(n, m, data)
    }

    #[test]
    fn identity_inverse() {
        let inv = invert(&DenseMatrix::identity(4)).unwrap();
        assert_eq!(inv, DenseMatrix::identity(4));
    }

    #[test]
    fn diagonal_inverse() {
        let a = DenseMatrix::from_rows(&[[2.0, 0.0], [0.0, 4.0]]);
        let inv = invert(&a).unwrap();
        assert_eq!(inv, DenseMatrix::from_rows(&[[0.5, 0.0], [0.0, 0.25]]));
    }

    #[test]
    fn hilbert_solve_matches_rational_solution() {
        // H4 x = b with b = H4 * (1,1,1,1); exact solution is all ones.
        let h = DenseMatrix::from_vec(4, 4, (0..16).map(|k| 1.0 / ((k / 4 + k % 4 + 1) as f64)).collect());
        let b = h.matvec(&[1.0; 4]);
        let x = lu_solve(&h, &b).unwrap();
        for xi in x {
            assert!((xi - 1.0).abs() <= 1e-9);
        }
        // Rational inverse of H4 (integer entries), first row.
        let inv = invert(&h).unwrap();
        let exact_row = [16.0, -120.0, 240.0, -140.0];
        for (a, b) in inv.row(0).iter().zip(exact_row) {
            assert!((a - b).abs() / b.abs() <= 1e-9);
        }
    }

    #[test]
    fn singular_pivot_is_reported() {
        let a = DenseMatrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]);
        assert_eq!(lu_factor(&a).unwrap_err(), LinalgError::Singular { pivot: 1 });
    }

    #[test]
    fn random_lu_residuals() {
        for &n in &[1usize, 5, 40, 120] {
            let a = lcg_matrix(n, n, n as u64 + 7);
            let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
            let f = lu_factor(&a).unwrap();
            let x = f.solve(&b);
            let r = a.matvec(&x);
            let res: f64 = r.iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
            let bn: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(res / bn.max(1e-300) <= 1e-12, "n={n} residual {}", res / bn);
            let xt = f.solve_transpose(&b);
            let rt = a.tr_matvec(&xt);
            let res_t: f64 = rt.iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
            assert!(res_t / bn.max(1e-300) <= 1e-12);
            let kappa = condition_2norm(&a).unwrap();
            let eye = a.matmul(&f.inverse()).sub(&DenseMatrix::identity(n));
            assert!(eye.max_abs() <= 1e2 * kappa * f64::EPSILON * n as f64);
        }
    }

    #[test]
    fn condition_numbers() {
        assert!((condition_2norm(&DenseMatrix::identity(3)).unwrap() - 1.0).abs() < 1e-14);
        let d = DenseMatrix::diagonal(&[1.0, 10.0]);
        assert!((condition_2norm(&d).unwrap() - 10.0).abs() < 1e-12);
        let z = DenseMatrix::zeros(2, 2);
        assert_eq!(condition_2norm(&z).unwrap(), f64::INFINITY);
    }

    #[test]
    fn orthogonal_matrix_is_perfectly_conditioned() {
        // Product of Householder reflectors.
        let n = 30;
        let mut q = DenseMatrix::identity(n);
        for k in 0..5 {
            let v = lcg_matrix(n, 1, 100 + k).column(0);
            let vv: f64 = v.iter().map(|x| x * x).sum();
            let mut h = DenseMatrix::identity(n);
            for i in 0..n {
                for j in 0..n {
                    h[(i, j)] -= 2.0 * v[i] * v[j] / vv;
                }
            }
            q = q.matmul(&h);
        }
        let k = condition_2norm(&q).unwrap();
        assert!((k - 1.0).abs() <= 1e-8, "kappa {k}");
    }

    #[test]
    fn singular_values_of_known_matrix() {
        // [[3,0],[4,5]] has singular values sqrt(45), sqrt(5)
        let a = DenseMatrix::from_rows(&[[3.0, 0.0], [4.0, 5.0]]);
        let s = singular_values(&a).unwrap();
        assert!((s[0] - 45f64.sqrt()).abs() < 1e-13);
        assert!((s[1] - 5f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn eigen_small_cases() {
        let e = sym_eig(&DenseMatrix::diagonal(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(e.values, vec![1.0, 2.0, 3.0]);
        let e = sym_eig(&DenseMatrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]])).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-15 && (e.values[1] - 1.0).abs() < 1e-15);
        // Legendre Jacobi matrix, m = 2.
        let e = sym_tridiagonal_eig(&[0.0, 0.0], &[(1.0f64 / 3.0).sqrt()]).unwrap();
        assert!((e.values[1] - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((e.values[0] + 1.0 / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn random_symmetric_eigen_backward_error() {
        for &n in &[1usize, 2, 7, 60, 200] {
            let b = lcg_matrix(n, n, 3 * n as u64);
            let a = b.matmul(&b.transpose());
            let e = sym_eig(&a).unwrap();
            let aq = a.matmul(&e.vectors);
            let mut ql = e.vectors.clone();
            for i in 0..n {
                for j in 0..n {
                    ql[(i, j)] *= e.values[j];
                }
            }
            let scale = a.max_abs();
            assert!(aq.sub(&ql).max_abs() <= 1e-11 * scale, "n={n}");
            let qtq = e.vectors.transpose().matmul(&e.vectors);
            assert!(qtq.sub(&DenseMatrix::identity(n)).max_abs() <= 1e-11);
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn cholesky_factor_and_failure() {
        let b = lcg_matrix(12, 12, 9);
        let mut a = b.matmul(&b.transpose());
        for i in 0..12 {
            a[(i, i)] += 1.0;
        }
        let l = cholesky(&a).unwrap();
        assert!(l.matmul(&l.transpose()).sub(&a).max_abs() < 1e-12 * a.max_abs());
        let x = solve_lower_transpose(&l, &solve_lower(&l, &[1.0; 12]));
        let r = a.matvec(&x);
        assert!(r.iter().all(|v| (v - 1.0).abs() < 1e-10));
        let bad = DenseMatrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]);
        assert_eq!(cholesky(&bad).unwrap_err(), LinalgError::NotPositiveDefinite { pivot: 1 });
    }
}
