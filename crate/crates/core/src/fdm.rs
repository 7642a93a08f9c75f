//! One-dimensional bases for fast diagonalization on `[-1, 1]`.
//!
//! The interior functions solve `K c = lambda M c` on the bubble space
//! `P_p ∩ H^1_0`, so they are orthonormal in `L2` and orthogonal in `H^1`.
//! Everything is stored as coefficients over the `L2`-orthonormal Legendre
//! polynomials on `[-1, 1]`, so `L2` products are plain dot products.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{cholesky, lu_factor, solve_lower, solve_lower_transpose, sym_eig, DenseMatrix, LinalgError};
use crate::math::{abs, sqrt};
use crate::polyset::ExpansionSet;
use crate::quadrature::gauss_jacobi;
use crate::reference_cells::ReferenceCell;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FdmError {
    #[error("degree must be at least {min}, got {got}")]
    DegreeTooLow { min: usize, got: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Orthonormal Legendre polynomials of degree `<= n` on `[-1, 1]` and their
/// derivatives at `x`, each `(n + 1) x x.len()`.
pub fn legendre_tabulate(n: usize, x: &[f64]) -> (DenseMatrix, DenseMatrix) {
    let exp = ExpansionSet::new(&ReferenceCell::interval(), n);
    let t = DenseMatrix::from_vec(x.len(), 1, x.iter().map(|x| 0.5 * (x + 1.0)).collect());
    let tab = exp.tabulate(&t, 1).expect("interval points");
    let s = 1.0 / sqrt(2.0);
    (tab.base().scaled(s), tab.grad(0).scaled(0.5 * s))
}

/// Gauss-Legendre rule on `[-1, 1]` with `m` points.
fn rule(m: usize) -> (Vec<f64>, Vec<f64>) {
    gauss_jacobi(0.0, 0.0, m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdmBasis1D {
    pub degree: usize,
    /// Interior functions, one row each, over `L_0..L_p`.
    pub interior: DenseMatrix,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Hats at `-1` and `+1`, made `L2`-orthogonal to the interior functions.
    pub vertex: DenseMatrix,
}

impl FdmBasis1D {
    pub fn num_interior(&self) -> usize {
        self.interior.rows()
    }

    /// All `p + 1` functions: the two vertex functions, then the interior ones.
    pub fn basis(&self) -> DenseMatrix {
        let n = self.degree + 1;
        let mut out = DenseMatrix::zeros(n, n);
        for r in 0..2 {
            out.row_mut(r).copy_from_slice(self.vertex.row(r));
        }
        for r in 0..self.num_interior() {
            out.row_mut(2 + r).copy_from_slice(self.interior.row(r));
        }
        out
    }

    /// Values and derivatives of the rows of `coeffs` at `x`.
    pub fn evaluate(&self, coeffs: &DenseMatrix, x: &[f64]) -> (DenseMatrix, DenseMatrix) {
        let (v, d) = legendre_tabulate(self.degree, x);
        (coeffs.matmul(&v), coeffs.matmul(&d))
    }

    /// Stiffness and mass Gram matrices of [`FdmBasis1D::basis`].
    pub fn gram_matrices(&self) -> (DenseMatrix, DenseMatrix) {
        let (x, w) = rule(self.degree + 1);
        let (v, d) = self.evaluate(&self.basis(), &x);
        (weighted_gram(&d, &w), weighted_gram(&v, &w))
    }
}

fn weighted_gram(f: &DenseMatrix, w: &[f64]) -> DenseMatrix {
    let n = f.rows();
    let mut g = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let s: f64 = w.iter().enumerate().map(|(q, w)| w * f[(i, q)] * f[(j, q)]).sum();
            g[(i, j)] = s;
            g[(j, i)] = s;
        }
    }
    g
}

/// Coefficients over `L_0..L_n` of functions sampled at the rule points.
fn project(samples: &DenseMatrix, lv: &DenseMatrix, w: &[f64]) -> DenseMatrix {
    let mut c = DenseMatrix::zeros(samples.rows(), lv.rows());
    for i in 0..samples.rows() {
        for k in 0..lv.rows() {
            c[(i, k)] = w.iter().enumerate().map(|(q, w)| w * samples[(i, q)] * lv[(k, q)]).sum();
        }
    }
    c
}

pub fn fdm_basis_1d(p: usize) -> Result<FdmBasis1D, FdmError> {
    if p < 1 {
        return Err(FdmError::DegreeTooLow { min: 1, got: p });
    }
    let (x, w) = rule(p + 1);
    let (lv, ld) = legendre_tabulate(p, &x);
    let nb = p - 1;

    let mut hats = DenseMatrix::zeros(2, x.len());
    for (q, &t) in x.iter().enumerate() {
        hats[(0, q)] = 0.5 * (1.0 - t);
        hats[(1, q)] = 0.5 * (1.0 + t);
    }
    let hats = project(&hats, &lv, &w);
    if nb == 0 {
        return Ok(FdmBasis1D { degree: p, interior: DenseMatrix::zeros(0, p + 1), eigenvalues: Vec::new(), vertex: hats });
    }

    let mut bubbles = DenseMatrix::zeros(nb, x.len());
    for j in 0..nb {
        for (q, &t) in x.iter().enumerate() {
            bubbles[(j, q)] = (1.0 - t * t) * lv[(j, q)];
        }
    }
    let b = project(&bubbles, &lv, &w);
    let mass = b.matmul(&b.transpose());
    let stiff = b.matmul(&weighted_gram(&ld, &w)).matmul(&b.transpose());

    // K c = lambda M c with M = L L^T becomes a standard problem for L^-1 K L^-T
    let l = cholesky(&mass)?;
    let mut half = DenseMatrix::zeros(nb, nb);
    for j in 0..nb {
        let col = solve_lower(&l, &stiff.column(j));
        for i in 0..nb {
            half[(j, i)] = col[i];
        }
    }
    let mut a = DenseMatrix::zeros(nb, nb);
    for j in 0..nb {
        let col = solve_lower(&l, &half.column(j));
        for i in 0..nb {
            a[(i, j)] = col[i];
        }
    }
    let at = a.transpose();
    for i in 0..nb {
        for j in 0..nb {
            a[(i, j)] = 0.5 * (a[(i, j)] + at[(i, j)]);
        }
    }
    let eig = sym_eig(&a)?;
    let mut c = DenseMatrix::zeros(nb, nb);
    for k in 0..nb {
        let col = solve_lower_transpose(&l, &eig.vectors.column(k));
        for i in 0..nb {
            c[(i, k)] = col[i];
        }
    }
    let mut interior = c.transpose().matmul(&b);

    // fix signs by the slope at -1
    let (_, dleft) = legendre_tabulate(p, &[-1.0]);
    for i in 0..nb {
        let slope: f64 = (0..=p).map(|k| interior[(i, k)] * dleft[(k, 0)]).sum();
        if slope < 0.0 {
            interior.row_mut(i).iter_mut().for_each(|v| *v = -*v);
        }
    }

    let mut vertex = hats;
    for r in 0..2 {
        for i in 0..nb {
            let proj: f64 = (0..=p).map(|k| vertex[(r, k)] * interior[(i, k)]).sum();
            for k in 0..=p {
                vertex[(r, k)] -= proj * interior[(i, k)];
            }
        }
    }
    Ok(FdmBasis1D { degree: p, interior, eigenvalues: eig.values, vertex })
}

/// Violations of the three defining identities of the interior basis,
/// checked with an independent, finer Gauss-Legendre rule.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FdmResidual {
    pub mass: f64,
    /// Measured on `s'_i / sqrt(lambda_i)`, which should be orthonormal.
    pub stiffness: f64,
    /// Unscaled deviation of `(s'_i, s'_j)` from `lambda_i delta_ij`.
    pub stiffness_abs: f64,
    pub boundary: f64,
}

impl FdmResidual {
    pub fn max(&self) -> f64 {
        self.mass.max(self.stiffness).max(self.boundary)
    }
}

pub fn fdm_residuals(basis: &FdmBasis1D) -> FdmResidual {
    let nb = basis.num_interior();
    if nb == 0 {
        return FdmResidual::default();
    }
    let (x, w) = rule(basis.degree + 4);
    let (v, d) = basis.evaluate(&basis.interior, &x);
    let (m, k) = (weighted_gram(&v, &w), weighted_gram(&d, &w));
    let (ends, _) = basis.evaluate(&basis.interior, &[-1.0, 1.0]);
    let mut r = FdmResidual { boundary: ends.max_abs(), ..Default::default() };
    for i in 0..nb {
        for j in 0..nb {
            let delta = if i == j { 1.0 } else { 0.0 };
            r.mass = r.mass.max(abs(m[(i, j)] - delta));
            let dev = abs(k[(i, j)] - basis.eigenvalues[i] * delta);
            r.stiffness_abs = r.stiffness_abs.max(dev);
            r.stiffness = r.stiffness.max(dev / sqrt(basis.eigenvalues[i] * basis.eigenvalues[j]));
        }
    }
    r
}

/// Largest entry of [`fdm_residuals`].
pub fn fdm_residual(basis: &FdmBasis1D) -> f64 {
    fdm_residuals(basis).max()
}

/// Dual description of `DG_{p-1}` on `[-1, 1]`: moments against `1` and
/// against the derivatives of the interior functions, scaled by `1/2` and
/// `1/lambda_i` so that `{1, s'_1, .., s'_{p-1}}` is the nodal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FdmDgBasis1D {
    pub degree: usize,
    /// Moment weight functions (scale included), one row each, over `L_0..L_{p-1}`.
    pub dual: DenseMatrix,
    pub scales: Vec<f64>,
    /// `V[i][j] = l_i(L_j)`.
    pub vandermonde: DenseMatrix,
    /// Nodal basis, one row each, over `L_0..L_{p-1}`.
    pub coefficients: DenseMatrix,
}

impl FdmDgBasis1D {
    pub fn space_dim(&self) -> usize {
        self.dual.rows()
    }

    /// `l_i(phi_j)` for the nodal basis.
    pub fn duality_matrix(&self) -> DenseMatrix {
        self.dual.matmul(&self.coefficients.transpose())
    }
}

pub fn fdm_dg_basis_1d(p: usize) -> Result<FdmDgBasis1D, FdmError> {
    let cg = fdm_basis_1d(p)?;
    let (x, w) = rule(p + 1);
    let (lv, _) = legendre_tabulate(p - 1, &x);
    let (_, ds) = cg.evaluate(&cg.interior, &x);
    let deriv = project(&ds, &lv, &w);

    let mut dual = DenseMatrix::zeros(p, p);
    let mut scales = vec![0.5];
    dual[(0, 0)] = 0.5 * sqrt(2.0);
    for i in 0..p - 1 {
        let s = 1.0 / cg.eigenvalues[i];
        scales.push(s);
        for k in 0..p {
            dual[(i + 1, k)] = s * deriv[(i, k)];
        }
    }
    let vandermonde = dual.clone();
    let lu = lu_factor(&vandermonde)?;
    let coefficients = lu.inverse().transpose();
    Ok(FdmDgBasis1D { degree: p, dual, scales, vandermonde, coefficients })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TensorSparsity {
    pub nnz_stiffness: usize,
    pub nnz_mass: usize,
    pub dim: usize,
}

pub fn kron(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let (ar, ac, br, bc) = (a.rows(), a.cols(), b.rows(), b.cols());
    let mut out = DenseMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let s = a[(i, j)];
            if s == 0.0 {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = s * b[(k, l)];
                }
            }
        }
    }
    out
}

fn count_nonzeros(a: &DenseMatrix) -> usize {
    let tol = 1e-10 * a.max_abs();
    a.as_slice().iter().filter(|v| abs(**v) > tol).count()
}

/// Single-cell `Q_p` stiffness and mass matrices on the square, assembled
/// from the 1D factors.
pub fn tensor_matrices_2d(p: usize) -> Result<(DenseMatrix, DenseMatrix), FdmError> {
    let basis = fdm_basis_1d(p)?;
    let (k, m) = basis.gram_matrices();
    let mut stiff = kron(&k, &m);
    let other = kron(&m, &k);
    for (a, b) in stiff.as_mut_slice().iter_mut().zip(other.as_slice()) {
        *a += b;
    }
    Ok((stiff, kron(&m, &m)))
}

pub fn tensor_sparsity_2d(p: usize) -> Result<TensorSparsity, FdmError> {
    if p < 2 {
        return Err(FdmError::DegreeTooLow { min: 2, got: p });
    }
    let (k, m) = tensor_matrices_2d(p)?;
    Ok(TensorSparsity { nnz_stiffness: count_nonzeros(&k), nnz_mass: count_nonzeros(&m), dim: k.rows() })
}
