//! Orthonormal expansion sets on the reference simplices.
//!
//! The basis is the Dubiner family written directly in simplex coordinates:
//! for a multi-index `(i_0, .., i_{d-1})` the function is a product over
//! directions `k` of `P_{i_k}^{(a_k, 0)}(L_k / F_k) F_k^{i_k}` with
//! `L_k = 2 x_k + sum_{j>k} x_j - 1`, `F_k = 1 - sum_{j>k} x_j` and
//! `a_k = 2 (i_0 + .. + i_{k-1}) + k`. Each factor is generated by the
//! three-term Jacobi recurrence multiplied through by powers of `F_k`, so
//! nothing is ever divided by `F_k` and vertices need no special treatment.
//! First and second derivatives are carried through the same recurrence.
//!
//! Functions are numbered by total degree; inside a degree block the
//! ordering is `idx(p, q) = t(t+1)/2 + q` on triangles and
//! `idx(p, q, r) = t(t+1)(t+2)/6 + (q+r)(q+r+1)/2 + r` on tetrahedra.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::DenseMatrix;
use crate::math::{binomial, sqrt};
use crate::quadrature::{QuadratureRegistry, QuadratureRule};
use crate::reference_cells::ReferenceCell;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolysetError {
    #[error("direct tabulation supports derivative order <= 2, got {0}; use differentiation matrices")]
    OrderTooHigh(usize),
    #[error("points have {got} coordinates, cell dimension is {expected}")]
    PointDimension { expected: usize, got: usize },
    #[error("derivative direction {direction} out of range for dimension {dim}")]
    Direction { direction: usize, dim: usize },
}

/// Number of polynomials of total degree `<= n` in `dim` variables.
pub fn expansion_size(dim: usize, n: usize) -> usize {
    binomial(n + dim, dim)
}

/// Derivative multi-indices of total order `<= order`: order 0, then
/// `e_0, e_1, ..`, then second orders in descending lexicographic order.
pub fn derivative_multi_indices(dim: usize, order: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for t in 0..=order {
        let mut block = crate::nodes::lattice_multi_indices(dim, t);
        block.reverse();
        out.extend(block);
    }
    out
}

/// Values `[derivative](basis, point)` of a set of functions.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulationTable {
    pub derivatives: Vec<Vec<usize>>,
    /// One `nfunctions x npoints` matrix per derivative multi-index.
    pub values: Vec<DenseMatrix>,
}

impl TabulationTable {
    pub fn get(&self, derivative: &[usize]) -> Option<&DenseMatrix> {
        self.derivatives.iter().position(|d| d.as_slice() == derivative).map(|i| &self.values[i])
    }

    /// The undifferentiated values.
    pub fn base(&self) -> &DenseMatrix {
        &self.values[0]
    }

    /// First derivative in direction `k`.
    pub fn grad(&self, k: usize) -> &DenseMatrix {
        &self.values[1 + k]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(DenseMatrix::is_finite)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionSet {
    cell: ReferenceCell,
    degree: usize,
    multi_indices: Vec<Vec<usize>>,
}

/// Coefficients of the Jacobi `P^{(a,0)}` recurrence
/// `P_{n+1} = (a1 x + a2) P_n - a3 P_{n-1}`.
fn jacobi_coefficients(a: f64, n: usize) -> (f64, f64, f64) {
    let n = n as f64;
    if n == 0.0 {
        return ((a + 2.0) / 2.0, a / 2.0, 0.0);
    }
    let s = 2.0 * n + a;
    let den = 2.0 * (n + 1.0) * (n + a + 1.0);
    let a1 = (s + 1.0) * (s + 2.0) / den;
    let a2 = (s + 1.0) * a * a / (den * s);
    let a3 = n * (n + a) * (s + 2.0) / ((n + 1.0) * (n + a + 1.0) * s);
    (a1, a2, a3)
}

/// Leibniz expansion data: for derivative slot `b`, the pairs
/// `(gamma, multiplicity, slot of b - gamma)` over `gamma <= b`, `|gamma| <= 2`.
type LeibnizTerms = Vec<Vec<(Vec<usize>, f64, usize)>>;

fn leibniz_terms(ders: &[Vec<usize>]) -> LeibnizTerms {
    ders.iter()
        .map(|b| {
            let mut terms = Vec::new();
            for g in ders {
                if g.iter().zip(b).all(|(gi, bi)| gi <= bi) {
                    let rest: Vec<usize> = b.iter().zip(g).map(|(bi, gi)| bi - gi).collect();
                    let slot = ders.iter().position(|d| *d == rest).expect("closed under subtraction");
                    let mult: usize = b.iter().zip(g).map(|(&bi, &gi)| binomial(bi, gi)).product();
                    terms.push((g.clone(), mult as f64, slot));
                }
            }
            terms
        })
        .collect()
}

impl ExpansionSet {
    pub fn new(cell: &ReferenceCell, degree: usize) -> Self {
        let dim = cell.dim();
        let mut multi_indices = Vec::with_capacity(expansion_size(dim, degree));
        for t in 0..=degree {
            match dim {
                0 => multi_indices.push(Vec::new()),
                1 => multi_indices.push(vec![t]),
                2 => {
                    for q in 0..=t {
                        multi_indices.push(vec![t - q, q]);
                    }
                }
                3 => {
                    for s in 0..=t {
                        for r in 0..=s {
                            multi_indices.push(vec![t - s, s - r, r]);
                        }
                    }
                }
                _ => unreachable!("cell dimension is at most 3"),
            }
            if dim == 0 {
                break;
            }
        }
        Self { cell: cell.clone(), degree, multi_indices }
    }

    pub fn cell(&self) -> &ReferenceCell {
        &self.cell
    }

    pub fn dim(&self) -> usize {
        self.cell.dim()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn size(&self) -> usize {
        self.multi_indices.len()
    }

    pub fn multi_indices(&self) -> &[Vec<usize>] {
        &self.multi_indices
    }

    /// Flat index of a multi-index of total degree `<= degree`.
    pub fn index(&self, mi: &[usize]) -> usize {
        index_of(mi)
    }

    /// Total degree of basis function `i`.
    pub fn degree_of(&self, i: usize) -> usize {
        self.multi_indices[i].iter().sum()
    }

    /// Indices `[start, end)` of the functions of exact total degree `t`.
    pub fn degree_block(&self, t: usize) -> core::ops::Range<usize> {
        let d = self.dim();
        let start = if t == 0 { 0 } else { expansion_size(d, t - 1) };
        start..expansion_size(d, t)
    }

    /// Tabulate all functions and their derivatives up to `order <= 2` at
    /// the rows of `points` (`npoints x dim`).
    pub fn tabulate(&self, points: &DenseMatrix, order: usize) -> Result<TabulationTable, PolysetError> {
        if order > 2 {
            return Err(PolysetError::OrderTooHigh(order));
        }
        let dim = self.dim();
        if points.cols() != dim && points.rows() > 0 {
            return Err(PolysetError::PointDimension { expected: dim, got: points.cols() });
        }
        let npts = points.rows();
        let ders = derivative_multi_indices(dim, order);
        let nder = ders.len();
        let size = self.size();
        let stride = nder * npts;
        let mut v = vec![0.0; size * stride];
        for x in &mut v[..npts] {
            *x = 1.0;
        }
        if dim == 0 {
            return Ok(pack(ders, v, size, npts));
        }
        let terms = leibniz_terms(&ders);

        // L_k, F_k at every point and their (constant) gradients
        let mut lk = vec![vec![0.0; npts]; dim];
        let mut fk = vec![vec![0.0; npts]; dim];
        let mut dl = vec![vec![0.0; dim]; dim];
        let mut df = vec![vec![0.0; dim]; dim];
        for k in 0..dim {
            dl[k][k] = 2.0;
            for j in k + 1..dim {
                dl[k][j] = 1.0;
                df[k][j] = -1.0;
            }
            for p in 0..npts {
                let x = points.row(p);
                let tail: f64 = x[k + 1..].iter().sum();
                lk[k][p] = 2.0 * x[k] + tail - 1.0;
                fk[k][p] = 1.0 - tail;
            }
        }

        let mut a_fac = vec![0.0; npts];
        let mut b_fac = vec![0.0; npts];
        let mut tmp = vec![0.0; stride];
        for k in 0..dim {
            for (target, mi) in self.multi_indices.iter().enumerate() {
                let m = mi[k];
                if m == 0 || mi[k + 1..].iter().any(|&v| v != 0) {
                    continue;
                }
                let mut prev_mi = mi.clone();
                prev_mi[k] -= 1;
                let prev = index_of(&prev_mi);
                let prev2 = if m >= 2 {
                    prev_mi[k] -= 1;
                    Some(index_of(&prev_mi))
                } else {
                    None
                };
                let alpha = 2.0 * mi[..k].iter().sum::<usize>() as f64 + k as f64;
                let (a1, a2, a3) = jacobi_coefficients(alpha, m - 1);
                for p in 0..npts {
                    a_fac[p] = a1 * lk[k][p] + a2 * fk[k][p];
                    b_fac[p] = a3 * fk[k][p] * fk[k][p];
                }
                tmp.iter_mut().for_each(|t| *t = 0.0);
                let (src, _) = v.split_at(target * stride);
                let phi1 = &src[prev * stride..(prev + 1) * stride];
                let phi2 = prev2.map(|i| &src[i * stride..(i + 1) * stride]);
                for (b, bterms) in terms.iter().enumerate() {
                    let out = &mut tmp[b * npts..(b + 1) * npts];
                    for (g, mult, rest) in bterms {
                        let order_g: usize = g.iter().sum();
                        let from1 = &phi1[rest * npts..(rest + 1) * npts];
                        match order_g {
                            0 => {
                                for p in 0..npts {
                                    out[p] += a_fac[p] * from1[p];
                                }
                                if let Some(phi2) = phi2 {
                                    let from2 = &phi2[rest * npts..(rest + 1) * npts];
                                    for p in 0..npts {
                                        out[p] -= b_fac[p] * from2[p];
                                    }
                                }
                            }
                            1 => {
                                let i = g.iter().position(|&c| c == 1).expect("unit index");
                                let da = a1 * dl[k][i] + a2 * df[k][i];
                                for p in 0..npts {
                                    out[p] += mult * da * from1[p];
                                }
                                if let Some(phi2) = phi2 {
                                    let from2 = &phi2[rest * npts..(rest + 1) * npts];
                                    let c = mult * 2.0 * a3 * df[k][i];
                                    if c != 0.0 {
                                        for p in 0..npts {
                                            out[p] -= c * fk[k][p] * from2[p];
                                        }
                                    }
                                }
                            }
                            _ => {
                                if let Some(phi2) = phi2 {
                                    let mut ij = g.iter().enumerate().flat_map(|(i, &c)| core::iter::repeat(i).take(c));
                                    let i = ij.next().expect("order two");
                                    let j = ij.next().expect("order two");
                                    let c = mult * 2.0 * a3 * df[k][i] * df[k][j];
                                    if c != 0.0 {
                                        let from2 = &phi2[rest * npts..(rest + 1) * npts];
                                        for p in 0..npts {
                                            out[p] -= c * from2[p];
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
                v[target * stride..(target + 1) * stride].copy_from_slice(&tmp);
            }
        }

        for (i, mi) in self.multi_indices.iter().enumerate() {
            let mut s = 0usize;
            let mut norm = 1.0;
            for (k, &c) in mi.iter().enumerate() {
                s += c;
                norm *= (2 * s + k + 1) as f64;
            }
            let norm = sqrt(norm);
            v[i * stride..(i + 1) * stride].iter_mut().for_each(|x| *x *= norm);
        }
        Ok(pack(ders, v, size, npts))
    }

    /// Values only, `size x npoints`.
    pub fn values(&self, points: &DenseMatrix) -> Result<DenseMatrix, PolysetError> {
        let mut t = self.tabulate(points, 0)?;
        Ok(t.values.swap_remove(0))
    }

    /// Matrix `D` with `D[j][i] = int (d phi_i / d x_direction) phi_j`, so
    /// that `D c` are the coefficients of the derivative of `sum_i c_i phi_i`.
    pub fn differentiation_matrix(&self, direction: usize) -> Result<DenseMatrix, PolysetError> {
        let dim = self.dim();
        if direction >= dim {
            return Err(PolysetError::Direction { direction, dim });
        }
        let rule = QuadratureRegistry::empty().select(&self.cell, 2 * self.degree);
        let tab = self.tabulate(&rule.points, 1)?;
        let phi = tab.base();
        let dphi = tab.grad(direction);
        let n = self.size();
        let mut d = DenseMatrix::zeros(n, n);
        for j in 0..n {
            for i in 0..n {
                if self.degree_of(j) >= self.degree_of(i) {
                    continue;
                }
                let mut s = 0.0;
                for (q, w) in rule.weights.iter().enumerate() {
                    s += w * dphi[(i, q)] * phi[(j, q)];
                }
                d[(j, i)] = s;
            }
        }
        Ok(d)
    }

    /// Values of an arbitrary-order partial derivative `derivative` of every
    /// function (`size x npoints`), via products of differentiation matrices.
    pub fn tabulate_derivative(&self, points: &DenseMatrix, derivative: &[usize]) -> Result<DenseMatrix, PolysetError> {
        let n = self.size();
        let mut m = DenseMatrix::identity(n);
        for (k, &c) in derivative.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let d = self.differentiation_matrix(k)?;
            for _ in 0..c {
                m = d.matmul(&m);
            }
        }
        let phi = self.values(points)?;
        Ok(m.transpose().matmul(&phi))
    }

    /// Orthogonal projection coefficients of `f` (with `value_size`
    /// components) onto the set, `value_size x size`, using `rule`.
    pub fn project(&self, rule: &QuadratureRule, value_size: usize, mut f: impl FnMut(&[f64], &mut [f64])) -> DenseMatrix {
        let phi = self.values(&rule.points).expect("rule matches cell dimension");
        let mut out = DenseMatrix::zeros(value_size, self.size());
        let mut buf = vec![0.0; value_size];
        for (q, w) in rule.weights.iter().enumerate() {
            f(rule.point(q), &mut buf);
            for c in 0..value_size {
                let wc = w * buf[c];
                for i in 0..self.size() {
                    out[(c, i)] += wc * phi[(i, q)];
                }
            }
        }
        out
    }
}

fn index_of(mi: &[usize]) -> usize {
    match mi.len() {
        0 => 0,
        1 => mi[0],
        2 => {
            let t = mi[0] + mi[1];
            t * (t + 1) / 2 + mi[1]
        }
        3 => {
            let t = mi[0] + mi[1] + mi[2];
            let s = mi[1] + mi[2];
            t * (t + 1) * (t + 2) / 6 + s * (s + 1) / 2 + mi[2]
        }
        _ => unreachable!("cell dimension is at most 3"),
    }
}

fn pack(ders: Vec<Vec<usize>>, v: Vec<f64>, size: usize, npts: usize) -> TabulationTable {
    let nder = ders.len();
    let stride = nder * npts;
    let values = (0..nder)
        .map(|b| {
            let mut m = DenseMatrix::zeros(size, npts);
            for i in 0..size {
                m.row_mut(i).copy_from_slice(&v[i * stride + b * npts..i * stride + (b + 1) * npts]);
            }
            m
        })
        .collect();
    TabulationTable { derivatives: ders, values }
}
