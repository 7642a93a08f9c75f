//! Quadrature on the reference simplices.
//!
//! Gauss-Jacobi rules come from the Golub-Welsch eigenvalue problem; simplex
//! rules are either Stroud conical products (collapsed through the Duffy
//! map), a couple of hand-coded low-order triangle rules, or externally
//! tabulated rules registered in a [`QuadratureRegistry`] after passing a
//! monomial exactness check.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::linalg::{sym_tridiagonal_eig, DenseMatrix};
use crate::math::{abs, exp, factorial, lgamma, sqrt};
use crate::reference_cells::{EntityRef, ReferenceCell};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QuadratureError {
    #[error("rule is not exact for monomial {monomial}: expected {expected:e}, got {computed:e}")]
    NotExact { monomial: String, expected: f64, computed: f64 },
    #[error("rule has {points} points but {weights} weights")]
    Shape { points: usize, weights: usize },
    #[error("unsupported simplex dimension {0}")]
    UnsupportedDimension(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    Gauss,
    Stroud,
    Tabulated,
    Handcoded,
}

impl Provenance {
    pub fn name(self) -> &'static str {
        match self {
            Provenance::Gauss => "gauss",
            Provenance::Stroud => "stroud",
            Provenance::Tabulated => "tabulated",
            Provenance::Handcoded => "handcoded",
        }
    }

    /// Preference among rules with equal point counts (lower wins).
    fn tie_rank(self) -> u8 {
        match self {
            Provenance::Tabulated => 0,
            Provenance::Gauss | Provenance::Stroud => 1,
            Provenance::Handcoded => 2,
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Points and weights on a unit reference simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub dim: usize,
    /// `npoints x dim`.
    pub points: DenseMatrix,
    pub weights: Vec<f64>,
    pub degree: usize,
    pub provenance: Provenance,
}

impl QuadratureRule {
    pub fn new(
        dim: usize,
        points: DenseMatrix,
        weights: Vec<f64>,
        degree: usize,
        provenance: Provenance,
    ) -> Result<Self, QuadratureError> {
        if !(1..=3).contains(&dim) {
            return Err(QuadratureError::UnsupportedDimension(dim));
        }
        if points.rows() != weights.len() || points.cols() != dim {
            return Err(QuadratureError::Shape { points: points.rows(), weights: weights.len() });
        }
        Ok(Self { dim, points, weights, degree, provenance })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn cell(&self) -> ReferenceCell {
        ReferenceCell::new(self.dim).expect("rule dimension is valid")
    }

    pub fn point(&self, i: usize) -> &[f64] {
        self.points.row(i)
    }

    /// `sum_i w_i f(x_i)`.
    pub fn integrate(&self, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        let mut s = crate::math::CompensatedSum::default();
        for (i, w) in self.weights.iter().enumerate() {
            s.add(w * f(self.points.row(i)));
        }
        s.value()
    }
}

/// Gauss-Jacobi rule with `m` points on `[-1, 1]` for the weight
/// `(1-x)^alpha (1+x)^beta`. Points are ascending.
pub fn gauss_jacobi(alpha: f64, beta: f64, m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1, "Gauss-Jacobi rule needs at least one point");
    let ab = alpha + beta;
    let mut diag = Vec::with_capacity(m);
    let mut off = Vec::with_capacity(m.saturating_sub(1));
    for n in 0..m {
        let nf = n as f64;
        let a = if n == 0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / ((2.0 * nf + ab) * (2.0 * nf + ab + 2.0))
        };
        diag.push(a);
        if n + 1 < m {
            let k = nf + 1.0;
            let s = 2.0 * k + ab;
            let num = 4.0 * k * (k + alpha) * (k + beta) * (k + ab);
            let den = s * s * (s + 1.0) * (s - 1.0);
            off.push(sqrt(num / den));
        }
    }
    let mu0 = exp((ab + 1.0) * core::f64::consts::LN_2 + lgamma(alpha + 1.0) + lgamma(beta + 1.0) - lgamma(ab + 2.0));
    let eig = sym_tridiagonal_eig(&diag, &off).expect("Jacobi matrix eigenproblem converges");
    let mut pairs: Vec<(f64, f64)> = (0..m)
        .map(|j| {
            let v0 = eig.vectors[(0, j)];
            (eig.values[j], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (mut x, mut w): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    // Newton-polish the nodes and take weights from the closed form
    // 1 / ((1 - x^2) P_m'(x)^2), normalized by the zeroth moment; the
    // eigenvector weights lose relative accuracy near the endpoints
    let mut raw = Vec::with_capacity(m);
    for xi in x.iter_mut() {
        let mut d = 0.0;
        for _ in 0..3 {
            let p = jacobi_value(alpha, beta, m, *xi);
            d = 0.5 * (m as f64 + ab + 1.0) * jacobi_value(alpha + 1.0, beta + 1.0, m - 1, *xi);
            let step = p / d;
            *xi -= step;
            if abs(step) <= 1e-17 {
                break;
            }
        }
        raw.push(1.0 / ((1.0 - *xi * *xi) * d * d));
    }
    let total: f64 = raw.iter().sum();
    let polished: Vec<f64> = raw.iter().map(|r| mu0 * r / total).collect();
    if polished.iter().zip(&w).all(|(p, w)| p.is_finite() && abs(p - w) <= 1e-8 * abs(*w)) {
        w = polished;
    }
    if alpha == beta {
        for k in 0..m / 2 {
            let xs = 0.5 * (x[m - 1 - k] - x[k]);
            let ws = 0.5 * (w[m - 1 - k] + w[k]);
            x[k] = -xs;
            x[m - 1 - k] = xs;
            w[k] = ws;
            w[m - 1 - k] = ws;
        }
        if m % 2 == 1 {
            x[m / 2] = 0.0;
        }
    }
    (x, w)
}

/// Classical Jacobi polynomial `P_n^{(alpha, beta)}(x)` by recurrence.
fn jacobi_value(alpha: f64, beta: f64, n: usize, x: f64) -> f64 {
    let ab = alpha + beta;
    let mut p0 = 1.0;
    if n == 0 {
        return p0;
    }
    let mut p1 = 0.5 * ((ab + 2.0) * x + alpha - beta);
    for k in 2..=n {
        let k = k as f64;
        let c = 2.0 * k + ab;
        let a1 = 2.0 * k * (k + ab) * (c - 2.0);
        let a2 = (c - 1.0) * (c * (c - 2.0) * x + alpha * alpha - beta * beta);
        let a3 = 2.0 * (k + alpha - 1.0) * (k + beta - 1.0) * c;
        let p2 = (a2 * p1 - a3 * p0) / a1;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Gauss-Legendre rule with `m` points on `[0, 1]`.
pub fn gauss_legendre(m: usize) -> QuadratureRule {
    let (x, w) = gauss_jacobi(0.0, 0.0, m);
    let pts = x.iter().map(|t| 0.5 * (1.0 + t)).collect();
    QuadratureRule {
        dim: 1,
        points: DenseMatrix::from_vec(m, 1, pts),
        weights: w.iter().map(|w| 0.5 * w).collect(),
        degree: 2 * m - 1,
        provenance: Provenance::Gauss,
    }
}

/// Number of points per direction for a Stroud rule of exactness `degree`.
pub fn stroud_points_per_direction(degree: usize) -> usize {
    degree / 2 + 1
}

/// Collapsed-coordinate conical product rule exact to at least `degree`.
pub fn stroud_conical(cell: &ReferenceCell, degree: usize) -> QuadratureRule {
    let m = stroud_points_per_direction(degree);
    let dim = cell.dim();
    let to_unit = |(x, w): (Vec<f64>, Vec<f64>), scale: f64| -> (Vec<f64>, Vec<f64>) {
        (x.iter().map(|t| 0.5 * (1.0 + t)).collect(), w.iter().map(|w| w * scale).collect())
    };
    let (u, wu) = to_unit(gauss_jacobi(0.0, 0.0, m), 0.5);
    let mut pts = Vec::new();
    let mut wts = Vec::new();
    match dim {
        1 => {
            pts.extend_from_slice(&u);
            wts.extend_from_slice(&wu);
        }
        2 => {
            let (v, wv) = to_unit(gauss_jacobi(1.0, 0.0, m), 0.25);
            for i in 0..m {
                for j in 0..m {
                    pts.push(u[i] * (1.0 - v[j]));
                    pts.push(v[j]);
                    wts.push(wu[i] * wv[j]);
                }
            }
        }
        3 => {
            let (v, wv) = to_unit(gauss_jacobi(1.0, 0.0, m), 0.25);
            let (w, ww) = to_unit(gauss_jacobi(2.0, 0.0, m), 0.125);
            for i in 0..m {
                for j in 0..m {
                    for k in 0..m {
                        pts.push(u[i] * (1.0 - v[j]) * (1.0 - w[k]));
                        pts.push(v[j] * (1.0 - w[k]));
                        pts.push(w[k]);
                        wts.push(wu[i] * wv[j] * ww[k]);
                    }
                }
            }
        }
        _ => unreachable!("reference cells have dimension 1..=3"),
    }
    let n = wts.len();
    QuadratureRule {
        dim,
        points: DenseMatrix::from_vec(n, dim, pts),
        weights: wts,
        degree: 2 * m - 1,
        provenance: Provenance::Stroud,
    }
}

/// One-point centroid rule on the triangle.
pub fn triangle_centroid_rule() -> QuadratureRule {
    let t = 1.0 / 3.0;
    QuadratureRule {
        dim: 2,
        points: DenseMatrix::from_vec(1, 2, vec![t, t]),
        weights: vec![0.5],
        degree: 1,
        provenance: Provenance::Handcoded,
    }
}

/// Three-point edge-midpoint rule on the triangle.
pub fn triangle_edge_midpoint_rule() -> QuadratureRule {
    QuadratureRule {
        dim: 2,
        points: DenseMatrix::from_vec(3, 2, vec![0.5, 0.0, 0.0, 0.5, 0.5, 0.5]),
        weights: vec![1.0 / 6.0; 3],
        degree: 2,
        provenance: Provenance::Handcoded,
    }
}

/// `int_{unit simplex} x^a = prod a_i! / (sum a + dim)!`.
pub fn monomial_integral(exponents: &[usize]) -> f64 {
    let total: usize = exponents.iter().sum();
    let mut r = 1.0 / factorial(total + exponents.len());
    for &a in exponents {
        r *= factorial(a);
    }
    r
}

const VARIABLES: [&str; 3] = ["x", "y", "z"];

/// Human-readable monomial name, e.g. `1`, `x`, `x^2*y`.
pub fn monomial_name(exponents: &[usize]) -> String {
    let parts: Vec<String> = exponents
        .iter()
        .zip(VARIABLES)
        .filter(|(&a, _)| a > 0)
        .map(|(&a, v)| if a == 1 { String::from(v) } else { format!("{v}^{a}") })
        .collect();
    if parts.is_empty() {
        String::from("1")
    } else {
        parts.join("*")
    }
}

/// Exponent tuples in `dim` variables of total degree `<= degree`, ordered
/// by total degree and then by descending lexicographic order within a degree.
pub fn monomial_exponents(dim: usize, degree: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for t in 0..=degree {
        let mut block = crate::nodes::lattice_multi_indices(dim, t);
        block.reverse();
        out.extend(block);
    }
    out
}

fn monomial_tolerance_ok(exact: f64, computed: f64) -> bool {
    let err = abs(exact - computed);
    if abs(exact) < 1e-6 {
        err <= 1e-13 || err <= 1e-12 * abs(exact)
    } else {
        err <= 1e-12 * abs(exact)
    }
}

/// Check every monomial up to `rule.degree`, reporting the first failure.
pub fn verify_exactness(rule: &QuadratureRule) -> Result<(), QuadratureError> {
    verify_exactness_to(rule, rule.degree)
}

pub fn verify_exactness_to(rule: &QuadratureRule, degree: usize) -> Result<(), QuadratureError> {
    let dim = rule.dim;
    // powers[i][k][p] = x_k^p at point i
    let powers: Vec<Vec<Vec<f64>>> = (0..rule.len())
        .map(|i| {
            (0..dim)
                .map(|k| {
                    let x = rule.points[(i, k)];
                    let mut v = Vec::with_capacity(degree + 1);
                    let mut acc = 1.0;
                    for _ in 0..=degree {
                        v.push(acc);
                        acc *= x;
                    }
                    v
                })
                .collect()
        })
        .collect();
    for exps in monomial_exponents(dim, degree) {
        let exact = monomial_integral(&exps);
        let mut s = crate::math::CompensatedSum::default();
        for (i, w) in rule.weights.iter().enumerate() {
            let mut v = *w;
            for (k, &a) in exps.iter().enumerate() {
                v *= powers[i][k][a];
            }
            s.add(v);
        }
        let computed = s.value();
        if !monomial_tolerance_ok(exact, computed) {
            return Err(QuadratureError::NotExact { monomial: monomial_name(&exps), expected: exact, computed });
        }
    }
    Ok(())
}

/// Registered simplex rules plus the Stroud fall-back. Fill it once and share
/// it read-only afterwards.
#[derive(Debug, Clone, Default)]
pub struct QuadratureRegistry {
    rules: Vec<QuadratureRule>,
}

impl QuadratureRegistry {
    /// No tabulated or hand-coded rules: everything falls back to Stroud.
    pub fn empty() -> Self {
        Self { rules: Vec::new() }
    }

    /// The hand-coded low-order triangle rules.
    pub fn builtin() -> Self {
        Self { rules: vec![triangle_centroid_rule(), triangle_edge_midpoint_rule()] }
    }

    /// Register a rule after verifying its declared exactness.
    pub fn register(&mut self, rule: QuadratureRule) -> Result<(), QuadratureError> {
        verify_exactness(&rule)?;
        self.rules.push(rule);
        Ok(())
    }

    pub fn rules(&self) -> &[QuadratureRule] {
        &self.rules
    }

    /// Smallest registered rule of the given provenance reaching `degree`.
    pub fn smallest(&self, dim: usize, degree: usize, provenance: Provenance) -> Option<&QuadratureRule> {
        self.rules
            .iter()
            .filter(|r| r.dim == dim && r.degree >= degree && r.provenance == provenance)
            .min_by_key(|r| r.len())
    }

    /// Rule with the fewest points whose exactness is at least `degree`;
    /// ties go to tabulated, then Stroud, then hand-coded rules.
    pub fn select(&self, cell: &ReferenceCell, degree: usize) -> QuadratureRule {
        let stroud = stroud_conical(cell, degree);
        let mut best = &stroud;
        for r in self.rules.iter().filter(|r| r.dim == cell.dim() && r.degree >= degree) {
            let key = (r.len(), r.provenance.tie_rank());
            if key < (best.len(), best.provenance.tie_rank()) {
                best = r;
            }
        }
        best.clone()
    }
}

/// Rule selection with only the built-in hand-coded rules available.
pub fn create_quadrature(cell: &ReferenceCell, degree: usize) -> QuadratureRule {
    QuadratureRegistry::builtin().select(cell, degree)
}

/// Points (in cell coordinates) and weights of a rule on a sub-entity; the
/// weights are scaled so they sum to the entity measure.
#[derive(Debug, Clone)]
pub struct EntityQuadrature {
    pub entity: EntityRef,
    /// Entity reference coordinates of each point.
    pub local_points: Vec<Vec<f64>>,
    /// Cell coordinates of each point.
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

pub fn entity_quadrature(
    registry: &QuadratureRegistry,
    cell: &ReferenceCell,
    entity: EntityRef,
    degree: usize,
) -> EntityQuadrature {
    if entity.entity_dim == 0 {
        let v = cell.vertices()[cell.entity_vertices(entity)[0]].clone();
        return EntityQuadrature { entity, local_points: vec![Vec::new()], points: vec![v], weights: vec![1.0], degree };
    }
    let sub = ReferenceCell::new(entity.entity_dim).expect("entity dimension is valid");
    let rule = registry.select(&sub, degree);
    let jac = cell.entity_jacobian(entity);
    let local_points: Vec<Vec<f64>> = (0..rule.len()).map(|i| rule.point(i).to_vec()).collect();
    let points = local_points.iter().map(|t| cell.entity_point(entity, t)).collect();
    let weights = rule.weights.iter().map(|w| w * jac).collect();
    EntityQuadrature { entity, local_points, points, weights, degree: rule.degree }
}
