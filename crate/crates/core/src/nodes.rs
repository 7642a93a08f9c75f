//! Interpolation node families: 1D Gauss-Lobatto-Legendre points,
//! equispaced simplex lattices, and the recursive GLL-based simplex family.
//!
//! Points are carried in barycentric form. For a `d`-simplex a point is a
//! `(d+1)`-tuple whose entry `i` is the weight of vertex `i`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::linalg::DenseMatrix;
use crate::math::{abs, binomial};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NodeError {
    #[error("Gauss-Lobatto rule needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("unknown node variant {0:?}")]
    UnknownVariant(String),
    #[error("unsupported simplex dimension {0}")]
    UnsupportedDimension(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeVariant {
    Equispaced,
    /// Recursively defined GLL-type nodes.
    Spectral,
}

impl NodeVariant {
    pub fn name(self) -> &'static str {
        match self {
            NodeVariant::Equispaced => "equispaced",
            NodeVariant::Spectral => "spectral",
        }
    }
}

impl fmt::Display for NodeVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NodeVariant {
    type Err = NodeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "equispaced" => Ok(NodeVariant::Equispaced),
            "spectral" | "gll" => Ok(NodeVariant::Spectral),
            other => Err(NodeError::UnknownVariant(other.into())),
        }
    }
}

/// Legendre `P_n(x)` with first and second derivatives.
fn legendre_with_derivatives(n: usize, x: f64) -> (f64, f64, f64) {
    let (mut p0, mut d0, mut s0) = (1.0, 0.0, 0.0);
    if n == 0 {
        return (p0, d0, s0);
    }
    let (mut p1, mut d1, mut s1) = (x, 1.0, 0.0);
    for k in 1..n {
        let kf = k as f64;
        let a = (2.0 * kf + 1.0) / (kf + 1.0);
        let b = kf / (kf + 1.0);
        let p2 = a * x * p1 - b * p0;
        let d2 = a * (p1 + x * d1) - b * d0;
        let s2 = a * (2.0 * d1 + x * s1) - b * s0;
        (p0, d0, s0) = (p1, d1, s1);
        (p1, d1, s1) = (p2, d2, s2);
    }
    (p1, d1, s1)
}

/// Safeguarded Newton iteration for a root of `f` bracketed by `[lo, hi]`.
fn bracketed_root(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> (f64, f64)) -> f64 {
    let (flo, _) = f(lo);
    if flo == 0.0 {
        return lo;
    }
    let (fhi, _) = f(hi);
    if fhi == 0.0 {
        return hi;
    }
    debug_assert!(flo * fhi < 0.0, "root is not bracketed");
    // orient so that f(lo) < 0
    if flo > 0.0 {
        core::mem::swap(&mut lo, &mut hi);
    }
    let mut x = 0.5 * (lo + hi);
    let mut dx_old = abs(hi - lo);
    let mut dx = dx_old;
    let (mut fx, mut dfx) = f(x);
    for _ in 0..200 {
        let newton_leaves = ((x - hi) * dfx - fx) * ((x - lo) * dfx - fx) > 0.0;
        if newton_leaves || abs(2.0 * fx) > abs(dx_old * dfx) {
            dx_old = dx;
            dx = 0.5 * (hi - lo);
            x = lo + dx;
        } else {
            dx_old = dx;
            dx = fx / dfx;
            x -= dx;
        }
        if abs(dx) <= 1e-16 * (1.0 + abs(x)) {
            break;
        }
        (fx, dfx) = f(x);
        if fx == 0.0 {
            break;
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
    }
    x
}

/// Roots of the Legendre polynomial `P_n`, ascending; each level is
/// bracketed by the interlacing roots of `P_{n-1}`.
fn legendre_roots(n: usize) -> Vec<f64> {
    let mut roots: Vec<f64> = Vec::new();
    for k in 1..=n {
        let mut bounds = Vec::with_capacity(k + 1);
        bounds.push(-1.0);
        bounds.extend_from_slice(&roots);
        bounds.push(1.0);
        roots = bounds
            .windows(2)
            .map(|w| {
                bracketed_root(w[0], w[1], |x| {
                    let (p, d, _) = legendre_with_derivatives(k, x);
                    (p, d)
                })
            })
            .collect();
    }
    roots
}

/// Gauss-Lobatto-Legendre points on `[-1, 1]`, ascending: the endpoints plus
/// the roots of `P'_{m-1}`.
pub fn gauss_lobatto_1d(m: usize) -> Result<Vec<f64>, NodeError> {
    if m < 2 {
        return Err(NodeError::TooFewPoints(m));
    }
    let n = m - 1;
    let mut pts = Vec::with_capacity(m);
    pts.push(-1.0);
    let roots = legendre_roots(n);
    for w in roots.windows(2) {
        pts.push(bracketed_root(w[0], w[1], |x| {
            let (_, d, s) = legendre_with_derivatives(n, x);
            (d, s)
        }));
    }
    pts.push(1.0);
    for k in 0..m / 2 {
        let v = 0.5 * (pts[m - 1 - k] - pts[k]);
        pts[k] = -v;
        pts[m - 1 - k] = v;
    }
    if m % 2 == 1 {
        pts[m / 2] = 0.0;
    }
    Ok(pts)
}

/// GLL points mapped to `[0, 1]` with exact mirror symmetry `x[k] + x[n-k] = 1`.
fn gll_unit(n: usize) -> Vec<f64> {
    if n == 0 {
        return vec![0.5];
    }
    let t = gauss_lobatto_1d(n + 1).expect("n + 1 >= 2");
    let mut x: Vec<f64> = t.iter().map(|t| 0.5 * (1.0 + t)).collect();
    for k in 0..=n / 2 {
        x[n - k] = 1.0 - x[k];
    }
    if n % 2 == 0 {
        x[n / 2] = 0.5;
    }
    x[0] = 0.0;
    x[n] = 1.0;
    x
}

/// All `parts`-tuples of nonnegative integers summing to `n`, in ascending
/// lexicographic order.
pub fn lattice_multi_indices(parts: usize, n: usize) -> Vec<Vec<usize>> {
    fn fill(parts: usize, n: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            prefix.push(n);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 0..=n {
            prefix.push(first);
            fill(parts - 1, n - first, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if parts == 0 {
        return out;
    }
    fill(parts, n, &mut Vec::with_capacity(parts), &mut out);
    out
}

/// Lattice multi-indices with every entry at least one (strict interior).
pub fn interior_multi_indices(parts: usize, n: usize) -> Vec<Vec<usize>> {
    if n < parts {
        return Vec::new();
    }
    lattice_multi_indices(parts, n - parts)
        .into_iter()
        .map(|mut a| {
            a.iter_mut().for_each(|v| *v += 1);
            a
        })
        .collect()
}

/// Evaluator for the recursive simplex construction; holds the GLL families
/// of every degree up to `n`.
struct RecursiveNodes {
    gll: Vec<Vec<f64>>,
}

impl RecursiveNodes {
    fn new(n: usize) -> Self {
        Self { gll: (0..=n).map(gll_unit).collect() }
    }

    fn point(&self, n: usize, alpha: &[usize]) -> Vec<f64> {
        let d = alpha.len() - 1;
        if d == 0 {
            return vec![1.0];
        }
        if n == 0 {
            return vec![1.0 / (d + 1) as f64; d + 1];
        }
        let xn = &self.gll[n];
        if d == 1 {
            return vec![xn[alpha[0]], xn[alpha[1]]];
        }
        let mut b = vec![0.0; d + 1];
        let mut weight = 0.0;
        let mut sub = Vec::with_capacity(d);
        for i in 0..=d {
            let n_sub = n - alpha[i];
            let w = xn[n_sub];
            if w == 0.0 {
                continue;
            }
            sub.clear();
            sub.extend(alpha.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &a)| a));
            let br = self.point(n_sub, &sub);
            for (k, v) in br.iter().enumerate() {
                let slot = if k < i { k } else { k + 1 };
                b[slot] += w * v;
            }
            weight += w;
        }
        b.iter_mut().for_each(|v| *v /= weight);
        b
    }
}

/// Barycentric coordinates of the lattice points `multi_indices` (each of
/// length `d+1`, summing to `n`) for the requested variant.
pub fn barycentric_points(variant: NodeVariant, n: usize, multi_indices: &[Vec<usize>]) -> DenseMatrix {
    let parts = multi_indices.first().map_or(1, |a| a.len());
    let mut out = DenseMatrix::zeros(multi_indices.len(), parts);
    match variant {
        NodeVariant::Equispaced => {
            for (r, a) in multi_indices.iter().enumerate() {
                for (k, &ak) in a.iter().enumerate() {
                    out[(r, k)] = if n == 0 { 1.0 / parts as f64 } else { ak as f64 / n as f64 };
                }
            }
        }
        NodeVariant::Spectral => {
            let rec = RecursiveNodes::new(n);
            for (r, a) in multi_indices.iter().enumerate() {
                out.row_mut(r).copy_from_slice(&rec.point(n, a));
            }
        }
    }
    out
}

/// A full node family of degree `n` on the `dim`-simplex.
#[derive(Debug, Clone)]
pub struct NodeFamily {
    pub variant: NodeVariant,
    pub dim: usize,
    pub degree: usize,
    pub multi_indices: Vec<Vec<usize>>,
    /// `len x (dim+1)` barycentric coordinates.
    pub barycentric: DenseMatrix,
}

impl NodeFamily {
    pub fn new(variant: NodeVariant, dim: usize, n: usize) -> Result<Self, NodeError> {
        if !(1..=3).contains(&dim) {
            return Err(NodeError::UnsupportedDimension(dim));
        }
        let multi_indices = lattice_multi_indices(dim + 1, n);
        debug_assert_eq!(multi_indices.len(), binomial(n + dim, dim));
        let barycentric = barycentric_points(variant, n, &multi_indices);
        Ok(Self { variant, dim, degree: n, multi_indices, barycentric })
    }

    pub fn len(&self) -> usize {
        self.multi_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.multi_indices.is_empty()
    }

    /// Cartesian coordinates on the unit right simplex (`x_j = b_{j+1}`).
    pub fn cartesian(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.len(), self.dim);
        for r in 0..self.len() {
            for j in 0..self.dim {
                out[(r, j)] = self.barycentric[(r, j + 1)];
            }
        }
        out
    }
}

/// The lattice `{alpha / n : |alpha| = n}`.
pub fn equispaced_simplex(dim: usize, n: usize) -> Result<NodeFamily, NodeError> {
    NodeFamily::new(NodeVariant::Equispaced, dim, n)
}

/// Recursive, parameter-free GLL-type family: the `dim = 1` case is the GLL
/// set, and each point is a weighted blend of the lower-dimensional family
/// evaluated on the facets.
pub fn recursive_simplex(dim: usize, n: usize) -> Result<NodeFamily, NodeError> {
    NodeFamily::new(NodeVariant::Spectral, dim, n)
}
