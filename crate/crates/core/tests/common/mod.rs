#![allow(dead_code)]

use reftab_core::{DenseMatrix, ExpansionSet, ReferenceCell};

pub struct Lcg(u64);

impl Lcg {
    pub fn new(seed: u64) -> Self {
        Self(seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407))
    }

    pub fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in [-1, 1).
    pub fn signed(&mut self) -> f64 {
        2.0 * self.next_f64() - 1.0
    }
}

/// Random points strictly inside the unit simplex.
pub fn random_points(rng: &mut Lcg, dim: usize, n: usize) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(n, dim);
    let mut r = 0;
    while r < n {
        let x: Vec<f64> = (0..dim).map(|_| rng.next_f64()).collect();
        if x.iter().sum::<f64>() < 0.98 && x.iter().all(|&v| v > 0.01) {
            m.row_mut(r).copy_from_slice(&x);
            r += 1;
        }
    }
    m
}

/// A random polynomial vector field of total degree `degree` with
/// `value_size` components, stored as expansion coefficients.
pub struct PolyField {
    pub exp: ExpansionSet,
    pub coeffs: DenseMatrix,
}

impl PolyField {
    pub fn random(rng: &mut Lcg, cell: &ReferenceCell, degree: usize, value_size: usize) -> Self {
        let exp = ExpansionSet::new(cell, degree);
        let n = exp.size();
        let coeffs = DenseMatrix::from_vec(value_size, n, (0..value_size * n).map(|_| rng.signed()).collect());
        Self { exp, coeffs }
    }

    pub fn from_rows(exp: ExpansionSet, coeffs: DenseMatrix) -> Self {
        Self { exp, coeffs }
    }

    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        let p = DenseMatrix::from_vec(1, x.len(), x.to_vec());
        let v = self.exp.values(&p).unwrap();
        for (c, o) in out.iter_mut().enumerate() {
            *o = (0..self.exp.size()).map(|i| self.coeffs[(c, i)] * v[(i, 0)]).sum();
        }
    }

    /// Values and first derivatives at points: `[slot][component](point)`.
    pub fn tabulate(&self, points: &DenseMatrix) -> Vec<Vec<Vec<f64>>> {
        let t = self.exp.tabulate(points, 1).unwrap();
        t.values
            .iter()
            .map(|phi| {
                (0..self.coeffs.rows())
                    .map(|c| {
                        (0..points.rows())
                            .map(|p| (0..self.exp.size()).map(|i| self.coeffs[(c, i)] * phi[(i, p)]).sum())
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }
}
