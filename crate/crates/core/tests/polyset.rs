mod common;

use common::{random_points, Lcg};
use reftab_core::linalg::lu_factor;
use reftab_core::nodes::equispaced_simplex;
use reftab_core::quadrature::stroud_conical;
use reftab_core::{expansion_size, DenseMatrix, ExpansionSet, ReferenceCell};

fn gram_deviation(cell: &ReferenceCell, n: usize) -> f64 {
    let exp = ExpansionSet::new(cell, n);
    let rule = stroud_conical(cell, 2 * n);
    let v = exp.values(&rule.points).unwrap();
    let mut worst = 0.0f64;
    for i in 0..exp.size() {
        for j in i..exp.size() {
            let g: f64 = (0..rule.len()).map(|p| rule.weights[p] * v[(i, p)] * v[(j, p)]).sum();
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g - want).abs());
        }
    }
    worst
}

#[test]
fn orthonormal_on_triangle_to_degree_20() {
    let t = ReferenceCell::triangle();
    for n in [0, 1, 5, 10, 15, 20] {
        let d = gram_deviation(&t, n);
        assert!(d <= 1e-12, "n {n}: {d:e}");
    }
}

#[test]
fn orthonormal_on_tetrahedron_to_degree_10() {
    let t = ReferenceCell::tetrahedron();
    for n in [0, 2, 6, 10] {
        let d = gram_deviation(&t, n);
        assert!(d <= 1e-12, "n {n}: {d:e}");
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `∫ x^a` over the unit right simplex, from the Dirichlet integral.
fn exact_monomial(a: &[usize]) -> f64 {
    let s: usize = a.iter().sum();
    a.iter().map(|&k| factorial(k)).product::<f64>() / factorial(s + a.len())
}

fn monomials(dim: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for t in 0..=n {
        match dim {
            2 => (0..=t).for_each(|a| out.push(vec![t - a, a])),
            3 => {
                for b in 0..=t {
                    for c in 0..=t - b {
                        out.push(vec![t - b - c, b, c]);
                    }
                }
            }
            _ => unreachable!(),
        }
    }
    out
}

/// Recover each expansion function's monomial coefficients by collocation,
/// then check orthonormality with exact integrals and the degree hierarchy.
#[test]
fn agrees_with_exact_integration_oracle() {
    for (dim, n) in [(2, 5), (3, 4)] {
        let cell = ReferenceCell::new(dim).unwrap();
        let exp = ExpansionSet::new(&cell, n);
        let mons = monomials(dim, n);
        assert_eq!(mons.len(), expansion_size(dim, n));
        let pts = equispaced_simplex(dim, n).unwrap().cartesian();
        let mut m = DenseMatrix::zeros(mons.len(), mons.len());
        for p in 0..pts.rows() {
            for (j, a) in mons.iter().enumerate() {
                m[(p, j)] = a.iter().enumerate().map(|(k, &e)| pts[(p, k)].powi(e as i32)).product();
            }
        }
        let lu = lu_factor(&m).unwrap();
        let v = exp.values(&pts).unwrap();
        let coeffs: Vec<Vec<f64>> = (0..exp.size()).map(|i| lu.solve(v.row(i))).collect();
        for i in 0..exp.size() {
            let t = exp.degree_of(i);
            let scale = coeffs[i].iter().fold(0.0f64, |m, c| m.max(c.abs()));
            for (j, a) in mons.iter().enumerate() {
                if a.iter().sum::<usize>() > t {
                    assert!(coeffs[i][j].abs() < 1e-10 * scale, "dim {dim} fn {i} has degree > {t}");
                }
            }
            for k in i..exp.size() {
                let mut g = 0.0;
                for (ja, a) in mons.iter().enumerate() {
                    for (jb, b) in mons.iter().enumerate() {
                        let e: Vec<usize> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                        g += coeffs[i][ja] * coeffs[k][jb] * exact_monomial(&e);
                    }
                }
                let want = if i == k { 1.0 } else { 0.0 };
                assert!((g - want).abs() < 1e-8, "dim {dim} ({i},{k}): {g}");
            }
        }
    }
}

#[test]
fn derivatives_match_finite_differences() {
    let mut rng = Lcg::new(23);
    for (dim, n) in [(1, 8), (2, 7), (3, 5)] {
        let cell = ReferenceCell::new(dim).unwrap();
        let exp = ExpansionSet::new(&cell, n);
        let pts = random_points(&mut rng, dim, 5);
        let tab = exp.tabulate(&pts, 2).unwrap();
        let shifted = |p: usize, steps: &[(usize, f64)]| {
            let mut x = pts.row(p).to_vec();
            for &(k, h) in steps {
                x[k] += h;
            }
            exp.values(&DenseMatrix::from_vec(1, dim, x)).unwrap()
        };
        for p in 0..pts.rows() {
            for k in 0..dim {
                let h = 1e-5;
                let (a, b) = (shifted(p, &[(k, h)]), shifted(p, &[(k, -h)]));
                let mut d = vec![0; dim];
                d[k] = 1;
                let exact = tab.get(&d).unwrap();
                for i in 0..exp.size() {
                    let fd = (a[(i, 0)] - b[(i, 0)]) / (2.0 * h);
                    let e = exact[(i, p)];
                    assert!((fd - e).abs() <= 1e-6 * (1.0 + e.abs()), "first dim {dim} fn {i}: {fd} vs {e}");
                }
                for l in k..dim {
                    let h = 1e-4;
                    let mut d = vec![0; dim];
                    d[k] += 1;
                    d[l] += 1;
                    let exact = tab.get(&d).unwrap();
                    let pp = shifted(p, &[(k, h), (l, h)]);
                    let pm = shifted(p, &[(k, h), (l, -h)]);
                    let mp = shifted(p, &[(k, -h), (l, h)]);
                    let mm = shifted(p, &[(k, -h), (l, -h)]);
                    for i in 0..exp.size() {
                        let fd = (pp[(i, 0)] - pm[(i, 0)] - mp[(i, 0)] + mm[(i, 0)]) / (4.0 * h * h);
                        let e = exact[(i, p)];
                        assert!((fd - e).abs() <= 1e-4 * (1.0 + e.abs()), "second dim {dim} fn {i}: {fd} vs {e}");
                    }
                }
            }
        }
    }
}

#[test]
fn differentiation_matrices_reproduce_derivatives() {
    let mut rng = Lcg::new(29);
    for (dim, n) in [(1, 9), (2, 6), (3, 4)] {
        let cell = ReferenceCell::new(dim).unwrap();
        let exp = ExpansionSet::new(&cell, n);
        let pts = random_points(&mut rng, dim, 6);
        let tab = exp.tabulate(&pts, 1).unwrap();
        for k in 0..dim {
            let dm = exp.differentiation_matrix(k).unwrap();
            for i in 0..exp.size() {
                for p in 0..pts.rows() {
                    let via: f64 = (0..exp.size()).map(|j| dm[(j, i)] * tab.base()[(j, p)]).sum();
                    let e = tab.grad(k)[(i, p)];
                    assert!((via - e).abs() <= 1e-10 * (1.0 + e.abs()));
                }
            }
        }
    }
}

#[test]
fn bad_inputs_are_rejected() {
    let exp = ExpansionSet::new(&ReferenceCell::triangle(), 3);
    assert!(exp.tabulate(&DenseMatrix::zeros(2, 3), 0).is_err());
    assert!(exp.tabulate(&DenseMatrix::zeros(2, 2), 3).is_err());
    assert!(exp.differentiation_matrix(2).is_err());
}
