use reftab_core::fdm::{fdm_residual, fdm_basis_1d, fdm_dg_basis_1d, tensor_sparsity_2d};
use reftab_core::DenseMatrix;

#[test]
fn identities_hold_up_to_degree_24() {
    for p in 1..=24 {
        let b = fdm_basis_1d(p).unwrap();
        assert_eq!(b.num_interior(), p - 1);
        let r = fdm_residual(&b);
        assert!(r <= 1e-10, "p {p}: {r:e}");
        assert!(b.eigenvalues.iter().all(|&l| l > 0.0));
        assert!(b.eigenvalues.windows(2).all(|w| w[0] < w[1]), "p {p}");
    }
}

#[test]
fn cubic_matches_parity_oracle() {
    // bubbles (1-x^2) and x(1-x^2) decouple by parity:
    // 8/3 / (16/15) = 5/2 and (8/5) / (16/105) = 21/2
    let b = fdm_basis_1d(3).unwrap();
    assert!((b.eigenvalues[0] - 2.5).abs() < 1e-12);
    assert!((b.eigenvalues[1] - 10.5).abs() < 1e-11);
    let xs = [-0.8, -0.1, 0.45, 0.95];
    let (v, _) = b.evaluate(&b.interior, &xs);
    for (q, x) in xs.iter().enumerate() {
        let bubble = 1.0 - x * x;
        assert!((v[(0, q)] - (15.0f64 / 16.0).sqrt() * bubble).abs() < 1e-12);
        assert!((v[(1, q)] + (105.0f64 / 16.0).sqrt() * x * bubble).abs() < 1e-12);
    }
}

#[test]
fn one_dimensional_blocks() {
    for p in [2, 5, 9] {
        let b = fdm_basis_1d(p).unwrap();
        let (k, m) = b.gram_matrices();
        for i in 2..=p {
            for j in 2..=p {
                let delta = if i == j { 1.0 } else { 0.0 };
                assert!((m[(i, j)] - delta).abs() < 1e-10);
                assert!((k[(i, j)] - b.eigenvalues[i - 2] * delta).abs() < 1e-10 * b.eigenvalues[p - 2]);
            }
            // vertex functions are L2-orthogonal to the interior
            assert!(m[(0, i)].abs() < 1e-12 && m[(1, i)].abs() < 1e-12);
        }
        let (ends, _) = b.evaluate(&b.vertex, &[-1.0, 1.0]);
        assert!((ends[(0, 0)] - 1.0).abs() < 1e-12 && ends[(0, 1)].abs() < 1e-12);
        assert!(ends[(1, 0)].abs() < 1e-12 && (ends[(1, 1)] - 1.0).abs() < 1e-12);
    }
}

#[test]
fn dg_dual_basis() {
    for p in 1..=12 {
        let dg = fdm_dg_basis_1d(p).unwrap();
        assert_eq!(dg.space_dim(), p);
        let err = dg.duality_matrix().sub(&DenseMatrix::identity(p)).max_abs();
        assert!(err < 1e-10, "p {p}: {err:e}");
    }
    let dg = fdm_dg_basis_1d(1).unwrap();
    // cell average of the constant L_0 = 1/sqrt(2)
    assert!((dg.vandermonde[(0, 0)] - 0.5 * 2f64.sqrt()).abs() < 1e-15);
    // p = 2: moments against 1 and s'_1, which is a multiple of x = sqrt(2/3) L_1
    let dg = fdm_dg_basis_1d(2).unwrap();
    assert!(dg.dual[(1, 0)].abs() < 1e-14 && dg.dual[(0, 1)].abs() < 1e-14);
    let slope = -2.0 * (15.0f64 / 16.0).sqrt();
    let want = slope * (2.0f64 / 3.0).sqrt() / 2.5;
    assert!((dg.dual[(1, 1)] - want).abs() < 1e-12);
}

#[test]
fn tensor_sparsity_stays_bounded() {
    let s2 = tensor_sparsity_2d(2).unwrap();
    assert_eq!(s2.dim, 9);
    let ratio = |p: usize| {
        let s = tensor_sparsity_2d(p).unwrap();
        assert_eq!(s.dim, (p + 1) * (p + 1));
        assert!(s.nnz_mass <= s.nnz_stiffness);
        s.nnz_stiffness as f64 / (p * p) as f64
    };
    assert!(ratio(6) <= 40.0);
    let base = ratio(4);
    for p in 5..=16 {
        assert!(ratio(p) <= 2.0 * base, "p {p}");
    }
    // far below the dense count
    let s = tensor_sparsity_2d(12).unwrap();
    assert!(s.nnz_stiffness * 5 < s.dim * s.dim);
}
