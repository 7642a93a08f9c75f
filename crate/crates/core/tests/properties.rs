use proptest::prelude::*;
use reftab_core::elements::lagrange;
use reftab_core::linalg::{lu_factor, sym_eig};
use reftab_core::nodes::NodeFamily;
use reftab_core::quadrature::{gauss_jacobi, stroud_conical};
use reftab_core::{DenseMatrix, ExpansionSet, NodeVariant, ReferenceCell};

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn variant() -> impl Strategy<Value = NodeVariant> {
    prop_oneof![Just(NodeVariant::Equispaced), Just(NodeVariant::Spectral)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn node_families_are_barycentric(dim in 1usize..=3, n in 1usize..=9, v in variant()) {
        let f = NodeFamily::new(v, dim, n).unwrap();
        for r in 0..f.len() {
            let row = f.barycentric.row(r);
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            prop_assert!(row.iter().all(|&b| b >= -1e-15));
        }
    }

    #[test]
    fn gauss_jacobi_weights_carry_the_weight_mass(a in 0u32..=4, b in 0u32..=4, m in 1usize..=30) {
        let (x, w) = gauss_jacobi(a as f64, b as f64, m);
        let mass = 2f64.powi((a + b + 1) as i32) * factorial(a) * factorial(b) / factorial(a + b + 1);
        prop_assert!((w.iter().sum::<f64>() - mass).abs() < 1e-13 * mass);
        prop_assert!(w.iter().all(|&v| v > 0.0));
        prop_assert!(x.windows(2).all(|p| p[0] < p[1]));
        prop_assert!(x.iter().all(|&t| t > -1.0 && t < 1.0));
    }

    #[test]
    fn lu_solves_diagonally_dominant_systems(n in 1usize..=12, seed in proptest::collection::vec(-1.0f64..1.0, 144 + 12)) {
        let mut a = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = seed[i * 12 + j] + if i == j { n as f64 } else { 0.0 };
            }
        }
        let b: Vec<f64> = seed[144..144 + n].to_vec();
        let x = lu_factor(&a).unwrap().solve(&b);
        let r = a.matvec(&x);
        for i in 0..n {
            prop_assert!((r[i] - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_eigen_reconstructs(n in 1usize..=8, seed in proptest::collection::vec(-1.0f64..1.0, 64)) {
        let mut a = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                a[(i, j)] = seed[i * 8 + j];
                a[(j, i)] = seed[i * 8 + j];
            }
        }
        let e = sym_eig(&a).unwrap();
        prop_assert!(e.values.windows(2).all(|p| p[0] <= p[1]));
        for k in 0..n {
            let v = e.vectors.column(k);
            let av = a.matvec(&v);
            for i in 0..n {
                prop_assert!((av[i] - e.values[k] * v[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lagrange_is_dual_to_its_nodes(dim in 1usize..=3, k in 1usize..=5, v in variant()) {
        let e = lagrange(&ReferenceCell::new(dim).unwrap(), k, v).unwrap();
        let err = e.duality_matrix().sub(&DenseMatrix::identity(e.space_dim())).max_abs();
        prop_assert!(err < 1e-11);
    }

    #[test]
    fn conical_rules_integrate_expansion_functions(dim in 1usize..=3, n in 0usize..=6) {
        // ∫ phi_i = 0 except for the constant, which integrates to sqrt(|T|)
        let cell = ReferenceCell::new(dim).unwrap();
        let exp = ExpansionSet::new(&cell, n);
        let rule = stroud_conical(&cell, n);
        let v = exp.values(&rule.points).unwrap();
        for i in 0..exp.size() {
            let s: f64 = (0..rule.len()).map(|p| rule.weights[p] * v[(i, p)]).sum();
            let want = if i == 0 { cell.volume().sqrt() } else { 0.0 };
            prop_assert!((s - want).abs() < 1e-13);
        }
    }
}
