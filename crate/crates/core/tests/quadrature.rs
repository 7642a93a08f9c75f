use reftab_core::quadrature::{
    entity_quadrature, gauss_legendre, stroud_conical, verify_exactness, Provenance, QuadratureError, QuadratureRegistry,
};
use reftab_core::{create_quadrature, DenseMatrix, EntityRef, QuadratureRule, ReferenceCell};

#[test]
fn stroud_rules_are_exact_with_tensor_counts() {
    for dim in 1..=3 {
        let cell = ReferenceCell::new(dim).unwrap();
        for q in 0..=20 {
            let r = stroud_conical(&cell, q);
            assert_eq!(r.len(), (q / 2 + 1).pow(dim as u32), "dim {dim} q {q}");
            assert!(r.degree >= q);
            verify_exactness(&r).unwrap_or_else(|e| panic!("dim {dim} q {q}: {e}"));
            for p in 0..r.len() {
                assert!(cell.contains(r.point(p), 0.0));
            }
        }
    }
}

#[test]
fn gauss_legendre_integrates_to_its_degree() {
    for m in 1..=25 {
        let r = gauss_legendre(m);
        verify_exactness(&r).unwrap();
        if m > 10 {
            continue;
        }
        // the error term (m!)^4 / ((2m+1) ((2m)!)^2) is still visible here
        let k = 2 * m as i32;
        let got = r.integrate(|x| x[0].powi(k));
        assert!((got - 1.0 / (k as f64 + 1.0)).abs() > 1e-14, "m {m} should not be exact at {k}");
    }
}

#[test]
fn registry_prefers_fewer_points() {
    let tri = ReferenceCell::triangle();
    let reg = QuadratureRegistry::builtin();
    assert_eq!(create_quadrature(&tri, 1).len(), 1);
    assert_eq!(reg.select(&tri, 2).len(), 3);
    assert_eq!(reg.select(&tri, 6).provenance, Provenance::Stroud);
    // an exact 3-point degree-2 table beats the 4-point conical rule but not
    // the 3-point hand-coded one on ties
    let mut reg = QuadratureRegistry::empty();
    let pts = DenseMatrix::from_rows(&[[1.0 / 6.0, 1.0 / 6.0], [2.0 / 3.0, 1.0 / 6.0], [1.0 / 6.0, 2.0 / 3.0]]);
    reg.register(QuadratureRule::new(2, pts, vec![1.0 / 6.0; 3], 2, Provenance::Tabulated).unwrap()).unwrap();
    let r = reg.select(&tri, 2);
    assert_eq!((r.len(), r.provenance), (3, Provenance::Tabulated));
}

#[test]
fn inexact_tables_are_rejected_with_the_monomial() {
    let pts = DenseMatrix::from_rows(&[[0.25, 0.25]]);
    let bad = QuadratureRule::new(2, pts, vec![0.5], 2, Provenance::Tabulated).unwrap();
    let mut reg = QuadratureRegistry::empty();
    match reg.register(bad) {
        Err(QuadratureError::NotExact { monomial, .. }) => assert_eq!(monomial, "x"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn entity_rules_integrate_over_subentities() {
    let tet = ReferenceCell::tetrahedron();
    let reg = QuadratureRegistry::builtin();
    for dim in 1..=3 {
        for e in tet.entities(dim).collect::<Vec<_>>() {
            let r = entity_quadrature(&reg, &tet, e, 4);
            let total: f64 = r.weights.iter().sum();
            assert!((total - tet.entity_measure(e)).abs() < 1e-13);
        }
    }
    // ∫ over the slanted face of x^2 equals |face| * 1/6 (area coordinates)
    let face = EntityRef::new(2, 0);
    let r = entity_quadrature(&reg, &tet, face, 2);
    let got: f64 = (0..r.weights.len()).map(|i| r.weights[i] * r.points[i][0].powi(2)).sum();
    assert!((got - tet.entity_measure(face) / 6.0).abs() < 1e-14);
}
