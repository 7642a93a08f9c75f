use reftab_core::elements::lagrange;
use reftab_core::nodes::{gauss_lobatto_1d, NodeFamily};
use reftab_core::reference_cells::make_points;
use reftab_core::{EntityRef, NodeVariant, ReferenceCell};

fn contains(rows: &[Vec<f64>], p: &[f64]) -> bool {
    rows.iter().any(|r| r.iter().zip(p).all(|(a, b)| (a - b).abs() < 1e-13))
}

fn bary_rows(f: &NodeFamily) -> Vec<Vec<f64>> {
    (0..f.len()).map(|r| f.barycentric.row(r).to_vec()).collect()
}

#[test]
fn families_are_symmetric_under_vertex_permutations() {
    for variant in [NodeVariant::Equispaced, NodeVariant::Spectral] {
        for (dim, n) in [(2, 7), (2, 12), (3, 6)] {
            let f = NodeFamily::new(variant, dim, n).unwrap();
            let rows = bary_rows(&f);
            for r in &rows {
                // cyclic shift and a transposition generate all permutations
                let mut shifted = r.clone();
                shifted.rotate_left(1);
                let mut swapped = r.clone();
                swapped.swap(0, 1);
                assert!(contains(&rows, &shifted) && contains(&rows, &swapped), "{variant} dim {dim} n {n}");
            }
        }
    }
}

#[test]
fn facet_traces_match_lower_dimensional_families() {
    for n in [3, 6, 9] {
        // triangle edge x = 0 carries the GLL set mapped to [0, 1]
        let f = NodeFamily::new(NodeVariant::Spectral, 2, n).unwrap();
        let gll = gauss_lobatto_1d(n + 1).unwrap();
        let mut on_edge: Vec<f64> = (0..f.len()).filter(|&r| f.barycentric[(r, 1)].abs() < 1e-14).map(|r| f.barycentric[(r, 2)]).collect();
        on_edge.sort_by(f64::total_cmp);
        assert_eq!(on_edge.len(), n + 1);
        for (a, b) in on_edge.iter().zip(&gll) {
            assert!((a - 0.5 * (b + 1.0)).abs() < 1e-13, "n {n}");
        }
        // tetrahedron face z = 0 carries the triangle set
        let tet = NodeFamily::new(NodeVariant::Spectral, 3, n).unwrap();
        let face: Vec<Vec<f64>> = (0..tet.len())
            .filter(|&r| tet.barycentric[(r, 3)].abs() < 1e-14)
            .map(|r| tet.barycentric.row(r)[..3].to_vec())
            .collect();
        let tri = bary_rows(&f);
        assert_eq!(face.len(), tri.len());
        assert!(face.iter().all(|p| contains(&tri, p)));
    }
}

#[test]
fn interior_entity_points_are_interior() {
    let tet = ReferenceCell::tetrahedron();
    for n in 3..=7 {
        let pts = make_points(&tet, EntityRef::new(3, 0), n, NodeVariant::Spectral).unwrap();
        assert_eq!(pts.len(), (n - 1) * (n - 2) * (n - 3) / 6);
        for p in &pts {
            let b = tet.barycentric(p);
            assert!(b.iter().all(|&v| v > 1e-3));
        }
        let face = make_points(&tet, EntityRef::new(2, 1), n, NodeVariant::Spectral).unwrap();
        assert_eq!(face.len(), (n - 1) * (n - 2) / 2);
        for p in &face {
            assert!(tet.facet_distance(1, p).abs() < 1e-14);
        }
    }
}

#[test]
fn spectral_nodes_condition_better() {
    let tri = ReferenceCell::triangle();
    for k in [4, 8, 12] {
        let eq = lagrange(&tri, k, NodeVariant::Equispaced).unwrap().condition_number().unwrap();
        let sp = lagrange(&tri, k, NodeVariant::Spectral).unwrap().condition_number().unwrap();
        assert!(sp <= eq, "k {k}: {sp} > {eq}");
    }
}
