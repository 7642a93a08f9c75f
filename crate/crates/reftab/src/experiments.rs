//! The experiments behind the command-line tool. Each returns CSV tables.

use std::ops::RangeInclusive;
use std::time::Instant;

use reftab_core::elements::{create_element, ElementSpec};
use reftab_core::fdm::{fdm_basis_1d, fdm_residual, tensor_sparsity_2d};
use reftab_core::linalg::{lu_factor, LinalgError};
use reftab_core::meshes::{divergence_norm, error_norms, global_interpolate, unit_cube_mesh, unit_square_mesh};
use reftab_core::quadrature::{stroud_points_per_direction, Provenance};
use reftab_core::{
    CiarletElement, DenseMatrix, DofVariant, ElementError, ElementFamily, FdmError, MeshError, NodeVariant, NormKind,
    QuadratureRegistry, ReferenceCell, SimplicialMesh,
};

use crate::fields::NamedField;
use crate::output::{num, opt_num, Table};
use crate::rng::Rng;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("{0}")]
    Usage(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl From<ElementError> for ExperimentError {
    fn from(e: ElementError) -> Self {
        match e {
            ElementError::Unisolvence { .. } | ElementError::Linalg(_) => ExperimentError::Numerical(e.to_string()),
            _ => ExperimentError::Usage(e.to_string()),
        }
    }
}

impl From<MeshError> for ExperimentError {
    fn from(e: MeshError) -> Self {
        match e {
            MeshError::SingularMass { .. } => ExperimentError::Numerical(e.to_string()),
            _ => ExperimentError::Usage(e.to_string()),
        }
    }
}

impl From<FdmError> for ExperimentError {
    fn from(e: FdmError) -> Self {
        match e {
            FdmError::Linalg(_) => ExperimentError::Numerical(e.to_string()),
            _ => ExperimentError::Usage(e.to_string()),
        }
    }
}

impl From<LinalgError> for ExperimentError {
    fn from(e: LinalgError) -> Self {
        ExperimentError::Numerical(e.to_string())
    }
}

type Result<T> = std::result::Result<T, ExperimentError>;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn cell(dim: usize) -> Result<ReferenceCell> {
    ReferenceCell::new(dim).map_err(|e| ExperimentError::Usage(e.to_string()))
}

/// Condition number of the Lagrange Vandermonde matrix, and the relative
/// forward and backward errors of solving `V^T x = b` for a random `x`.
pub fn conditioning(dim: usize, degrees: RangeInclusive<usize>, variant: NodeVariant, seed: u64) -> Result<Table> {
    let c = cell(dim)?;
    let mut t = Table::new(&["deg", "kappa", "forward", "backward"]).named(variant.name());
    for deg in degrees {
        let e = reftab_core::elements::lagrange(&c, deg, variant)?;
        let kappa = e.condition_number()?;
        let mut rng = Rng::new(seed.wrapping_add(deg as u64));
        let x: Vec<f64> = (0..e.space_dim()).map(|_| rng.symmetric()).collect();
        let b = e.vandermonde.tr_matvec(&x);
        let xh = lu_factor(&e.vandermonde)?.solve_transpose(&b);
        let dx: Vec<f64> = x.iter().zip(&xh).map(|(a, b)| a - b).collect();
        let r: Vec<f64> = e.vandermonde.tr_matvec(&xh).iter().zip(&b).map(|(a, b)| a - b).collect();
        t.push(vec![deg.to_string(), num(kappa), num(norm(&dx) / norm(&x)), num(norm(&r) / norm(&b))]);
    }
    Ok(t)
}

/// Two triangles on `[-1, 1]^2` or six tetrahedra on `[-1, 1]^3`.
pub fn biunit_mesh(dim: usize) -> Result<SimplicialMesh> {
    Ok(match dim {
        2 => unit_square_mesh(1, 1, [-1.0; 2], [1.0; 2])?,
        3 => unit_cube_mesh(1, 1, 1, [-1.0; 3], [1.0; 3])?,
        _ => return Err(ExperimentError::Usage(format!("interpolation error needs dimension 2 or 3, got {dim}"))),
    })
}

/// Max-norm error of Lagrange interpolation of the Runge function.
pub fn interp_error(dim: usize, degrees: RangeInclusive<usize>) -> Result<Table> {
    let mesh = biunit_mesh(dim)?;
    let f = NamedField::runge(dim).expect("dimension checked by the mesh");
    let c = cell(dim)?;
    let mut t = Table::new(&["deg", "equispaced", "spectral"]);
    for deg in degrees {
        let mut row = vec![deg.to_string()];
        for v in [NodeVariant::Equispaced, NodeVariant::Spectral] {
            let e = reftab_core::elements::lagrange(&c, deg, v)?;
            let coeffs = global_interpolate(&mesh, &e, &f)?;
            row.push(num(error_norms(&mesh, &e, &coeffs, &f, NormKind::Linf)?));
        }
        t.push(row);
    }
    Ok(t)
}

pub fn cube_mesh(n: [usize; 3]) -> Result<SimplicialMesh> {
    Ok(unit_cube_mesh(n[0], n[1], n[2], [0.0; 3], [1.0; 3])?)
}

fn vector_element(
    family: ElementFamily,
    degree: usize,
    variant: DofVariant,
    registry: &QuadratureRegistry,
) -> Result<CiarletElement> {
    let mut spec = ElementSpec::new(family, 3, degree);
    spec.dofs = variant;
    Ok(create_element(&spec, registry)?)
}

/// L2 norm of the divergence of the degree-2 Raviart-Thomas interpolant of a
/// divergence-free field, one row per DOF variant.
pub fn div_preservation(mesh: [usize; 3], variants: &[DofVariant], registry: &QuadratureRegistry) -> Result<Table> {
    let m = cube_mesh(mesh)?;
    let mut t = Table::new(&["variant", "divnorm"]);
    for &v in variants {
        let e = vector_element(ElementFamily::RaviartThomas, 2, v, registry)?;
        let coeffs = global_interpolate(&m, &e, &NamedField::Curl3d)?;
        t.push(vec![v.to_string(), num(divergence_norm(&m, &e, &coeffs)?)]);
    }
    Ok(t)
}

/// Interpolation errors under uniform refinement of the unit cube, starting
/// from 2 boxes per direction.
pub fn convergence(
    family: ElementFamily,
    degree: usize,
    variant: DofVariant,
    refinements: RangeInclusive<usize>,
    registry: &QuadratureRegistry,
) -> Result<Table> {
    if family.mapping() != reftab_core::MappingKind::ContravariantPiola {
        return Err(ExperimentError::Usage(format!("convergence study needs an H(div) element, got {family}")));
    }
    let e = vector_element(family, degree, variant, registry)?;
    let f = NamedField::Smooth3d;
    let mut t = Table::new(&["ref", "l2", "l2order", "hdiv", "hdivorder"]).named(variant.to_string());
    let mut prev: Option<(f64, f64)> = None;
    for r in refinements {
        let n = 2usize << r;
        let m = cube_mesh([n; 3])?;
        let coeffs = global_interpolate(&m, &e, &f)?;
        let l2 = error_norms(&m, &e, &coeffs, &f, NormKind::L2)?;
        let hdiv = error_norms(&m, &e, &coeffs, &f, NormKind::Hdiv)?;
        let orders = prev.map(|(a, b)| ((a / l2).log2(), (b / hdiv).log2()));
        t.push(vec![r.to_string(), num(l2), opt_num(orders.map(|o| o.0)), num(hdiv), opt_num(orders.map(|o| o.1))]);
        prev = Some((l2, hdiv));
    }
    Ok(t)
}

/// Point counts of the conical rules and of the smallest loaded table
/// reaching each degree.
pub fn quad_count(dim: usize, degrees: RangeInclusive<usize>, registry: &QuadratureRegistry) -> Result<Table> {
    cell(dim)?;
    let mut t = Table::new(&["deg", "stroud", "tabulated"]);
    for q in degrees {
        let stroud = stroud_points_per_direction(q).pow(dim as u32);
        let tab = registry.smallest(dim, q, Provenance::Tabulated).map(|r| r.len().to_string()).unwrap_or_default();
        t.push(vec![q.to_string(), stroud.to_string(), tab]);
    }
    Ok(t)
}

/// Identity residuals of the fast-diagonalization basis and the sparsity of
/// the 2D tensor-product stiffness matrix.
pub fn fdm(degrees: RangeInclusive<usize>) -> Result<Table> {
    let mut t = Table::new(&["p", "eqn16_residual", "nnz2d", "dim2d"]);
    for p in degrees {
        let b = fdm_basis_1d(p)?;
        let s = tensor_sparsity_2d(p)?;
        t.push(vec![p.to_string(), num(fdm_residual(&b)), s.nnz_stiffness.to_string(), s.dim.to_string()]);
    }
    Ok(t)
}

/// Basis values at `points` (defaults to the element's interpolation
/// points), one row per point.
pub fn tabulate(spec: &ElementSpec, points: Option<&DenseMatrix>, registry: &QuadratureRegistry) -> Result<Table> {
    let e = create_element(spec, registry)?;
    let pts = points.unwrap_or_else(|| e.interpolation_points());
    if pts.cols() != spec.dim {
        return Err(ExperimentError::Usage(format!("points have {} coordinates, element needs {}", pts.cols(), spec.dim)));
    }
    let tab = e.tabulate(pts, 0)?;
    let vs = e.value_size;
    let mut header: Vec<String> = ["x", "y", "z"][..spec.dim].iter().map(|s| s.to_string()).collect();
    for i in 0..e.space_dim() {
        if vs == 1 {
            header.push(format!("phi{i}"));
        } else {
            header.extend((0..vs).map(|c| format!("phi{i}_{c}")));
        }
    }
    let mut t = Table { name: None, header, rows: Vec::new() };
    for p in 0..pts.rows() {
        let mut row: Vec<String> = pts.row(p).iter().map(|&x| num(x)).collect();
        for i in 0..e.space_dim() {
            row.extend((0..vs).map(|c| num(tab.get(0, i, c, p))));
        }
        t.push(row);
    }
    Ok(t)
}

/// Wall-clock seconds to construct each element and to tabulate it with
/// first derivatives at the points of a degree-`2k` rule.
pub fn timing(spec: &ElementSpec, degrees: RangeInclusive<usize>, registry: &QuadratureRegistry) -> Result<Table> {
    let c = cell(spec.dim)?;
    let mut t = Table::new(&["deg", "tinit", "teval"]);
    for deg in degrees {
        let s = ElementSpec { degree: deg, ..*spec };
        let start = Instant::now();
        let e = create_element(&s, registry)?;
        let tinit = start.elapsed().as_secs_f64();
        let rule = registry.select(&c, 2 * deg);
        let start = Instant::now();
        e.tabulate(&rule.points, 1)?;
        let teval = start.elapsed().as_secs_f64();
        t.push(vec![deg.to_string(), num(tinit), num(teval)]);
    }
    Ok(t)
}
