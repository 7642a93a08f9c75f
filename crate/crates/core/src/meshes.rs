//! Structured simplicial meshes, affine and Piola maps, global interpolation
//! and error norms.
//!
//! Cells store their vertices sorted by global index, so every entity shared
//! by two cells receives the same parametrization from both sides. Tangential
//! DOFs then agree without sign changes; normal DOFs pick up
//! `sign(det A) * sign(n_out . nu)` where `nu` is the normal induced by the
//! sorted global facet vertices.

use alloc::collections::BTreeMap;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::elements::{CiarletElement, ElementFamily, MappingKind};
use crate::linalg::{cholesky, solve_lower, solve_lower_transpose, DenseMatrix};
use crate::math::{abs, sqrt, CompensatedSum};
use crate::nodes::lattice_multi_indices;
use crate::quadrature::{QuadratureRegistry, QuadratureRule};
use crate::reference_cells::{EntityRef, ReferenceCell};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MeshError {
    #[error("element is defined on dimension {element} but the mesh has dimension {mesh}")]
    DimensionMismatch { mesh: usize, element: usize },
    #[error("norm {norm} is not available for {family} elements or lacks exact derivative data")]
    IncompatibleNorm { norm: NormKind, family: ElementFamily },
    #[error("l2 projection needs a discontinuous element, got {0}")]
    NotDiscontinuous(ElementFamily),
    #[error("mesh needs at least one cell per direction and lo < hi")]
    InvalidBox,
    #[error("local mass matrix on cell {cell} is not positive definite")]
    SingularMass { cell: usize },
    #[error("unknown norm {0:?}")]
    UnknownNorm(alloc::string::String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NormKind {
    L2,
    Hdiv,
    Hcurl,
    BrokenH1,
    Linf,
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormKind::L2 => "l2",
            NormKind::Hdiv => "hdiv",
            NormKind::Hcurl => "hcurl",
            NormKind::BrokenH1 => "broken_h1",
            NormKind::Linf => "linf",
        })
    }
}

impl FromStr for NormKind {
    type Err = MeshError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "l2" => NormKind::L2,
            "hdiv" => NormKind::Hdiv,
            "hcurl" => NormKind::Hcurl,
            "broken_h1" | "brokenh1" | "h1" => NormKind::BrokenH1,
            "linf" => NormKind::Linf,
            other => return Err(MeshError::UnknownNorm(other.to_string())),
        })
    }
}

/// A function on physical space, optionally with derivative information.
pub trait Field {
    fn value_size(&self) -> usize;

    fn eval(&self, x: &[f64], out: &mut [f64]);

    fn divergence(&self, _x: &[f64]) -> Option<f64> {
        None
    }

    /// Writes the curl (3 entries in 3D, 1 in 2D) and returns whether it is known.
    fn curl(&self, _x: &[f64], _out: &mut [f64]) -> bool {
        false
    }

    /// Writes the Jacobian `d u_c / d x_k` at `c * dim + k` and returns
    /// whether it is known.
    fn gradient(&self, _x: &[f64], _out: &mut [f64]) -> bool {
        false
    }
}

/// A value-only field from a closure.
pub struct FnField<F> {
    value_size: usize,
    f: F,
}

impl<F: Fn(&[f64], &mut [f64])> FnField<F> {
    pub fn new(value_size: usize, f: F) -> Self {
        Self { value_size, f }
    }
}

impl<F: Fn(&[f64], &mut [f64])> Field for FnField<F> {
    fn value_size(&self) -> usize {
        self.value_size
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        (self.f)(x, out)
    }
}

/// `x = A xhat + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub a: DenseMatrix,
    pub a_inv: DenseMatrix,
    pub b: Vec<f64>,
    pub det: f64,
}

impl AffineMap {
    fn from_vertices(verts: &[&[f64]]) -> Self {
        let d = verts.len() - 1;
        let b = verts[0].to_vec();
        let mut a = DenseMatrix::zeros(d, d);
        for j in 0..d {
            for i in 0..d {
                a[(i, j)] = verts[j + 1][i] - b[i];
            }
        }
        let det = match d {
            1 => a[(0, 0)],
            2 => a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)],
            3 => {
                a[(0, 0)] * (a[(1, 1)] * a[(2, 2)] - a[(1, 2)] * a[(2, 1)]) - a[(0, 1)] * (a[(1, 0)] * a[(2, 2)] - a[(1, 2)] * a[(2, 0)])
                    + a[(0, 2)] * (a[(1, 0)] * a[(2, 1)] - a[(1, 1)] * a[(2, 0)])
            }
            _ => unreachable!("dimension at most 3"),
        };
        let a_inv = crate::linalg::invert(&a).expect("mesh cells are non-degenerate");
        Self { a, a_inv, b, det }
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn push_forward_point(&self, xhat: &[f64]) -> Vec<f64> {
        let mut x = self.a.matvec(xhat);
        x.iter_mut().zip(&self.b).for_each(|(x, b)| *x += b);
        x
    }

    pub fn pull_back_point(&self, x: &[f64]) -> Vec<f64> {
        let r: Vec<f64> = x.iter().zip(&self.b).map(|(x, b)| x - b).collect();
        self.a_inv.matvec(&r)
    }

    /// Reference values from physical values under the given mapping.
    pub fn pull_back_value(&self, kind: MappingKind, u: &[f64], out: &mut [f64]) {
        match kind {
            MappingKind::Affine => out.copy_from_slice(u),
            MappingKind::ContravariantPiola => {
                let v = self.a_inv.matvec(u);
                out.iter_mut().zip(&v).for_each(|(o, v)| *o = self.det * v);
            }
            MappingKind::CovariantPiola => out.copy_from_slice(&self.a.tr_matvec(u)),
        }
    }

    /// Physical values from reference values.
    pub fn push_forward_value(&self, kind: MappingKind, uhat: &[f64], out: &mut [f64]) {
        match kind {
            MappingKind::Affine => out.copy_from_slice(uhat),
            MappingKind::ContravariantPiola => {
                let v = self.a.matvec(uhat);
                out.iter_mut().zip(&v).for_each(|(o, v)| *o = v / self.det);
            }
            MappingKind::CovariantPiola => out.copy_from_slice(&self.a_inv.tr_matvec(uhat)),
        }
    }

    /// Physical Jacobian of a mapped field from the reference Jacobian
    /// `ghat[m][k] = d uhat_m / d xhat_k`.
    pub fn push_forward_gradient(&self, kind: MappingKind, ghat: &DenseMatrix) -> DenseMatrix {
        let right = ghat.matmul(&self.a_inv);
        match kind {
            MappingKind::Affine => right,
            MappingKind::ContravariantPiola => self.a.matmul(&right).scaled(1.0 / self.det),
            MappingKind::CovariantPiola => self.a_inv.transpose().matmul(&right),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimplicialMesh {
    dim: usize,
    vertices: Vec<Vec<f64>>,
    cells: Vec<Vec<usize>>,
    maps: Vec<AffineMap>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

/// Global numbering of an element's DOFs on a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    pub ndofs: usize,
    pub cell_dofs: Vec<Vec<usize>>,
    pub cell_signs: Vec<Vec<f64>>,
}

fn check_box(n: &[usize], lo: &[f64], hi: &[f64]) -> Result<(), MeshError> {
    if n.iter().any(|&v| v == 0) || lo.iter().zip(hi).any(|(l, h)| !(l < h)) {
        return Err(MeshError::InvalidBox);
    }
    Ok(())
}

pub fn interval_mesh(n: usize, lo: f64, hi: f64) -> Result<SimplicialMesh, MeshError> {
    check_box(&[n], &[lo], &[hi])?;
    let vertices = (0..=n).map(|i| vec![lo + (hi - lo) * i as f64 / n as f64]).collect();
    let cells = (0..n).map(|i| vec![i, i + 1]).collect();
    Ok(SimplicialMesh::new(1, vertices, cells, vec![lo], vec![hi]))
}

/// Each box split into the triangles `(v0, v1, v3)` and `(v0, v2, v3)`
/// along the diagonal from `v0 = (i, j)` to `v3 = (i+1, j+1)`.
pub fn unit_square_mesh(nx: usize, ny: usize, lo: [f64; 2], hi: [f64; 2]) -> Result<SimplicialMesh, MeshError> {
    check_box(&[nx, ny], &lo, &hi)?;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push(vec![
                lo[0] + (hi[0] - lo[0]) * i as f64 / nx as f64,
                lo[1] + (hi[1] - lo[1]) * j as f64 / ny as f64,
            ]);
        }
    }
    let id = |i: usize, j: usize| i + (nx + 1) * j;
    let mut cells = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (v0, v1, v2, v3) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
            cells.push(vec![v0, v1, v3]);
            cells.push(vec![v0, v2, v3]);
        }
    }
    Ok(SimplicialMesh::new(2, vertices, cells, lo.to_vec(), hi.to_vec()))
}

/// Freudenthal subdivision: six tetrahedra per box, all containing the
/// diagonal from local vertex 0 to local vertex 7 (bits x = 1, y = 2, z = 4).
pub const FREUDENTHAL_TETS: [[usize; 4]; 6] = [[0, 1, 3, 7], [0, 2, 3, 7], [0, 1, 5, 7], [0, 2, 6, 7], [0, 4, 5, 7], [0, 4, 6, 7]];

pub fn unit_cube_mesh(nx: usize, ny: usize, nz: usize, lo: [f64; 3], hi: [f64; 3]) -> Result<SimplicialMesh, MeshError> {
    check_box(&[nx, ny, nz], &lo, &hi)?;
    let n = [nx, ny, nz];
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                let idx = [i, j, k];
                vertices.push((0..3).map(|a| lo[a] + (hi[a] - lo[a]) * idx[a] as f64 / n[a] as f64).collect());
            }
        }
    }
    let id = |i: usize, j: usize, k: usize| i + (nx + 1) * (j + (ny + 1) * k);
    let mut cells = Vec::with_capacity(6 * nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let local = |b: usize| id(i + (b & 1), j + ((b >> 1) & 1), k + ((b >> 2) & 1));
                for t in FREUDENTHAL_TETS {
                    cells.push(t.iter().map(|&b| local(b)).collect());
                }
            }
        }
    }
    Ok(SimplicialMesh::new(3, vertices, cells, lo.to_vec(), hi.to_vec()))
}

impl SimplicialMesh {
    pub fn new(dim: usize, vertices: Vec<Vec<f64>>, mut cells: Vec<Vec<usize>>, lo: Vec<f64>, hi: Vec<f64>) -> Self {
        for c in &mut cells {
            c.sort_unstable();
        }
        let maps = cells
            .iter()
            .map(|c| {
                let v: Vec<&[f64]> = c.iter().map(|&i| vertices[i].as_slice()).collect();
                AffineMap::from_vertices(&v)
            })
            .collect();
        Self { dim, vertices, cells, maps, lo, hi }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn cell_map(&self, c: usize) -> &AffineMap {
        &self.maps[c]
    }

    pub fn bounds(&self) -> (&[f64], &[f64]) {
        (&self.lo, &self.hi)
    }

    /// Sum of cell measures.
    pub fn volume(&self) -> f64 {
        let r = ReferenceCell::new(self.dim).expect("valid dimension").volume();
        let mut s = CompensatedSum::default();
        for m in &self.maps {
            s.add(abs(m.det) * r);
        }
        s.value()
    }

    /// Facets shared by two cells: (sorted global vertices, cells).
    pub fn interior_facets(&self) -> Vec<(Vec<usize>, usize, usize)> {
        let mut seen: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        let mut out = Vec::new();
        for (ci, c) in self.cells.iter().enumerate() {
            for skip in 0..c.len() {
                let f: Vec<usize> = c.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &v)| v).collect();
                if let Some(&other) = seen.get(&f) {
                    out.push((f, other, ci));
                } else {
                    seen.insert(f, ci);
                }
            }
        }
        out
    }

    /// Global DOF numbering with orientation signs for `elem`.
    pub fn dof_map(&self, elem: &CiarletElement) -> Result<DofMap, MeshError> {
        if elem.dim() != self.dim {
            return Err(MeshError::DimensionMismatch { mesh: self.dim, element: elem.dim() });
        }
        let cell = &elem.cell;
        let normal_dofs = elem.mapping == MappingKind::ContravariantPiola;
        let mut entity_offsets: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        let mut ndofs = 0;
        let mut cell_dofs = Vec::with_capacity(self.cells.len());
        let mut cell_signs = Vec::with_capacity(self.cells.len());
        for (ci, gv) in self.cells.iter().enumerate() {
            let mut dofs = vec![0; elem.space_dim()];
            let mut signs = vec![1.0; elem.space_dim()];
            for entity in cell.all_entities() {
                let local = elem.entity_dofs(entity);
                if local.is_empty() {
                    continue;
                }
                let global: Vec<usize> = cell.entity_vertices(entity).iter().map(|&v| gv[v]).collect();
                let key = if entity.entity_dim == self.dim {
                    // cell interiors are never shared
                    let mut k = global.clone();
                    k.push(usize::MAX - ci);
                    k
                } else {
                    global.clone()
                };
                let offset = *entity_offsets.entry(key).or_insert_with(|| {
                    let o = ndofs;
                    ndofs += local.len();
                    o
                });
                let sign = if normal_dofs && entity.entity_dim + 1 == self.dim {
                    self.facet_sign(ci, entity)
                } else {
                    1.0
                };
                for (j, &l) in local.iter().enumerate() {
                    dofs[l] = offset + j;
                    signs[l] = sign;
                }
            }
            cell_dofs.push(dofs);
            cell_signs.push(signs);
        }
        Ok(DofMap { ndofs, cell_dofs, cell_signs })
    }

    /// `sign(det A) * sign(n_out . nu)` for a facet of cell `ci`.
    fn facet_sign(&self, ci: usize, facet: EntityRef) -> f64 {
        let gv = &self.cells[ci];
        let refcell = ReferenceCell::new(self.dim).expect("valid dimension");
        let local = refcell.entity_vertices(facet);
        let opposite = (0..=self.dim).find(|i| !local.contains(i)).expect("facet misses one vertex");
        let p = |i: usize| &self.vertices[gv[i]];
        let va = p(local[0]);
        let diff = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x - y).collect() };
        let nu: Vec<f64> = match self.dim {
            1 => vec![1.0],
            2 => {
                let t = diff(p(local[1]), va);
                vec![t[1], -t[0]]
            }
            3 => {
                let (a, b) = (diff(p(local[1]), va), diff(p(local[2]), va));
                vec![a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
            }
            _ => unreachable!("dimension at most 3"),
        };
        let out = diff(va, p(opposite));
        let dot: f64 = nu.iter().zip(&out).map(|(a, b)| a * b).sum();
        let s_out = if dot > 0.0 { 1.0 } else { -1.0 };
        let s_det = if self.maps[ci].det > 0.0 { 1.0 } else { -1.0 };
        s_out * s_det
    }
}

/// Interpolate `u` into the global space of `elem`: reference DOFs of the
/// pulled-back field on each cell, shared DOFs taken from their first cell.
pub fn global_interpolate(mesh: &SimplicialMesh, elem: &CiarletElement, u: &dyn Field) -> Result<Vec<f64>, MeshError> {
    let map = mesh.dof_map(elem)?;
    Ok(global_interpolate_with(mesh, elem, &map, u))
}

pub fn global_interpolate_with(mesh: &SimplicialMesh, elem: &CiarletElement, map: &DofMap, u: &dyn Field) -> Vec<f64> {
    let mut out = vec![0.0; map.ndofs];
    let mut done = vec![false; map.ndofs];
    let pts = elem.interpolation_points();
    let vs = elem.value_size;
    let mut values = DenseMatrix::zeros(pts.rows(), vs);
    let mut buf = vec![0.0; vs];
    for c in 0..mesh.num_cells() {
        if map.cell_dofs[c].iter().all(|&g| done[g]) {
            continue;
        }
        let f = mesh.cell_map(c);
        for p in 0..pts.rows() {
            let x = f.push_forward_point(pts.row(p));
            u.eval(&x, &mut buf);
            f.pull_back_value(elem.mapping, &buf, values.row_mut(p));
        }
        let local = elem.interpolate_values(&values);
        for (i, &g) in map.cell_dofs[c].iter().enumerate() {
            if !done[g] {
                out[g] = map.cell_signs[c][i] * local[i];
                done[g] = true;
            }
        }
    }
    out
}

/// Reference tabulation reused on every cell.
pub struct CellEvaluator<'a> {
    elem: &'a CiarletElement,
    map: &'a DofMap,
    pub points: DenseMatrix,
    tab: crate::elements::ElementTabulation,
    order: usize,
}

/// Physical values (`[component][point]`) and, if requested, Jacobians
/// (`[point]` as `value_size x dim`).
pub struct CellValues {
    pub values: Vec<Vec<f64>>,
    pub jacobians: Vec<DenseMatrix>,
}

impl<'a> CellEvaluator<'a> {
    pub fn new(elem: &'a CiarletElement, map: &'a DofMap, points: DenseMatrix, order: usize) -> Self {
        let tab = elem.tabulate(&points, order).expect("points match the element cell");
        Self { elem, map, points, tab, order }
    }

    pub fn evaluate(&self, mesh: &SimplicialMesh, cell: usize, coeffs: &[f64]) -> CellValues {
        let e = self.elem;
        let vs = e.value_size;
        let dim = e.dim();
        let n = e.space_dim();
        let f = mesh.cell_map(cell);
        let local: Vec<f64> = (0..n).map(|i| self.map.cell_signs[cell][i] * coeffs[self.map.cell_dofs[cell][i]]).collect();
        let npts = self.points.rows();
        let combine = |slot: usize, comp: usize, p: usize| -> f64 { (0..n).map(|i| local[i] * self.tab.get(slot, i, comp, p)).sum() };
        let mut values = vec![vec![0.0; npts]; vs];
        let mut jacobians = Vec::new();
        let mut uhat = vec![0.0; vs];
        let mut u = vec![0.0; vs];
        for p in 0..npts {
            for c in 0..vs {
                uhat[c] = combine(0, c, p);
            }
            f.push_forward_value(e.mapping, &uhat, &mut u);
            for c in 0..vs {
                values[c][p] = u[c];
            }
            if self.order >= 1 {
                let mut g = DenseMatrix::zeros(vs, dim);
                for c in 0..vs {
                    for k in 0..dim {
                        g[(c, k)] = combine(1 + k, c, p);
                    }
                }
                jacobians.push(f.push_forward_gradient(e.mapping, &g));
            }
        }
        CellValues { values, jacobians }
    }
}

fn curl_of(j: &DenseMatrix) -> Vec<f64> {
    if j.cols() == 2 {
        vec![j[(1, 0)] - j[(0, 1)]]
    } else {
        vec![j[(2, 1)] - j[(1, 2)], j[(0, 2)] - j[(2, 0)], j[(1, 0)] - j[(0, 1)]]
    }
}

#[inline]
fn sq(x: f64) -> f64 {
    x * x
}

fn trace(j: &DenseMatrix) -> f64 {
    (0..j.cols()).map(|k| j[(k, k)]).sum()
}

/// Equispaced lattice of degree `n` on the reference cell, boundary included.
pub fn sampling_lattice(dim: usize, n: usize) -> DenseMatrix {
    let idx = lattice_multi_indices(dim + 1, n);
    let mut m = DenseMatrix::zeros(idx.len(), dim);
    for (r, a) in idx.iter().enumerate() {
        for k in 0..dim {
            m[(r, k)] = a[k + 1] as f64 / n as f64;
        }
    }
    m
}

/// Candidates polished by [`max_error`] after the lattice sweep.
const POLISHED_CANDIDATES: usize = 32;
/// Points per block in the lattice sweep.
const SWEEP_BLOCK: usize = 2048;

/// Reference-cell expansion coefficients (`value_size x expansion_size`) of
/// the finite element function on `cell`.
fn cell_expansion(elem: &CiarletElement, map: &DofMap, cell: usize, coeffs: &[f64]) -> DenseMatrix {
    let local: Vec<f64> = (0..elem.space_dim()).map(|i| map.cell_signs[cell][i] * coeffs[map.cell_dofs[cell][i]]).collect();
    elem.expansion_coefficients(&local)
}

/// Estimate of the largest pointwise error: a sweep over an equispaced
/// lattice of degree `lattice` on every cell, then a compass search inside
/// the cell from well-separated worst lattice points.
pub fn max_error(
    mesh: &SimplicialMesh,
    elem: &CiarletElement,
    map: &DofMap,
    coeffs: &[f64],
    u_exact: &dyn Field,
    lattice: usize,
) -> f64 {
    let dim = mesh.dim();
    let vs = elem.value_size;
    let lattice = lattice.max(1);
    let pts = sampling_lattice(dim, lattice);
    let w: Vec<DenseMatrix> = (0..mesh.num_cells()).map(|c| cell_expansion(elem, map, c, coeffs)).collect();

    let mut buf = vec![0.0; vs];
    let mut uh = vec![0.0; vs];
    let mut uhat = vec![0.0; vs];
    let mut error_at = |c: usize, xhat: &[f64], col: &mut dyn FnMut(usize) -> f64| {
        for k in 0..vs {
            uhat[k] = col(k);
        }
        let f = mesh.cell_map(c);
        f.push_forward_value(elem.mapping, &uhat, &mut uh);
        u_exact.eval(&f.push_forward_point(xhat), &mut buf);
        sqrt((0..vs).map(|k| sq(buf[k] - uh[k])).sum())
    };

    let mut samples: Vec<(f64, usize, usize)> = Vec::with_capacity(mesh.num_cells() * pts.rows());
    for start in (0..pts.rows()).step_by(SWEEP_BLOCK) {
        let end = (start + SWEEP_BLOCK).min(pts.rows());
        let block = DenseMatrix::from_vec(end - start, dim, pts.as_slice()[start * dim..end * dim].to_vec());
        let phi = elem.expansion.values(&block).expect("lattice lies on the element cell");
        for c in 0..mesh.num_cells() {
            let vals = w[c].matmul(&phi);
            for p in 0..block.rows() {
                let e = error_at(c, block.row(p), &mut |k| vals[(k, p)]);
                samples.push((e, c, start + p));
            }
        }
    }
    samples.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut worst = samples.first().map_or(0.0, |s| s.0);

    // greedy pick of well-separated candidates so that distinct local maxima
    // each get polished
    let sep = 2.5 / lattice as f64;
    let mut picked: Vec<(f64, usize, usize)> = Vec::new();
    for &(e, c, p) in &samples {
        if picked.len() == POLISHED_CANDIDATES {
            break;
        }
        let far = picked
            .iter()
            .all(|&(_, c2, p2)| c2 != c || pts.row(p).iter().zip(pts.row(p2)).any(|(a, b)| abs(a - b) > sep));
        if far {
            picked.push((e, c, p));
        }
    }

    for &(e0, c, p) in &picked {
        let mut eval = |x: &[f64]| {
            let phi = elem.expansion.values(&DenseMatrix::from_vec(1, dim, x.to_vec())).expect("point on the cell");
            let wc = &w[c];
            error_at(c, x, &mut |k| (0..phi.rows()).map(|j| wc[(k, j)] * phi[(j, 0)]).sum())
        };
        let mut x = pts.row(p).to_vec();
        let mut best = e0;
        let mut h = 0.5 / lattice as f64;
        while h > 1e-6 {
            let mut moved = false;
            for k in 0..dim {
                for s in [h, -h] {
                    let mut y = x.clone();
                    y[k] += s;
                    if y.iter().any(|&t| t < 0.0) || y.iter().sum::<f64>() > 1.0 {
                        continue;
                    }
                    let e = eval(&y);
                    if e > best {
                        best = e;
                        x = y;
                        moved = true;
                    }
                }
            }
            if !moved {
                h *= 0.5;
            }
        }
        worst = worst.max(best);
    }
    worst
}

/// Error between `u_exact` and the finite element function `coeffs`.
pub fn error_norms(
    mesh: &SimplicialMesh,
    elem: &CiarletElement,
    coeffs: &[f64],
    u_exact: &dyn Field,
    which: NormKind,
) -> Result<f64, MeshError> {
    let map = mesh.dof_map(elem)?;
    let dim = mesh.dim();
    let vs = elem.value_size;
    let incompatible = Err(MeshError::IncompatibleNorm { norm: which, family: elem.family });
    match which {
        NormKind::Hdiv if elem.mapping != MappingKind::ContravariantPiola => return incompatible,
        NormKind::Hcurl if elem.mapping != MappingKind::CovariantPiola => return incompatible,
        _ => {}
    }
    if which == NormKind::Linf {
        return Ok(max_error(mesh, elem, &map, coeffs, u_exact, 3 * elem.embedded_degree() + 3));
    }
    let order = if which == NormKind::L2 { 0 } else { 1 };
    let rule = QuadratureRegistry::builtin().select(&elem.cell, 2 * elem.embedded_degree() + 2);
    let ev = CellEvaluator::new(elem, &map, rule.points.clone(), order);
    let mut l2 = CompensatedSum::default();
    let mut extra = CompensatedSum::default();
    let mut buf = vec![0.0; vs];
    let mut dbuf = vec![0.0; vs * dim];
    for c in 0..mesh.num_cells() {
        let cv = ev.evaluate(mesh, c, coeffs);
        let f = mesh.cell_map(c);
        let jac = abs(f.det);
        for (p, w) in rule.weights.iter().enumerate() {
            let x = f.push_forward_point(rule.point(p));
            u_exact.eval(&x, &mut buf);
            let e2: f64 = (0..vs).map(|k| sq(buf[k] - cv.values[k][p])).sum();
            l2.add(w * jac * e2);
            match which {
                NormKind::Hdiv => {
                    let Some(d) = u_exact.divergence(&x) else { return incompatible };
                    extra.add(w * jac * sq(d - trace(&cv.jacobians[p])));
                }
                NormKind::Hcurl => {
                    if !u_exact.curl(&x, &mut dbuf) {
                        return incompatible;
                    }
                    let ch = curl_of(&cv.jacobians[p]);
                    let e: f64 = ch.iter().zip(&dbuf).map(|(a, b)| sq(a - b)).sum();
                    extra.add(w * jac * e);
                }
                NormKind::BrokenH1 => {
                    if !u_exact.gradient(&x, &mut dbuf) {
                        return incompatible;
                    }
                    let j = &cv.jacobians[p];
                    let mut e = 0.0;
                    for cc in 0..vs {
                        for k in 0..dim {
                            e += sq(dbuf[cc * dim + k] - j[(cc, k)]);
                        }
                    }
                    extra.add(w * jac * e);
                }
                _ => {}
            }
        }
    }
    Ok(sqrt(l2.value() + extra.value()))
}

/// `|| div u_h ||_{L2}` by direct quadrature of the finite element field.
pub fn divergence_norm(mesh: &SimplicialMesh, elem: &CiarletElement, coeffs: &[f64]) -> Result<f64, MeshError> {
    let map = mesh.dof_map(elem)?;
    let rule = QuadratureRegistry::builtin().select(&elem.cell, 2 * elem.embedded_degree());
    let ev = CellEvaluator::new(elem, &map, rule.points.clone(), 1);
    let mut s = CompensatedSum::default();
    for c in 0..mesh.num_cells() {
        let cv = ev.evaluate(mesh, c, coeffs);
        let jac = abs(mesh.cell_map(c).det);
        for (p, w) in rule.weights.iter().enumerate() {
            s.add(w * jac * sq(trace(&cv.jacobians[p])));
        }
    }
    Ok(sqrt(s.value()))
}

/// Cellwise `L2` projection of a scalar field onto a discontinuous element.
pub fn l2_project(mesh: &SimplicialMesh, target: &CiarletElement, f: &dyn Field) -> Result<Vec<f64>, MeshError> {
    l2_project_with_degree(mesh, target, f, 4)
}

/// As [`l2_project`], with a rule exact to `2 * degree + extra_degree`.
pub fn l2_project_with_degree(
    mesh: &SimplicialMesh,
    target: &CiarletElement,
    f: &dyn Field,
    extra_degree: usize,
) -> Result<Vec<f64>, MeshError> {
    if target.family != ElementFamily::DiscontinuousLagrange {
        return Err(MeshError::NotDiscontinuous(target.family));
    }
    let map = mesh.dof_map(target)?;
    let rule: QuadratureRule = QuadratureRegistry::builtin().select(&target.cell, 2 * target.degree + extra_degree);
    let tab = target.tabulate(&rule.points, 0).expect("points match");
    let n = target.space_dim();
    let mut mass = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            mass[(i, j)] = rule.weights.iter().enumerate().map(|(p, w)| w * tab.get(0, i, 0, p) * tab.get(0, j, 0, p)).sum();
        }
    }
    let chol = cholesky(&mass).map_err(|_| MeshError::SingularMass { cell: 0 })?;
    let mut out = vec![0.0; map.ndofs];
    let mut buf = [0.0];
    for c in 0..mesh.num_cells() {
        let fm = mesh.cell_map(c);
        let mut rhs = vec![0.0; n];
        for (p, w) in rule.weights.iter().enumerate() {
            let x = fm.push_forward_point(rule.point(p));
            f.eval(&x, &mut buf);
            for i in 0..n {
                rhs[i] += w * buf[0] * tab.get(0, i, 0, p);
            }
        }
        // the |det A| factors cancel between mass matrix and right-hand side
        let y = solve_lower(&chol, &rhs);
        let x = solve_lower_transpose(&chol, &y);
        for i in 0..n {
            out[map.cell_dofs[c][i]] = x[i];
        }
    }
    Ok(out)
}

/// `|| div u_h - g_h ||_{L2}` where `u_h` lives in `elem` and `g_h` in the
/// discontinuous scalar element `target`.
pub fn divergence_mismatch_norm(
    mesh: &SimplicialMesh,
    elem: &CiarletElement,
    coeffs: &[f64],
    target: &CiarletElement,
    target_coeffs: &[f64],
) -> Result<f64, MeshError> {
    let map = mesh.dof_map(elem)?;
    let tmap = mesh.dof_map(target)?;
    let rule = QuadratureRegistry::builtin().select(&elem.cell, 2 * elem.embedded_degree());
    let ev = CellEvaluator::new(elem, &map, rule.points.clone(), 1);
    let tv = CellEvaluator::new(target, &tmap, rule.points.clone(), 0);
    let mut s = CompensatedSum::default();
    for c in 0..mesh.num_cells() {
        let cv = ev.evaluate(mesh, c, coeffs);
        let gv = tv.evaluate(mesh, c, target_coeffs);
        let jac = abs(mesh.cell_map(c).det);
        for (p, w) in rule.weights.iter().enumerate() {
            s.add(w * jac * sq(trace(&cv.jacobians[p]) - gv.values[0][p]));
        }
    }
    Ok(sqrt(s.value()))
}

/// Physical values of a finite element function at a point inside `cell`.
pub fn evaluate_at(
    mesh: &SimplicialMesh,
    elem: &CiarletElement,
    map: &DofMap,
    coeffs: &[f64],
    cell: usize,
    x: &[f64],
) -> Vec<f64> {
    let xhat = mesh.cell_map(cell).pull_back_point(x);
    let ev = CellEvaluator::new(elem, map, DenseMatrix::from_vec(1, xhat.len(), xhat), 0);
    let cv = ev.evaluate(mesh, cell, coeffs);
    cv.values.iter().map(|v| v[0]).collect()
}
