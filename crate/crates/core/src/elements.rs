//! Ciarlet elements and the element catalog.
//!
//! A polynomial space is a set of rows of coefficients over an orthonormal
//! [`ExpansionSet`], one block of `expansion_size` coefficients per value
//! component. With the dual functionals assembled into the generalized
//! Vandermonde matrix `V[i][j] = n_i(phi_j)`, the nodal basis has
//! coefficients `(V^-1)^T S`.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::functionals::{
    point_edge_tangential, point_eval, point_scaled_normal, EvaluationTable, Functional,
    FunctionalError, FunctionalKind,
};
use crate::linalg::{condition_2norm, lu_factor, sym_eig, DenseMatrix, LinalgError};
use crate::nodes::NodeVariant;
use crate::polyset::{derivative_multi_indices, expansion_size, ExpansionSet, PolysetError};
use crate::quadrature::{entity_quadrature, QuadratureRegistry};
use crate::reference_cells::{make_points, CellError, EntityRef, ReferenceCell};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ElementError {
    #[error("unisolvence failure: Vandermonde matrix is singular at pivot {pivot}")]
    Unisolvence { pivot: usize },
    #[error("space has dimension {space} but there are {dual} functionals")]
    DimensionMismatch { space: usize, dual: usize },
    #[error("{family} is not available on cells of dimension {dim}")]
    UnsupportedCell { family: ElementFamily, dim: usize },
    #[error("{family} requires degree >= {min}, got {degree}")]
    InvalidDegree { family: ElementFamily, degree: usize, min: usize },
    #[error("unknown element family {0:?}")]
    UnknownFamily(String),
    #[error("unknown variant {0:?}")]
    UnknownVariant(String),
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error(transparent)]
    Polyset(#[from] PolysetError),
    #[error(transparent)]
    Cell(#[from] CellError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MappingKind {
    Affine,
    ContravariantPiola,
    CovariantPiola,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ElementFamily {
    Lagrange,
    DiscontinuousLagrange,
    RaviartThomas,
    BrezziDouglasMarini,
    NedelecFirstKind,
    NedelecSecondKind,
}

impl ElementFamily {
    pub const ALL: [ElementFamily; 6] = [
        ElementFamily::Lagrange,
        ElementFamily::DiscontinuousLagrange,
        ElementFamily::RaviartThomas,
        ElementFamily::BrezziDouglasMarini,
        ElementFamily::NedelecFirstKind,
        ElementFamily::NedelecSecondKind,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ElementFamily::Lagrange => "lagrange",
            ElementFamily::DiscontinuousLagrange => "dg",
            ElementFamily::RaviartThomas => "rt",
            ElementFamily::BrezziDouglasMarini => "bdm",
            ElementFamily::NedelecFirstKind => "ned1",
            ElementFamily::NedelecSecondKind => "ned2",
        }
    }

    pub fn mapping(self) -> MappingKind {
        match self {
            ElementFamily::Lagrange | ElementFamily::DiscontinuousLagrange => MappingKind::Affine,
            ElementFamily::RaviartThomas | ElementFamily::BrezziDouglasMarini => MappingKind::ContravariantPiola,
            ElementFamily::NedelecFirstKind | ElementFamily::NedelecSecondKind => MappingKind::CovariantPiola,
        }
    }

    pub fn is_vector(self) -> bool {
        self.mapping() != MappingKind::Affine
    }

    pub fn min_degree(self) -> usize {
        match self {
            ElementFamily::DiscontinuousLagrange => 0,
            _ => 1,
        }
    }
}

impl fmt::Display for ElementFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ElementFamily {
    type Err = ElementError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "lagrange" | "cg" | "p" => ElementFamily::Lagrange,
            "dg" | "discontinuous_lagrange" | "dp" => ElementFamily::DiscontinuousLagrange,
            "rt" | "raviart_thomas" | "raviart-thomas" => ElementFamily::RaviartThomas,
            "bdm" | "brezzi_douglas_marini" => ElementFamily::BrezziDouglasMarini,
            "ned1" | "n1curl" | "nedelec1" => ElementFamily::NedelecFirstKind,
            "ned2" | "n2curl" | "nedelec2" => ElementFamily::NedelecSecondKind,
            other => return Err(ElementError::UnknownFamily(other.to_string())),
        })
    }
}

/// Facet degree-of-freedom style of the vector-valued families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DofVariant {
    /// Normal or tangential components at points on the facets/edges.
    Point,
    /// Integral moments computed with a rule `q` degrees above the minimum.
    Integral(usize),
}

impl fmt::Display for DofVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DofVariant::Point => f.write_str("point"),
            DofVariant::Integral(q) => write!(f, "integral({q})"),
        }
    }
}

impl FromStr for DofVariant {
    type Err = ElementError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_lowercase();
        if t == "point" {
            return Ok(DofVariant::Point);
        }
        if t == "integral" {
            return Ok(DofVariant::Integral(0));
        }
        t.strip_prefix("integral(")
            .and_then(|r| r.strip_suffix(')'))
            .and_then(|q| q.trim().parse().ok())
            .map(DofVariant::Integral)
            .ok_or(ElementError::UnknownVariant(s.to_string()))
    }
}

/// A complete element request.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ElementSpec {
    pub family: ElementFamily,
    pub dim: usize,
    pub degree: usize,
    /// Node family for Lagrange-type elements.
    pub nodes: NodeVariant,
    /// DOF style for vector-valued elements.
    pub dofs: DofVariant,
}

impl ElementSpec {
    pub fn new(family: ElementFamily, dim: usize, degree: usize) -> Self {
        Self { family, dim, degree, nodes: NodeVariant::Equispaced, dofs: DofVariant::Integral(0) }
    }

    /// Set the variant from its textual name (node or DOF variant,
    /// depending on the family).
    pub fn with_variant(mut self, variant: &str) -> Result<Self, ElementError> {
        if self.family.is_vector() {
            self.dofs = variant.parse()?;
        } else {
            self.nodes = variant.parse().map_err(|_| ElementError::UnknownVariant(variant.to_string()))?;
        }
        Ok(self)
    }

    pub fn variant_name(&self) -> String {
        if self.family.is_vector() {
            self.dofs.to_string()
        } else {
            self.nodes.to_string()
        }
    }
}

#[derive(Debug, Clone)]
pub struct CiarletElement {
    pub family: ElementFamily,
    pub cell: ReferenceCell,
    pub degree: usize,
    pub variant: String,
    pub value_size: usize,
    pub mapping: MappingKind,
    pub expansion: ExpansionSet,
    /// Space rows, `space_dim x (value_size * expansion_size)`.
    pub space: DenseMatrix,
    pub dual: Vec<Functional>,
    entity_dofs: Vec<Vec<Vec<usize>>>,
    pub vandermonde: DenseMatrix,
    pub vandermonde_inverse: DenseMatrix,
    /// Nodal basis rows, same layout as `space`.
    pub coefficients: DenseMatrix,
    /// All functional points stacked, with `dual_offsets[i]..dual_offsets[i+1]`
    /// belonging to functional `i`.
    dual_points: DenseMatrix,
    dual_offsets: Vec<usize>,
}

/// Tabulated nodal basis: for each derivative multi-index a matrix with row
/// `dof * value_size + component` and one column per point.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementTabulation {
    pub derivatives: Vec<Vec<usize>>,
    pub value_size: usize,
    pub values: Vec<DenseMatrix>,
}

impl ElementTabulation {
    pub fn get(&self, derivative: usize, dof: usize, component: usize, point: usize) -> f64 {
        self.values[derivative][(dof * self.value_size + component, point)]
    }

    pub fn ndofs(&self) -> usize {
        self.values[0].rows() / self.value_size
    }
}

/// Assemble `V = R S^T` where `R[i][(c, k)] = n_i(e_c phi_k)`.
fn vandermonde(expansion: &ExpansionSet, value_size: usize, space: &DenseMatrix, dual: &[Functional]) -> Result<DenseMatrix, ElementError> {
    let e = expansion.size();
    let total: usize = dual.iter().map(Functional::num_points).sum();
    let mut pts = DenseMatrix::zeros(total, expansion.dim());
    let mut row = 0;
    for f in dual {
        for p in 0..f.num_points() {
            pts.row_mut(row).copy_from_slice(f.points.row(p));
            row += 1;
        }
    }
    let phi = expansion.values(&pts)?;
    let mut r = DenseMatrix::zeros(dual.len(), value_size * e);
    let mut col = 0;
    for (i, f) in dual.iter().enumerate() {
        let out = r.row_mut(i);
        for p in 0..f.num_points() {
            for c in 0..value_size {
                let w = f.weights[(p, c)];
                if w == 0.0 {
                    continue;
                }
                for k in 0..e {
                    out[c * e + k] += w * phi[(k, col)];
                }
            }
            col += 1;
        }
    }
    Ok(r.matmul(&space.transpose()))
}

/// Invert the generalized Vandermonde matrix of a space and dual set.
pub fn build_nodal_basis(
    expansion: &ExpansionSet,
    value_size: usize,
    space: &DenseMatrix,
    dual: &[Functional],
) -> Result<(DenseMatrix, DenseMatrix), ElementError> {
    if space.rows() != dual.len() {
        return Err(ElementError::DimensionMismatch { space: space.rows(), dual: dual.len() });
    }
    let v = vandermonde(expansion, value_size, space, dual)?;
    let lu = lu_factor(&v).map_err(|e| match e {
        LinalgError::Singular { pivot } => ElementError::Unisolvence { pivot },
        other => ElementError::Linalg(other),
    })?;
    let vinv = lu.inverse();
    Ok((v, vinv))
}

impl CiarletElement {
    /// Assemble an element from its parts.
    pub fn from_parts(
        family: ElementFamily,
        cell: ReferenceCell,
        degree: usize,
        variant: String,
        expansion: ExpansionSet,
        value_size: usize,
        space: DenseMatrix,
        dual: Vec<Functional>,
        entity_dofs: Vec<Vec<Vec<usize>>>,
    ) -> Result<Self, ElementError> {
        let (v, vinv) = build_nodal_basis(&expansion, value_size, &space, &dual)?;
        let coefficients = vinv.transpose().matmul(&space);
        let total: usize = dual.iter().map(Functional::num_points).sum();
        let mut dual_points = DenseMatrix::zeros(total, cell.dim());
        let mut dual_offsets = Vec::with_capacity(dual.len() + 1);
        dual_offsets.push(0);
        let mut row = 0;
        for f in &dual {
            for p in 0..f.num_points() {
                dual_points.row_mut(row).copy_from_slice(f.points.row(p));
                row += 1;
            }
            dual_offsets.push(row);
        }
        Ok(Self {
            family,
            mapping: family.mapping(),
            cell,
            degree,
            variant,
            value_size,
            expansion,
            space,
            dual,
            entity_dofs,
            vandermonde: v,
            vandermonde_inverse: vinv,
            coefficients,
            dual_points,
            dual_offsets,
        })
    }

    pub fn dim(&self) -> usize {
        self.cell.dim()
    }

    pub fn space_dim(&self) -> usize {
        self.dual.len()
    }

    /// Expansion degree of the polynomial space.
    pub fn embedded_degree(&self) -> usize {
        self.expansion.degree()
    }

    pub fn entity_dofs(&self, entity: EntityRef) -> &[usize] {
        &self.entity_dofs[entity.entity_dim][entity.entity_id]
    }

    pub fn entity_dof_map(&self) -> BTreeMap<EntityRef, Vec<usize>> {
        self.cell.all_entities().into_iter().map(|e| (e, self.entity_dofs(e).to_vec())).collect()
    }

    /// 2-norm condition number of the Vandermonde matrix.
    pub fn condition_number(&self) -> Result<f64, ElementError> {
        Ok(condition_2norm(&self.vandermonde)?)
    }

    /// Nodal basis values (and derivatives up to `order <= 2`) at the rows
    /// of `points`.
    pub fn tabulate(&self, points: &DenseMatrix, order: usize) -> Result<ElementTabulation, ElementError> {
        let tab = self.expansion.tabulate(points, order)?;
        let e = self.expansion.size();
        let n = self.space_dim();
        let vs = self.value_size;
        let blocks: Vec<DenseMatrix> = (0..vs)
            .map(|c| {
                let mut b = DenseMatrix::zeros(n, e);
                for i in 0..n {
                    b.row_mut(i).copy_from_slice(&self.coefficients.row(i)[c * e..(c + 1) * e]);
                }
                b
            })
            .collect();
        let values = tab
            .values
            .iter()
            .map(|phi| {
                let mut out = DenseMatrix::zeros(n * vs, points.rows());
                for (c, b) in blocks.iter().enumerate() {
                    let v = b.matmul(phi);
                    for i in 0..n {
                        out.row_mut(i * vs + c).copy_from_slice(v.row(i));
                    }
                }
                out
            })
            .collect();
        Ok(ElementTabulation { derivatives: tab.derivatives, value_size: vs, values })
    }

    /// Points at which functions must be sampled for [`Self::interpolate_values`].
    pub fn interpolation_points(&self) -> &DenseMatrix {
        &self.dual_points
    }

    /// DOF values from samples at [`Self::interpolation_points`]
    /// (`npoints x value_size`).
    pub fn interpolate_values(&self, values: &DenseMatrix) -> Vec<f64> {
        self.dual
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let mut s = crate::math::CompensatedSum::default();
                for (p, row) in (self.dual_offsets[i]..self.dual_offsets[i + 1]).enumerate() {
                    for c in 0..self.value_size {
                        let w = f.weights[(p, c)];
                        if w != 0.0 {
                            s.add(w * values[(row, c)]);
                        }
                    }
                }
                s.value()
            })
            .collect()
    }

    /// Nodal interpolant coefficients `n_i(u)`.
    pub fn interpolate(&self, mut u: impl FnMut(&[f64], &mut [f64])) -> Vec<f64> {
        let table = EvaluationTable::from_fn(self.dual_points.clone(), self.value_size, |x, o| u(x, o));
        self.interpolate_values(&table.values)
    }

    /// Expansion coefficients (`value_size x expansion_size`) of the
    /// function with nodal coefficients `coeffs`.
    pub fn expansion_coefficients(&self, coeffs: &[f64]) -> DenseMatrix {
        let e = self.expansion.size();
        let row = self.coefficients.tr_matvec(coeffs);
        DenseMatrix::from_vec(self.value_size, e, row)
    }

    /// `n_i(psi_j)` for every pair, which is the identity for a valid element.
    pub fn duality_matrix(&self) -> DenseMatrix {
        let tab = self.tabulate(&self.dual_points, 0).expect("dual points match the cell");
        let vals = &tab.values[0];
        let n = self.space_dim();
        let mut m = DenseMatrix::zeros(n, n);
        for (i, f) in self.dual.iter().enumerate() {
            for (p, col) in (self.dual_offsets[i]..self.dual_offsets[i + 1]).enumerate() {
                for c in 0..self.value_size {
                    let w = f.weights[(p, c)];
                    if w == 0.0 {
                        continue;
                    }
                    for j in 0..n {
                        m[(i, j)] += w * vals[(j * self.value_size + c, col)];
                    }
                }
            }
        }
        m
    }
}

// ---------------------------------------------------------------------------
// polynomial spaces

/// `(P_m)^value_size` inside an expansion of degree `n >= m`.
fn vector_poly_rows(dim: usize, value_size: usize, m: usize, n: usize) -> DenseMatrix {
    let e = expansion_size(dim, n);
    let pm = expansion_size(dim, m);
    let mut rows = DenseMatrix::zeros(value_size * pm, value_size * e);
    for c in 0..value_size {
        for i in 0..pm {
            rows[(c * pm + i, c * e + i)] = 1.0;
        }
    }
    rows
}

fn stack(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    assert_eq!(a.cols(), b.cols());
    let mut data = a.as_slice().to_vec();
    data.extend_from_slice(b.as_slice());
    DenseMatrix::from_vec(a.rows() + b.rows(), a.cols(), data)
}

/// Project `g(x) * phi_i(x)` (vector `g` of length `value_size`) for every
/// `phi_i` of degree exactly `m` onto the degree-`n` expansion.
fn projected_tail(
    cell: &ReferenceCell,
    m: usize,
    n: usize,
    value_size: usize,
    g: impl Fn(&[f64], usize, &mut [f64]),
    count_per_fn: usize,
) -> DenseMatrix {
    let exp_n = ExpansionSet::new(cell, n);
    let exp_m = ExpansionSet::new(cell, m);
    let block = exp_m.degree_block(m);
    let rule = QuadratureRegistry::empty().select(cell, 2 * n + 2);
    let phi_m = exp_m.values(&rule.points).expect("dimension matches");
    let phi_n = exp_n.values(&rule.points).expect("dimension matches");
    let e = exp_n.size();
    let mut out = DenseMatrix::zeros(block.len() * count_per_fn, value_size * e);
    let mut buf = vec![0.0; value_size];
    for (r, i) in block.enumerate() {
        for t in 0..count_per_fn {
            let row = r * count_per_fn + t;
            for (q, w) in rule.weights.iter().enumerate() {
                g(rule.point(q), t, &mut buf);
                let s = w * phi_m[(i, q)];
                for c in 0..value_size {
                    let wc = s * buf[c];
                    if wc == 0.0 {
                        continue;
                    }
                    for k in 0..e {
                        out[(row, c * e + k)] += wc * phi_n[(k, q)];
                    }
                }
            }
        }
    }
    out
}

/// Raviart-Thomas space of degree `k`: `P_{k-1}^d + x P_{k-1}`.
pub fn raviart_thomas_space(cell: &ReferenceCell, k: usize) -> DenseMatrix {
    let d = cell.dim();
    let base = vector_poly_rows(d, d, k - 1, k);
    let tail = projected_tail(cell, k - 1, k, d, |x, _, out| out.copy_from_slice(x), 1);
    stack(&base, &tail)
}

/// First-kind Nedelec space of degree `k`.
pub fn nedelec_first_kind_space(cell: &ReferenceCell, k: usize) -> DenseMatrix {
    let d = cell.dim();
    let base = vector_poly_rows(d, d, k - 1, k);
    if d == 2 {
        let tail = projected_tail(
            cell,
            k - 1,
            k,
            2,
            |x, _, out| {
                out[0] = -x[1];
                out[1] = x[0];
            },
            1,
        );
        return stack(&base, &tail);
    }
    // x cross e_c phi_i, then keep only the degree-k block and drop the
    // dependent combinations
    let raw = projected_tail(
        cell,
        k - 1,
        k,
        3,
        |x, c, out| {
            let mut e = [0.0; 3];
            e[c] = 1.0;
            out[0] = x[1] * e[2] - x[2] * e[1];
            out[1] = x[2] * e[0] - x[0] * e[2];
            out[2] = x[0] * e[1] - x[1] * e[0];
        },
        3,
    );
    let exp = ExpansionSet::new(cell, k);
    let e = exp.size();
    let top = exp.degree_block(k);
    let mut c = raw;
    for r in 0..c.rows() {
        for comp in 0..3 {
            for idx in 0..top.start {
                c[(r, comp * e + idx)] = 0.0;
            }
        }
    }
    let gram = c.matmul(&c.transpose());
    let eig = sym_eig(&gram).expect("Gram matrix is symmetric");
    let lmax = eig.values.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..eig.values.len()).filter(|&j| eig.values[j] > 1e-10 * lmax).collect();
    let mut reduced = DenseMatrix::zeros(keep.len(), c.cols());
    for (r, &j) in keep.iter().enumerate() {
        let s = 1.0 / crate::math::sqrt(eig.values[j]);
        for i in 0..c.rows() {
            let w = eig.vectors[(i, j)] * s;
            if w == 0.0 {
                continue;
            }
            for col in 0..c.cols() {
                reduced[(r, col)] += w * c[(i, col)];
            }
        }
    }
    stack(&base, &reduced)
}

/// Evaluate space rows (over a degree-`n` expansion) at points:
/// returns one `nrows x npoints` matrix per component.
fn evaluate_rows(exp: &ExpansionSet, value_size: usize, rows: &DenseMatrix, points: &DenseMatrix) -> Vec<DenseMatrix> {
    let phi = exp.values(points).expect("dimension matches");
    let e = exp.size();
    (0..value_size)
        .map(|c| {
            let mut b = DenseMatrix::zeros(rows.rows(), e);
            for i in 0..rows.rows() {
                b.row_mut(i).copy_from_slice(&rows.row(i)[c * e..(c + 1) * e]);
            }
            b.matmul(&phi)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// dual sets

struct DualBuilder<'a> {
    cell: &'a ReferenceCell,
    registry: &'a QuadratureRegistry,
    value_size: usize,
    dual: Vec<Functional>,
    entity_dofs: Vec<Vec<Vec<usize>>>,
}

impl<'a> DualBuilder<'a> {
    fn new(cell: &'a ReferenceCell, registry: &'a QuadratureRegistry, value_size: usize) -> Self {
        let entity_dofs = (0..=cell.dim()).map(|e| vec![Vec::new(); cell.num_entities(e)]).collect();
        Self { cell, registry, value_size, dual: Vec::new(), entity_dofs }
    }

    fn push(&mut self, entity: EntityRef, f: Functional) {
        self.entity_dofs[entity.entity_dim][entity.entity_id].push(self.dual.len());
        self.dual.push(f);
    }

    /// One moment per weight: `int_E u . W_j(x)` where `weight(j, p, out)`
    /// fills the vector weight at quadrature point `p`.
    fn moments(
        &mut self,
        entity: EntityRef,
        rule_degree: usize,
        parametric: bool,
        nweights: usize,
        local_points: impl FnOnce(&DenseMatrix, &DenseMatrix) -> Box<dyn Fn(usize, usize, &mut [f64]) + 'a>,
    ) {
        let q = entity_quadrature(self.registry, self.cell, entity, rule_degree);
        let scale = if parametric && entity.entity_dim > 0 { 1.0 / self.cell.entity_jacobian(entity) } else { 1.0 };
        let np = q.weights.len();
        let ldim = entity.entity_dim;
        let mut local = DenseMatrix::zeros(np, ldim);
        let mut pts = DenseMatrix::zeros(np, self.cell.dim());
        for p in 0..np {
            local.row_mut(p).copy_from_slice(&q.local_points[p]);
            pts.row_mut(p).copy_from_slice(&q.points[p]);
        }
        let weight = local_points(&local, &pts);
        let mut buf = vec![0.0; self.value_size];
        for j in 0..nweights {
            let mut w = DenseMatrix::zeros(np, self.value_size);
            for p in 0..np {
                buf.iter_mut().for_each(|b| *b = 0.0);
                weight(j, p, &mut buf);
                for c in 0..self.value_size {
                    w[(p, c)] = q.weights[p] * scale * buf[c];
                }
            }
            self.push(entity, Functional::new(FunctionalKind::IntegralMoment, entity, pts.clone(), w, Some(q.degree)));
        }
    }

    /// Moments `int_E (u . d) phi_j` against the orthonormal degree-`m`
    /// expansion of the entity, with a fixed direction `d`.
    fn scalar_weight_moments(&mut self, entity: EntityRef, m: usize, rule_degree: usize, direction: Vec<f64>) {
        let sub = ReferenceCell::new(entity.entity_dim).expect("entity dimension is valid");
        let exp = ExpansionSet::new(&sub, m);
        let n = exp.size();
        self.moments(entity, rule_degree, false, n, move |local, _| {
            let phi = exp.values(local).expect("dimension matches");
            Box::new(move |j, p, out: &mut [f64]| {
                let v = phi[(j, p)];
                out.iter_mut().zip(&direction).for_each(|(o, d)| *o = v * d);
            })
        });
    }

    /// Moments against each component of `(P_m)^d` on the cell interior.
    fn interior_component_moments(&mut self, m: usize, rule_degree: usize) {
        let d = self.cell.dim();
        let interior = EntityRef::new(d, 0);
        let exp = ExpansionSet::new(self.cell, m);
        let n = exp.size();
        self.moments(interior, rule_degree, false, n * d, move |local, _| {
            let phi = exp.values(local).expect("dimension matches");
            Box::new(move |j, p, out: &mut [f64]| {
                out[j / n] = phi[(j % n, p)];
            })
        });
    }

    /// Moments `int u . w` against the rows of a vector space on the cell.
    fn interior_space_moments(&mut self, exp: ExpansionSet, rows: DenseMatrix, rule_degree: usize) {
        let d = self.cell.dim();
        let interior = EntityRef::new(d, 0);
        let count = rows.rows();
        self.moments(interior, rule_degree, false, count, move |local, _| {
            let vals = evaluate_rows(&exp, d, &rows, local);
            Box::new(move |j, p, out: &mut [f64]| {
                for c in 0..d {
                    out[c] = vals[c][(j, p)];
                }
            })
        });
    }

    /// Face moments against a set of 2D vector weights expressed in face
    /// parameter coordinates, pushed into the cell by the face frame.
    fn face_frame_moments(&mut self, face: EntityRef, exp: ExpansionSet, rows: DenseMatrix, rule_degree: usize) {
        let (_, axes) = self.cell.entity_frame(face);
        let count = rows.rows();
        self.moments(face, rule_degree, true, count, move |local, _| {
            let vals = evaluate_rows(&exp, 2, &rows, local);
            Box::new(move |j, p, out: &mut [f64]| {
                let (a, b) = (vals[0][(j, p)], vals[1][(j, p)]);
                for c in 0..3 {
                    out[c] = a * axes[0][c] + b * axes[1][c];
                }
            })
        });
    }

    fn normal_facets(&mut self, k_weight: usize, variant: DofVariant, rule_base: usize, lattice: usize) -> Result<(), ElementError> {
        let d = self.cell.dim();
        for f in 0..self.cell.num_entities(d - 1) {
            let facet = EntityRef::new(d - 1, f);
            match variant {
                DofVariant::Integral(q) => {
                    self.scalar_weight_moments(facet, k_weight, rule_base + q, self.cell.facet_normal(f));
                }
                DofVariant::Point => {
                    for x in make_points(self.cell, facet, lattice, NodeVariant::Equispaced)? {
                        let fun = point_scaled_normal(self.cell, f, &x)?;
                        self.push(facet, fun);
                    }
                }
            }
        }
        Ok(())
    }

    fn tangential_edges(&mut self, k_weight: usize, variant: DofVariant, rule_base: usize, lattice: usize) -> Result<(), ElementError> {
        for e in 0..self.cell.num_entities(1) {
            let edge = EntityRef::new(1, e);
            match variant {
                DofVariant::Integral(q) => {
                    let mut t = self.cell.edge_vector(e);
                    let n = crate::math::norm2(&t);
                    t.iter_mut().for_each(|v| *v /= n);
                    self.scalar_weight_moments(edge, k_weight, rule_base + q, t);
                }
                DofVariant::Point => {
                    for x in make_points(self.cell, edge, lattice, NodeVariant::Equispaced)? {
                        let fun = point_edge_tangential(self.cell, e, &x)?;
                        self.push(edge, fun);
                    }
                }
            }
        }
        Ok(())
    }

    fn finish(self) -> (Vec<Functional>, Vec<Vec<Vec<usize>>>) {
        (self.dual, self.entity_dofs)
    }
}

// ---------------------------------------------------------------------------
// catalog

fn check(family: ElementFamily, cell: &ReferenceCell, degree: usize) -> Result<(), ElementError> {
    let dim = cell.dim();
    if family.is_vector() && !(2..=3).contains(&dim) {
        return Err(ElementError::UnsupportedCell { family, dim });
    }
    if !(1..=3).contains(&dim) {
        return Err(ElementError::UnsupportedCell { family, dim });
    }
    if degree < family.min_degree() {
        return Err(ElementError::InvalidDegree { family, degree, min: family.min_degree() });
    }
    Ok(())
}

pub fn lagrange(cell: &ReferenceCell, degree: usize, variant: NodeVariant) -> Result<CiarletElement, ElementError> {
    let family = ElementFamily::Lagrange;
    check(family, cell, degree)?;
    let registry = QuadratureRegistry::builtin();
    let mut b = DualBuilder::new(cell, &registry, 1);
    for entity in cell.all_entities() {
        for x in make_points(cell, entity, degree, variant)? {
            b.push(entity, point_eval(entity, &x));
        }
    }
    let (dual, entity_dofs) = b.finish();
    let exp = ExpansionSet::new(cell, degree);
    let space = DenseMatrix::identity(exp.size());
    CiarletElement::from_parts(family, cell.clone(), degree, variant.to_string(), exp, 1, space, dual, entity_dofs)
}

pub fn discontinuous_lagrange(cell: &ReferenceCell, degree: usize, variant: NodeVariant) -> Result<CiarletElement, ElementError> {
    let family = ElementFamily::DiscontinuousLagrange;
    check(family, cell, degree)?;
    let registry = QuadratureRegistry::builtin();
    let interior = EntityRef::new(cell.dim(), 0);
    let mut b = DualBuilder::new(cell, &registry, 1);
    if degree == 0 {
        b.push(interior, point_eval(interior, &cell.centroid()));
    } else {
        for entity in cell.all_entities() {
            for x in make_points(cell, entity, degree, variant)? {
                b.push(interior, point_eval(interior, &x));
            }
        }
    }
    let (dual, entity_dofs) = b.finish();
    let exp = ExpansionSet::new(cell, degree);
    let space = DenseMatrix::identity(exp.size());
    CiarletElement::from_parts(family, cell.clone(), degree, variant.to_string(), exp, 1, space, dual, entity_dofs)
}

fn interior_q(variant: DofVariant) -> usize {
    match variant {
        DofVariant::Integral(q) => q,
        DofVariant::Point => 0,
    }
}

pub fn raviart_thomas_with(cell: &ReferenceCell, k: usize, variant: DofVariant, registry: &QuadratureRegistry) -> Result<CiarletElement, ElementError> {
    let family = ElementFamily::RaviartThomas;
    check(family, cell, k)?;
    let d = cell.dim();
    let mut b = DualBuilder::new(cell, registry, d);
    b.normal_facets(k - 1, variant, 2 * k - 1, k + d - 1)?;
    if k >= 2 {
        b.interior_component_moments(k - 2, 2 * k - 2 + interior_q(variant));
    }
    let (dual, entity_dofs) = b.finish();
    let space = raviart_thomas_space(cell, k);
    let exp = ExpansionSet::new(cell, k);
    CiarletElement::from_parts(family, cell.clone(), k, variant.to_string(), exp, d, space, dual, entity_dofs)
}

pub fn raviart_thomas(cell: &ReferenceCell, k: usize, variant: DofVariant) -> Result<CiarletElement, ElementError> {
    raviart_thomas_with(cell, k, variant, &QuadratureRegistry::builtin())
}

pub fn brezzi_douglas_marini_with(
    cell: &ReferenceCell,
    k: usize,
    variant: DofVariant,
    registry: &QuadratureRegistry,
) -> Result<CiarletElement, ElementError> {
    let family = ElementFamily::BrezziDouglasMarini;
    check(family, cell, k)?;
    let d = cell.dim();
    let mut b = DualBuilder::new(cell, registry, d);
    b.normal_facets(k, variant, 2 * k, k + d)?;
    if k >= 2 {
        let rows = nedelec_first_kind_space(cell, k - 1);
        b.interior_space_moments(ExpansionSet::new(cell, k - 1), rows, 2 * k - 1 + interior_q(variant));
    }
    let (dual, entity_dofs) = b.finish();
    let space = vector_poly_rows(d, d, k, k);
    let exp = ExpansionSet::new(cell, k);
    CiarletElement::from_parts(family, cell.clone(), k, variant.to_string(), exp, d, space, dual, entity_dofs)
}

pub fn brezzi_douglas_marini(cell: &ReferenceCell, k: usize, variant: DofVariant) -> Result<CiarletElement, ElementError> {
    brezzi_douglas_marini_with(cell, k, variant, &QuadratureRegistry::builtin())
}

pub fn nedelec_first_kind_with(
    cell: &ReferenceCell,
    k: usize,
    variant: DofVariant,
    registry: &QuadratureRegistry,
) -> Result<CiarletElement, ElementError> {
    let family = ElementFamily::NedelecFirstKind;
    check(family, cell, k)?;
    let d = cell.dim();
    let iq = interior_q(variant);
    let mut b = DualBuilder::new(cell, registry, d);
    b.tangential_edges(k - 1, variant, 2 * k - 1, k + 1)?;
    if d == 2 {
        if k >= 2 {
            b.interior_component_moments(k - 2, 2 * k - 2 + iq);
        }
    } else {
        if k >= 2 {
            // tangential moments against P_{k-2} in both face frame directions
            let tri = ReferenceCell::triangle();
            let exp = ExpansionSet::new(&tri, k - 2);
            let rows = vector_poly_rows(2, 2, k - 2, k - 2);
            for f in 0..cell.num_entities(2) {
                b.face_frame_moments(EntityRef::new(2, f), exp.clone(), rows.clone(), 2 * k - 2 + iq);
            }
        }
        if k >= 3 {
            b.interior_component_moments(k - 3, 2 * k - 3 + iq);
        }
    }
    let (dual, entity_dofs) = b.finish();
    let space = nedelec_first_kind_space(cell, k);
    let exp = ExpansionSet::new(cell, k);
    CiarletElement::from_parts(family, cell.clone(), k, variant.to_string(), exp, d, space, dual, entity_dofs)
}

pub fn nedelec_first_kind(cell: &ReferenceCell, k: usize, variant: DofVariant) -> Result<CiarletElement, ElementError> {
    nedelec_first_kind_with(cell, k, variant, &QuadratureRegistry::builtin())
}

/// Second-kind Nedelec element: tangential edge moments against `P_k`,
/// face moments against `RT_{k-1}` of the face (3D), interior moments
/// against `RT_{k-1}` (2D) or `RT_{k-2}` (3D).
pub fn nedelec_second_kind_with(
    cell: &ReferenceCell,
    k: usize,
    variant: DofVariant,
    registry: &QuadratureRegistry,
) -> Result<CiarletElement, ElementError> {
    let family = ElementFamily::NedelecSecondKind;
    check(family, cell, k)?;
    let d = cell.dim();
    let iq = interior_q(variant);
    let mut b = DualBuilder::new(cell, registry, d);
    b.tangential_edges(k, variant, 2 * k, k + 2)?;
    if d == 2 {
        if k >= 2 {
            let rows = raviart_thomas_space(cell, k - 1);
            b.interior_space_moments(ExpansionSet::new(cell, k - 1), rows, 2 * k - 1 + iq);
        }
    } else {
        if k >= 2 {
            let tri = ReferenceCell::triangle();
            let rows = raviart_thomas_space(&tri, k - 1);
            let exp = ExpansionSet::new(&tri, k - 1);
            for f in 0..cell.num_entities(2) {
                b.face_frame_moments(EntityRef::new(2, f), exp.clone(), rows.clone(), 2 * k - 1 + iq);
            }
        }
        if k >= 3 {
            let rows = raviart_thomas_space(cell, k - 2);
            b.interior_space_moments(ExpansionSet::new(cell, k - 2), rows, 2 * k - 2 + iq);
        }
    }
    let (dual, entity_dofs) = b.finish();
    let space = vector_poly_rows(d, d, k, k);
    let exp = ExpansionSet::new(cell, k);
    CiarletElement::from_parts(family, cell.clone(), k, variant.to_string(), exp, d, space, dual, entity_dofs)
}

pub fn nedelec_second_kind(cell: &ReferenceCell, k: usize, variant: DofVariant) -> Result<CiarletElement, ElementError> {
    nedelec_second_kind_with(cell, k, variant, &QuadratureRegistry::builtin())
}

/// Build any catalog element, taking integral-moment rules from `registry`.
pub fn create_element(spec: &ElementSpec, registry: &QuadratureRegistry) -> Result<CiarletElement, ElementError> {
    let cell = ReferenceCell::new(spec.dim)?;
    match spec.family {
        ElementFamily::Lagrange => lagrange(&cell, spec.degree, spec.nodes),
        ElementFamily::DiscontinuousLagrange => discontinuous_lagrange(&cell, spec.degree, spec.nodes),
        ElementFamily::RaviartThomas => raviart_thomas_with(&cell, spec.degree, spec.dofs, registry),
        ElementFamily::BrezziDouglasMarini => brezzi_douglas_marini_with(&cell, spec.degree, spec.dofs, registry),
        ElementFamily::NedelecFirstKind => nedelec_first_kind_with(&cell, spec.degree, spec.dofs, registry),
        ElementFamily::NedelecSecondKind => nedelec_second_kind_with(&cell, spec.degree, spec.dofs, registry),
    }
}

/// Row index of the first derivative `d/dx_k` in an order >= 1 tabulation.
pub fn first_derivative_slot(dim: usize, k: usize) -> usize {
    let ders = derivative_multi_indices(dim, 1);
    ders.iter().position(|d| d[k] == 1).expect("direction in range")
}
