//! Degrees of freedom as finite sums of weighted component evaluations.
//!
//! Every functional is stored as a set of points together with one weight
//! per value component at each point, so that
//! `n(u) = sum_p sum_c weights[p][c] * u_c(points[p])`. Integral moments are
//! materialized through a quadrature rule on the attached entity.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::linalg::DenseMatrix;
use crate::math::abs;
use crate::quadrature::{entity_quadrature, QuadratureRegistry};
use crate::reference_cells::{EntityRef, ReferenceCell};

/// Points further than this outside their entity are rejected.
pub const POINT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FunctionalError {
    #[error("point {point:?} is {distance:e} away from facet {facet}")]
    NotOnFacet { facet: usize, point: Vec<f64>, distance: f64 },
    #[error("no evaluation provided at point {point:?}")]
    MissingEvaluation { point: Vec<f64> },
    #[error("entity {0:?} cannot carry this functional")]
    BadEntity(EntityRef),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FunctionalKind {
    PointEval,
    PointNormal,
    PointTangential,
    IntegralMoment,
}

impl fmt::Display for FunctionalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FunctionalKind::PointEval => "point_eval",
            FunctionalKind::PointNormal => "point_normal",
            FunctionalKind::PointTangential => "point_tangential",
            FunctionalKind::IntegralMoment => "integral_moment",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Functional {
    pub kind: FunctionalKind,
    pub entity: EntityRef,
    /// `npoints x dim` in cell coordinates.
    pub points: DenseMatrix,
    /// `npoints x value_size`.
    pub weights: DenseMatrix,
    /// Exactness degree of the rule behind an integral moment.
    pub quadrature_degree: Option<usize>,
}

/// Sampled values of a function: `values[p]` holds the components at `points[p]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationTable {
    pub points: DenseMatrix,
    pub values: DenseMatrix,
}

impl EvaluationTable {
    pub fn from_fn(points: DenseMatrix, value_size: usize, mut f: impl FnMut(&[f64], &mut [f64])) -> Self {
        let mut values = DenseMatrix::zeros(points.rows(), value_size);
        for p in 0..points.rows() {
            f(points.row(p), values.row_mut(p));
        }
        Self { points, values }
    }

    fn lookup(&self, x: &[f64]) -> Option<&[f64]> {
        (0..self.points.rows())
            .find(|&p| self.points.row(p).iter().zip(x).all(|(a, b)| abs(a - b) <= 1e-14))
            .map(|p| self.values.row(p))
    }
}

/// Direction in which a vector argument is resolved by a moment.
#[derive(Debug, Clone, PartialEq)]
pub enum MomentDirection {
    /// Scalar-valued target.
    Scalar,
    /// One component of a vector target.
    Component(usize),
    /// Unit outward facet normal.
    Normal,
    /// Unit edge tangent, lower- to higher-numbered vertex.
    Tangential,
    /// A fixed vector.
    Vector(Vec<f64>),
}

impl Functional {
    pub fn new(
        kind: FunctionalKind,
        entity: EntityRef,
        points: DenseMatrix,
        weights: DenseMatrix,
        quadrature_degree: Option<usize>,
    ) -> Self {
        assert_eq!(points.rows(), weights.rows(), "one weight row per point");
        Self { kind, entity, points, weights, quadrature_degree }
    }

    pub fn value_size(&self) -> usize {
        self.weights.cols()
    }

    pub fn num_points(&self) -> usize {
        self.points.rows()
    }

    /// Nonzero `(point, component, weight)` terms.
    pub fn terms(&self) -> impl Iterator<Item = (&[f64], usize, f64)> + '_ {
        (0..self.num_points()).flat_map(move |p| {
            (0..self.value_size())
                .filter(move |&c| self.weights[(p, c)] != 0.0)
                .map(move |c| (self.points.row(p), c, self.weights[(p, c)]))
        })
    }

    /// Apply to a function given as a closure writing its components.
    pub fn apply(&self, mut f: impl FnMut(&[f64], &mut [f64])) -> f64 {
        let mut buf = vec![0.0; self.value_size()];
        let mut s = crate::math::CompensatedSum::default();
        for p in 0..self.num_points() {
            f(self.points.row(p), &mut buf);
            for (c, v) in buf.iter().enumerate() {
                let w = self.weights[(p, c)];
                if w != 0.0 {
                    s.add(w * v);
                }
            }
        }
        s.value()
    }

    /// Apply to pre-sampled values.
    pub fn apply_table(&self, table: &EvaluationTable) -> Result<f64, FunctionalError> {
        let mut s = crate::math::CompensatedSum::default();
        for p in 0..self.num_points() {
            let x = self.points.row(p);
            let v = table.lookup(x).ok_or_else(|| FunctionalError::MissingEvaluation { point: x.to_vec() })?;
            for c in 0..self.value_size() {
                let w = self.weights[(p, c)];
                if w != 0.0 {
                    s.add(w * v[c]);
                }
            }
        }
        Ok(s.value())
    }
}

fn single_point(kind: FunctionalKind, entity: EntityRef, point: &[f64], weights: Vec<f64>) -> Functional {
    let n = weights.len();
    Functional::new(
        kind,
        entity,
        DenseMatrix::from_vec(1, point.len(), point.to_vec()),
        DenseMatrix::from_vec(1, n, weights),
        None,
    )
}

/// Scalar point evaluation.
pub fn point_eval(entity: EntityRef, point: &[f64]) -> Functional {
    single_point(FunctionalKind::PointEval, entity, point, vec![1.0])
}

/// Evaluation of one component of a vector field.
pub fn point_component(entity: EntityRef, point: &[f64], component: usize, value_size: usize) -> Functional {
    let mut w = vec![0.0; value_size];
    w[component] = 1.0;
    single_point(FunctionalKind::PointEval, entity, point, w)
}

/// `u(p) . direction` for an arbitrary direction vector.
pub fn point_direction(kind: FunctionalKind, entity: EntityRef, point: &[f64], direction: &[f64]) -> Functional {
    single_point(kind, entity, point, direction.to_vec())
}

fn check_on_facet(cell: &ReferenceCell, facet_id: usize, point: &[f64]) -> Result<(), FunctionalError> {
    if facet_id >= cell.num_entities(cell.dim() - 1) {
        return Err(FunctionalError::BadEntity(cell.facet(facet_id)));
    }
    let distance = cell.facet_distance(facet_id, point);
    if distance > POINT_TOLERANCE {
        return Err(FunctionalError::NotOnFacet { facet: facet_id, point: point.to_vec(), distance });
    }
    Ok(())
}

/// `u(p) . n` with the unit outward normal of the facet.
pub fn point_normal(cell: &ReferenceCell, facet_id: usize, point: &[f64]) -> Result<Functional, FunctionalError> {
    check_on_facet(cell, facet_id, point)?;
    let n = cell.facet_normal(facet_id);
    Ok(point_direction(FunctionalKind::PointNormal, cell.facet(facet_id), point, &n))
}

/// `u(p) . n |f|`: the normal scaled by the facet measure, which makes the
/// value invariant (up to sign) under the contravariant Piola map.
pub fn point_scaled_normal(cell: &ReferenceCell, facet_id: usize, point: &[f64]) -> Result<Functional, FunctionalError> {
    check_on_facet(cell, facet_id, point)?;
    let facet = cell.facet(facet_id);
    let m = cell.entity_measure(facet);
    let n: Vec<f64> = cell.facet_normal(facet_id).iter().map(|v| v * m).collect();
    Ok(point_direction(FunctionalKind::PointNormal, facet, point, &n))
}

/// `u(p) . t` with the unit tangent of a triangle edge (facet).
pub fn point_tangential(cell: &ReferenceCell, facet_id: usize, point: &[f64]) -> Result<Functional, FunctionalError> {
    if cell.dim() != 2 {
        return Err(FunctionalError::BadEntity(cell.facet(facet_id)));
    }
    check_on_facet(cell, facet_id, point)?;
    let t = cell.facet_tangents(facet_id).swap_remove(0);
    Ok(point_direction(FunctionalKind::PointTangential, cell.facet(facet_id), point, &t))
}

/// `u(p) . (v_b - v_a)` on an edge; invariant under the covariant Piola map.
pub fn point_edge_tangential(cell: &ReferenceCell, edge_id: usize, point: &[f64]) -> Result<Functional, FunctionalError> {
    let edge = EntityRef::new(1, edge_id);
    cell.check_entity(edge).map_err(|_| FunctionalError::BadEntity(edge))?;
    let verts = cell.entity_vertices(edge);
    let bary = cell.barycentric(point);
    let distance = bary
        .iter()
        .enumerate()
        .map(|(i, &b)| if verts.contains(&i) { -b } else { abs(b) })
        .fold(0.0, f64::max);
    if distance > POINT_TOLERANCE {
        return Err(FunctionalError::NotOnFacet { facet: edge_id, point: point.to_vec(), distance });
    }
    let t = cell.edge_vector(edge_id);
    Ok(point_direction(FunctionalKind::PointTangential, edge, point, &t))
}

/// Integral moment over an entity built from a quadrature rule of exactness
/// `rule_degree`. `weight_fn` receives the entity-local coordinates and the
/// cell coordinates of each quadrature point and writes the vector weight
/// (length `value_size`). With `parametric` the measure is that of the unit
/// reference entity; otherwise it is the Lebesgue measure of the entity.
pub fn integral_moment_with(
    registry: &QuadratureRegistry,
    cell: &ReferenceCell,
    entity: EntityRef,
    rule_degree: usize,
    value_size: usize,
    parametric: bool,
    mut weight_fn: impl FnMut(&[f64], &[f64], &mut [f64]),
) -> Functional {
    let q = entity_quadrature(registry, cell, entity, rule_degree);
    let scale = if parametric && entity.entity_dim > 0 { 1.0 / cell.entity_jacobian(entity) } else { 1.0 };
    let n = q.weights.len();
    let mut points = DenseMatrix::zeros(n, cell.dim());
    let mut weights = DenseMatrix::zeros(n, value_size);
    let mut buf = vec![0.0; value_size];
    for p in 0..n {
        points.row_mut(p).copy_from_slice(&q.points[p]);
        buf.iter_mut().for_each(|b| *b = 0.0);
        weight_fn(&q.local_points[p], &q.points[p], &mut buf);
        for c in 0..value_size {
            weights[(p, c)] = q.weights[p] * scale * buf[c];
        }
    }
    Functional::new(FunctionalKind::IntegralMoment, entity, points, weights, Some(q.degree))
}

/// `int_E (u . d) w` where `w` is a scalar polynomial of degree
/// `weight_degree` in entity-local coordinates and `d` is the requested
/// direction. The rule is exact to `weight_degree + embedded_degree + q`.
pub fn integral_moment(
    registry: &QuadratureRegistry,
    cell: &ReferenceCell,
    entity: EntityRef,
    weight_degree: usize,
    embedded_degree: usize,
    extra_degree: usize,
    direction: MomentDirection,
    weight_fn: impl Fn(&[f64]) -> f64,
) -> Result<Functional, FunctionalError> {
    let dim = cell.dim();
    let (value_size, dir): (usize, Vec<f64>) = match direction {
        MomentDirection::Scalar => (1, vec![1.0]),
        MomentDirection::Component(i) => {
            let mut d = vec![0.0; dim];
            d[i] = 1.0;
            (dim, d)
        }
        MomentDirection::Normal => {
            if entity.entity_dim + 1 != dim {
                return Err(FunctionalError::BadEntity(entity));
            }
            (dim, cell.facet_normal(entity.entity_id))
        }
        MomentDirection::Tangential => {
            if entity.entity_dim != 1 {
                return Err(FunctionalError::BadEntity(entity));
            }
            let mut t = cell.edge_vector(entity.entity_id);
            let n = crate::math::norm2(&t);
            t.iter_mut().for_each(|v| *v /= n);
            (dim, t)
        }
        MomentDirection::Vector(v) => (dim, v),
    };
    cell.check_entity(entity).map_err(|_| FunctionalError::BadEntity(entity))?;
    let degree = weight_degree + embedded_degree + extra_degree;
    Ok(integral_moment_with(registry, cell, entity, degree, value_size, false, |local, _, out| {
        let w = weight_fn(local);
        out.iter_mut().zip(&dir).for_each(|(o, d)| *o = w * d);
    }))
}
