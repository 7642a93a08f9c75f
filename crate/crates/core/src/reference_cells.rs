//! Reference simplices, their entity topology and facet geometry.
//!
//! The reference cell of dimension `d` is the unit right simplex with
//! vertices at the origin and the `d` unit coordinate vectors. Entities of
//! each dimension are listed lexicographically by their vertex tuples.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{binomial, factorial, sqrt};
use crate::nodes::{barycentric_points, interior_multi_indices, NodeVariant};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CellError {
    #[error("unsupported cell dimension {0}")]
    UnsupportedDimension(usize),
    #[error("entity ({entity_dim}, {entity_id}) does not exist")]
    InvalidEntity { entity_dim: usize, entity_id: usize },
    #[error("degree 0 points are only defined on the cell itself")]
    ZeroDegree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntityRef {
    pub entity_dim: usize,
    pub entity_id: usize,
}

impl EntityRef {
    pub const fn new(entity_dim: usize, entity_id: usize) -> Self {
        Self { entity_dim, entity_id }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceCell {
    dim: usize,
    vertices: Vec<Vec<f64>>,
    /// `topology[e]` lists the entities of dimension `e` as sorted vertex tuples.
    topology: Vec<Vec<Vec<usize>>>,
}

/// Sorted `k`-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::with_capacity(binomial(n, k));
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

pub fn make_cell(dim: usize) -> Result<ReferenceCell, CellError> {
    ReferenceCell::new(dim)
}

impl ReferenceCell {
    pub fn new(dim: usize) -> Result<Self, CellError> {
        if dim > 3 {
            return Err(CellError::UnsupportedDimension(dim));
        }
        let mut vertices = vec![vec![0.0; dim]];
        for i in 0..dim {
            let mut v = vec![0.0; dim];
            v[i] = 1.0;
            vertices.push(v);
        }
        let topology = (0..=dim).map(|e| combinations(dim + 1, e + 1)).collect();
        Ok(Self { dim, vertices, topology })
    }

    pub fn interval() -> Self {
        Self::new(1).expect("valid dimension")
    }

    pub fn triangle() -> Self {
        Self::new(2).expect("valid dimension")
    }

    pub fn tetrahedron() -> Self {
        Self::new(3).expect("valid dimension")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn topology(&self) -> &[Vec<Vec<usize>>] {
        &self.topology
    }

    pub fn num_entities(&self, entity_dim: usize) -> usize {
        self.topology.get(entity_dim).map_or(0, Vec::len)
    }

    pub fn entities(&self, entity_dim: usize) -> impl Iterator<Item = EntityRef> + '_ {
        (0..self.num_entities(entity_dim)).map(move |i| EntityRef::new(entity_dim, i))
    }

    /// Every entity, lowest dimension first.
    pub fn all_entities(&self) -> Vec<EntityRef> {
        (0..=self.dim).flat_map(|e| self.entities(e)).collect()
    }

    pub fn check_entity(&self, entity: EntityRef) -> Result<(), CellError> {
        if entity.entity_id < self.num_entities(entity.entity_dim) {
            Ok(())
        } else {
            Err(CellError::InvalidEntity { entity_dim: entity.entity_dim, entity_id: entity.entity_id })
        }
    }

    pub fn entity_vertices(&self, entity: EntityRef) -> &[usize] {
        &self.topology[entity.entity_dim][entity.entity_id]
    }

    /// Position of the sorted vertex tuple in the entity list, if any.
    pub fn find_entity(&self, verts: &[usize]) -> Option<EntityRef> {
        let e = verts.len().checked_sub(1)?;
        self.topology
            .get(e)?
            .iter()
            .position(|t| t.as_slice() == verts)
            .map(|i| EntityRef::new(e, i))
    }

    /// Lebesgue measure of the cell: `1 / dim!`.
    pub fn volume(&self) -> f64 {
        1.0 / factorial(self.dim)
    }

    pub fn centroid(&self) -> Vec<f64> {
        vec![1.0 / (self.dim + 1) as f64; self.dim]
    }

    /// Origin and edge vectors `v_j - v_0` of the entity parametrization
    /// `x(t) = v_0 + sum_j t_j (v_j - v_0)` over the unit `e`-simplex.
    pub fn entity_frame(&self, entity: EntityRef) -> (Vec<f64>, Vec<Vec<f64>>) {
        let verts = self.entity_vertices(entity);
        let origin = self.vertices[verts[0]].clone();
        let axes = verts[1..]
            .iter()
            .map(|&v| self.vertices[v].iter().zip(&origin).map(|(a, b)| a - b).collect())
            .collect();
        (origin, axes)
    }

    /// Map a point in the entity's reference coordinates to cell coordinates.
    pub fn entity_point(&self, entity: EntityRef, t: &[f64]) -> Vec<f64> {
        let (mut x, axes) = self.entity_frame(entity);
        for (tj, ax) in t.iter().zip(&axes) {
            for (xi, ai) in x.iter_mut().zip(ax) {
                *xi += tj * ai;
            }
        }
        x
    }

    /// Ratio of entity measure to the measure of the unit `e`-simplex, i.e.
    /// `sqrt(det G)` for the Gram matrix `G` of the frame.
    pub fn entity_jacobian(&self, entity: EntityRef) -> f64 {
        let (_, axes) = self.entity_frame(entity);
        gram_sqrt_det(&axes)
    }

    /// Lebesgue measure of the entity (vertices have measure 1).
    pub fn entity_measure(&self, entity: EntityRef) -> f64 {
        self.entity_jacobian(entity) / factorial(entity.entity_dim)
    }

    pub fn facet(&self, facet_id: usize) -> EntityRef {
        EntityRef::new(self.dim - 1, facet_id)
    }

    /// Unit outward normal of a facet.
    pub fn facet_normal(&self, facet_id: usize) -> Vec<f64> {
        let facet = self.facet(facet_id);
        let (origin, axes) = self.entity_frame(facet);
        let mut n = match self.dim {
            1 => vec![1.0],
            2 => vec![axes[0][1], -axes[0][0]],
            3 => cross(&axes[0], &axes[1]),
            _ => unreachable!("cell dimension is at most 3"),
        };
        let norm = sqrt(n.iter().map(|v| v * v).sum());
        n.iter_mut().for_each(|v| *v /= norm);
        let c = self.centroid();
        let outward: f64 = n.iter().zip(origin.iter().zip(&c)).map(|(ni, (o, ci))| ni * (o - ci)).sum();
        if outward < 0.0 {
            n.iter_mut().for_each(|v| *v = -*v);
        }
        n
    }

    /// Orthonormal basis of the facet's tangent space (Gram-Schmidt on the
    /// frame vectors, so the first tangent follows `v_1 - v_0`).
    pub fn facet_tangents(&self, facet_id: usize) -> Vec<Vec<f64>> {
        let (_, axes) = self.entity_frame(self.facet(facet_id));
        orthonormalize(&axes)
    }

    /// Edge vector `v_b - v_a` (from lower- to higher-numbered vertex).
    pub fn edge_vector(&self, edge_id: usize) -> Vec<f64> {
        let (_, axes) = self.entity_frame(EntityRef::new(1, edge_id));
        axes.into_iter().next().expect("edges have one axis")
    }

    /// Whether `x` lies in the closed cell up to `tol`.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.iter().all(|&v| v >= -tol) && x.iter().sum::<f64>() <= 1.0 + tol
    }

    /// Distance-type residual of `x` from the affine hull of a facet plus
    /// any violation of the facet's own barycentric bounds.
    pub fn facet_distance(&self, facet_id: usize, x: &[f64]) -> f64 {
        let verts = self.entity_vertices(self.facet(facet_id));
        let bary = self.barycentric(x);
        let mut off = 0.0f64;
        for (i, &b) in bary.iter().enumerate() {
            if verts.contains(&i) {
                off = off.max(-b);
            } else {
                off = off.max(b.abs());
            }
        }
        off
    }

    /// Barycentric coordinates `(1 - sum x, x_0, ..., x_{d-1})`.
    pub fn barycentric(&self, x: &[f64]) -> Vec<f64> {
        let mut b = Vec::with_capacity(self.dim + 1);
        b.push(1.0 - x.iter().sum::<f64>());
        b.extend_from_slice(x);
        b
    }
}

fn cross(a: &[f64], b: &[f64]) -> Vec<f64> {
    vec![a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn gram_sqrt_det(axes: &[Vec<f64>]) -> f64 {
    match axes.len() {
        0 => 1.0,
        1 => sqrt(axes[0].iter().map(|v| v * v).sum()),
        2 => {
            let g00: f64 = axes[0].iter().map(|v| v * v).sum();
            let g11: f64 = axes[1].iter().map(|v| v * v).sum();
            let g01: f64 = axes[0].iter().zip(&axes[1]).map(|(a, b)| a * b).sum();
            sqrt(g00 * g11 - g01 * g01)
        }
        3 => {
            let c = cross(&axes[1], &axes[2]);
            crate::math::abs(axes[0].iter().zip(&c).map(|(a, b)| a * b).sum())
        }
        _ => unreachable!("entities have dimension at most 3"),
    }
}

fn orthonormalize(vs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(vs.len());
    for v in vs {
        let mut w = v.clone();
        for q in &out {
            let d: f64 = w.iter().zip(q).map(|(a, b)| a * b).sum();
            w.iter_mut().zip(q).for_each(|(a, b)| *a -= d * b);
        }
        let n = sqrt(w.iter().map(|a| a * a).sum());
        w.iter_mut().for_each(|a| *a /= n);
        out.push(w);
    }
    out
}

/// Degree-`degree` lattice points strictly interior to `entity`, in cell
/// coordinates, ordered lexicographically by barycentric multi-index.
/// Vertices yield the vertex itself; degree 0 on the cell yields the centroid.
pub fn make_points(
    cell: &ReferenceCell,
    entity: EntityRef,
    degree: usize,
    variant: NodeVariant,
) -> Result<Vec<Vec<f64>>, CellError> {
    cell.check_entity(entity)?;
    let verts = cell.entity_vertices(entity);
    if entity.entity_dim == 0 {
        return Ok(vec![cell.vertices[verts[0]].clone()]);
    }
    if degree == 0 {
        if entity.entity_dim == cell.dim {
            return Ok(vec![cell.centroid()]);
        }
        return Err(CellError::ZeroDegree);
    }
    let alphas = interior_multi_indices(entity.entity_dim + 1, degree);
    if alphas.is_empty() {
        return Ok(Vec::new());
    }
    let bary = barycentric_points(variant, degree, &alphas);
    Ok((0..alphas.len())
        .map(|r| {
            let mut x = vec![0.0; cell.dim];
            for (k, &v) in verts.iter().enumerate() {
                let b = bary[(r, k)];
                x.iter_mut().zip(&cell.vertices[v]).for_each(|(xi, vi)| *xi += b * vi);
            }
            x
        })
        .collect())
}
