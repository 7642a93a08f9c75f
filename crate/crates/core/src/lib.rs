//! Reference-element tabulation for simplicial finite elements.
//!
//! Elements are built as Ciarlet triples: a reference simplex, a polynomial
//! space expressed in an orthonormal expansion set, and a list of dual
//! functionals. The nodal basis is obtained by inverting the generalized
//! Vandermonde matrix `V[i][j] = n_i(phi_j)`.
//!
//! The crate is `no_std` and only needs `alloc`.

#![cfg_attr(not(any(feature = "std", test)), no_std)]
#![allow(clippy::needless_range_loop, clippy::too_many_arguments)]

extern crate alloc;

mod math;

pub mod elements;
pub mod fdm;
pub mod functionals;
pub mod linalg;
pub mod meshes;
pub mod nodes;
pub mod polyset;
pub mod quadrature;
pub mod reference_cells;

pub use fdm::{fdm_basis_1d, fdm_dg_basis_1d, tensor_sparsity_2d, FdmBasis1D, FdmError};
pub use elements::{CiarletElement, DofVariant, ElementError, ElementFamily, MappingKind};
pub use functionals::{Functional, FunctionalError, FunctionalKind};
pub use linalg::{DenseMatrix, LinalgError};
pub use meshes::{Field, MeshError, NormKind, SimplicialMesh};
pub use nodes::{NodeFamily, NodeVariant};
pub use polyset::{expansion_size, ExpansionSet, TabulationTable};
pub use quadrature::{create_quadrature, QuadratureRegistry, QuadratureRule};
pub use reference_cells::{EntityRef, ReferenceCell};
