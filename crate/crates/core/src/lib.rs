//! Algebraic multigrid for the shifted curl-curl problem discretized with
//! lowest-order edge elements.
//!
//! Coarse variables come from an interior/exterior splitting of the edge
//! DoFs: exterior edge pairs are averaged along short gradient paths and
//! the interpolation is the interior `A`-harmonic extension of those coarse
//! variables. The splitting can follow a mesh refinement (`Ref`) or be
//! built purely from `(A, G)` by nodal coarsening and path matching (`Alg`);
//! the canonical Nédélec interpolation (`Geo`) is provided as a baseline.
//!
//! Module map:
//!
//! - [`sparse`]: CSR storage, products, sparse Cholesky, MatrixMarket I/O
//! - [`mesh`]: structured, refined and Delaunay meshes, coefficient fields
//! - [`fem`]: edge-element assembly and the discrete gradient
//! - [`splitting`]: refinement and algebraic interior/exterior splittings
//! - [`transfer`]: sparse ideal, dense ideal and geometric interpolation
//! - [`smoothers`]: nodal-patch multiplicative Schwarz plus l1-Jacobi
//! - [`multilevel`]: hierarchies, V-cycle, AMG iteration and PCG
//! - [`verify`]: numerical checks of the structural identities
//! - [`bench`]: experiment driver, CSV tables and SVG coarsening plots

pub mod bench;
pub mod error;
pub mod fem;
pub mod mesh;
pub mod multilevel;
pub mod smoothers;
pub mod sparse;
pub mod splitting;
pub mod transfer;
pub mod verify;

mod dense;

pub use error::{Error, Result};

pub use mesh::{CoefficientField, Mesh2D, RefinementMap};

pub use sparse::{CholeskyFactor, CsrMatrix};

pub use fem::{assemble, Boundary, CurlCurlSystem};
pub use multilevel::{Hierarchy, HierarchyConfig, Method, SolveReport};
pub use splitting::Splitting;
