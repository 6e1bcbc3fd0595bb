//! Explicit fillings of polyhedral cycles in homogeneous Hadamard manifolds.
//!
//! A manifold is presented as `M = M0 × G` with `M0` flat and `G = N ⋊ A` a
//! metric solvable Lie group. Given an integral cycle `Z` of dimension
//! `k >= rank`, [`filling::fill`] translates `Z` into the contracting
//! region, builds the geodesic cylinder `V1` to `M0 × N` plus a cone `V2`
//! over the projection, checks `∂(V1 + V2) = Z` over the integers and
//! measures every mass involved.
//!
//! Module layout, bottom up:
//!
//! - [`algebra`]: structure constants, validation, group-law primitives;
//! - [`structure`]: block decomposition of `n`, `H+`, cone and growth rate;
//! - [`geometry`]: chart points, left trivialization, Jacobi fields;
//! - [`currents`]: integer chains, cylinders, cones and mass quadrature;
//! - [`filling`]: the end-to-end pipeline and its report.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod bundled;
pub mod currents;
pub mod cycles;
pub mod error;
pub mod filling;
pub mod format;
pub mod geometry;
pub mod linalg;
pub mod report;
pub mod sampling;
pub mod structure;

pub use algebra::{Manifold, ManifoldSpec, MetricLieAlgebra, ValidationReport};
pub use currents::{Chain, MassOptions, MassResult};
pub use error::{Error, Result};
pub use geometry::GroupPoint;
pub use structure::{HeberDecomposition, Structure};
