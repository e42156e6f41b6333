//! Packing-density machinery for infinite polycylinders `D² × Rⁿ` in `R^{n+2}`.
//!
//! The crate is organised around four geometric layers and a CLI front end:
//!
//! * [`affine`]: flats, tangent cones at infinity, parallel dimension and the
//!   three-dimensional foliation leaves shared by a pair of cores.
//! * [`gauge`]: radial Blichfeldt gauges, their integrals and the density upper
//!   bounds they produce, plus an empirical checker for the gauge inequality.
//! * [`slice`]: Dirichlet slices, i.e. the Voronoi cell of one polycylinder cut
//!   by the 2-plane orthogonal to its core, bounded by parabolic arcs.
//! * [`packing`]: packings as core flats plus optional lattice periodicity,
//!   validation, the hexagonal product packing and Monte-Carlo density.
//! * [`cli`]: report-producing command implementations used by the binary.
//!
//! Data-parallel loops go through [`exec`]; with the `parallel` feature
//! disabled everything runs sequentially and produces identical results.

// `!(x > y)` is used on purpose so NaN fails the comparison.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod affine;
pub mod cli;
pub mod error;
pub mod exec;
pub mod gauge;
pub(crate) mod linalg;
pub mod packing;
pub(crate) mod poly;
pub mod quad;
pub mod slice;

pub use error::{Error, Result};
