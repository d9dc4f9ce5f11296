//! Flat geometry engine for half-translation surfaces.
//!
//! Surfaces are Euclidean polygons glued along parallel edges by maps of
//! the form `z -> ±z + c`. On top of that structure the crate computes
//! flat geodesics and their cone-angle conditions, Gauss-Bonnet balances,
//! partial measured foliations with Dirichlet energy and extremal length,
//! piecewise-affine quasiconformal maps and Teichmüller stretches, slit
//! surgery with horizontal flow families, branched double covers,
//! modulus-of-extension experiments, region-of-values estimates (Grunsky
//! disk, residue derivatives, cylinder blobs), and the computational
//! geometry of semi-smooth planar sets.
//!
//! Each major capability has a runnable example under `examples/`; the
//! `halfsurf` binary exposes the same operations as subcommands.

pub mod error;
pub mod geom;
pub mod io;
pub mod surface;

pub mod foliation;
pub mod modulus;

pub mod geodesic;
pub mod qc;
pub mod regions;
pub mod semismooth;
pub mod surgery;
pub mod svg;

pub use error::{Error, Result};
