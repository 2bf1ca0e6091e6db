//! Electrostatically actuated micro-cantilever analysis.
//!
//! The beam is an Euler-Bernoulli cantilever of length `L` suspended a gap `G`
//! above a ground electrode and pulled down by a parallel-plate load
//! `eps * b * V^2 / (2 (G - y)^2)`. The crate provides:
//!
//! - [`model`]: parameters, section properties and pointwise physics kernels
//! - [`static_solver`]: ghost-point finite differences with Picard iteration
//! - [`pullin`]: voltage sweeps and bisection of the stable/unstable boundary
//! - [`modal`]: natural frequencies about a deflected equilibrium
//! - [`dynamic`]: implicit time marching of the full nonlinear equation
//! - [`lumped`]: the one-degree-of-freedom spring/capacitor model
//! - [`study`]: parametric studies with CSV, SVG and JSON output
//!
//! Solvers work on the nondimensional problem `w'''' = lambda / (1 - w)^2`
//! on `xi in [0, 1]` with `w = y / G`, `xi = x / L`. Everything public is SI.

pub mod banded;
pub mod dynamic;
pub mod error;
pub mod lumped;
pub mod modal;
pub mod model;
pub mod pullin;
pub mod static_solver;
pub mod study;

pub use error::{Error, Result};
pub use model::{BeamParams, DimensionlessGroup, SectionProps};
pub use static_solver::{Grid, SolverOptions, StaticSolution};
