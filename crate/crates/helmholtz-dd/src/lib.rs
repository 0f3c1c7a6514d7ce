//! A 2-D Helmholtz finite-element solver on a rectangle truncated by
//! Cartesian perfectly matched layers, together with a suite of overlapping
//! Schwarz domain-decomposition methods and a geometric-optics ray module
//! that predicts their convergence behaviour at high frequency.
//!
//! The crate is organised around the pipeline
//!
//! ```text
//! mesh -> absorber -> decomposition -> assembly -> solvers -> schwarz
//!                                                     |
//!                                   rays  <-----------+----> harness (experiments, CLI)
//! ```
//!
//! * [`mesh`] builds structured tensor-product Lagrange meshes of the
//!   PML-extended rectangle and classifies elements by region.
//! * [`absorber`] defines the PML scaling profiles and the alternative
//!   complex-absorbing-potential profile.
//! * [`decomposition`] constructs strip and checkerboard overlapping
//!   subdomains, the smooth partition of unity and the discrete
//!   restriction/prolongation operators.
//! * [`assembly`] assembles the global and per-subdomain complex sparse
//!   systems and the Bessel load vector.
//! * [`solvers`] provides direct sparse factorisations (banded and
//!   fill-reducing) and full GMRES.
//! * [`schwarz`] implements the parallel fixed point / preconditioner and
//!   the sequential sweeping methods under arbitrary ordering sequences.
//! * [`rays`] integrates Hamiltonian trajectories, decides which words of
//!   subdomain indices are allowed, and computes the convergence bound.
//! * [`harness`] reproduces the convergence studies at desk scale and
//!   backs the command-line interface.
//!
//! With the default `parallel` feature the embarrassingly parallel inner
//! loops (element integration, per-subdomain solves, ray batches) run on
//! rayon; disabling it yields a fully sequential build with identical
//! results.

pub mod absorber;
pub mod bessel;
pub mod assembly;
pub mod decomposition;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod mesh;
pub mod par;
pub mod quadrature;
pub mod rays;
pub mod schwarz;
pub mod solvers;

pub use error::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Complex scalar used for all assembled systems.
pub type C64 = num_complex::Complex64;
