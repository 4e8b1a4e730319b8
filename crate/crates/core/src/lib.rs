//! Eigenvalues and pseudospectra of non-selfadjoint Schrödinger operators
//! `−Δ + Q` with complex potentials, approximated by domain truncation.
//!
//! The crate is organised bottom-up:
//!
//! * [`potentials`]: the decomposition `Q = Q₀ − U + W`, sample-based
//!   assumption checks and analytic resolvent enclosures;
//! * [`ode`]: renormalised adaptive Runge–Kutta integration of the
//!   one-dimensional and radial ODEs;
//! * [`shooting`]: Wronskian miss-distance, argument-principle counting and
//!   eigenvalue location, eigenfunctions;
//! * [`sweep`]: eigenvalue trajectories over growing truncations and their
//!   classification;
//! * [`matrix`]: an independent finite-difference backend with resolvent
//!   norms, pseudospectra and the Attouch–Wets surrogate;
//! * [`separable`]: multi-dimensional spectra from one-dimensional solves;
//! * [`report`]: experiment configuration and CSV/JSON artefacts.

pub mod contour;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod matrix;
pub mod ode;
pub mod potentials;
pub mod report;
pub mod separable;
pub mod shooting;
pub mod sweep;

pub use error::{Error, Result};
pub use geometry::{Rect, ScaledComplex};
pub use num_complex::Complex64;
