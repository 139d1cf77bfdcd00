//! Recovery of sparse Dirac ensembles on the 2-sphere from their projection
//! onto spherical harmonics of degree at most N.
//!
//! The crate implements the full pipeline:
//!
//! * [`harmonics`] — associated Legendre functions, the orthonormal basis
//!   `Y_{n,k}`, its trigonometric expansion, and the forward/adjoint
//!   measurement operators.
//! * [`signal`] — Dirac ensembles, separated random supports, equiangular
//!   grids, noise injection and noise-level calibration.
//! * [`conic`] — a first-order conic solver (free, second-order and
//!   positive-semidefinite cones) with a complex-Hermitian-to-real embedding.
//! * [`analog`] — the three-stage recovery: semidefinite dual program,
//!   root finding on the sphere, least-squares amplitude fitting.
//! * [`discrete`] — the gridded variant: `l1` minimization with a noise ball.
//! * [`experiments`] — a reproducible benchmark harness emitting CSV, JSON
//!   and SVG artifacts.

// Force linking of the system BLAS/LAPACK backend.
use openblas_src as _;

pub mod analog;
pub mod conic;
pub mod discrete;
pub mod experiments;
pub mod harmonics;
pub mod signal;

pub use harmonics::{DualPolynomial, HarmonicCoeffs, SpherePoint, TrigTable};
pub use signal::{DiracEnsemble, NoiseSpec, SphereGrid};
