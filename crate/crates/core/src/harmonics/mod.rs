//! Spherical-harmonic numerics.
//!
//! The orthonormal basis used throughout is
//!
//! ```text
//! Y_{n,k}(xi) = A_{n,k} e^{j k phi} P_{n,|k|}(cos theta)
//! ```
//!
//! with `A_{n,k} = sqrt((2n+1)/(4 pi) * (n-|k|)!/(n+|k|)!)`. No
//! Condon-Shortley phase is applied and negative orders are defined by
//! `P_{n,-k} = P_{n,k}`, so that `Y_{n,-k} = conj(Y_{n,k})`.

mod io;
mod legendre;
mod operators;
pub mod quadrature;
mod trig;

pub use io::{coeffs_from_csv, coeffs_to_csv, coeffs_to_json};
pub use legendre::{assoc_legendre, legendre_table, normalization, LegendreTable};
pub use operators::{
    adjoint_eval, adjoint_eval_batch, eval_y, eval_y_all, forward_measure, project_field,
};
pub use trig::{trig_expansion, TrigTable};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Errors raised by basis evaluation and coefficient handling.
#[derive(Debug, Error)]
pub enum HarmonicsError {
    #[error("order |k|={k} exceeds degree n={n}")]
    OrderOutOfRange { n: usize, k: i64 },
    #[error("argument x={0} outside [-1, 1]")]
    ArgOutOfRange(f64),
    #[error("point (phi={phi}, theta={theta}) outside [0,2pi) x [0,pi]")]
    PointOutOfRange { phi: f64, theta: f64 },
    #[error("coefficient vector has length {got}, expected {expected} for degree {degree}")]
    LengthMismatch {
        degree: usize,
        expected: usize,
        got: usize,
    },
    #[error("degree mismatch: {0} vs {1}")]
    DegreeMismatch(usize, usize),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A point `xi = (phi, theta)` on the unit sphere, with `phi` the azimuth in
/// `[0, 2pi)` and `theta` the polar angle in `[0, pi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint {
    pub phi: f64,
    pub theta: f64,
}

impl SpherePoint {
    /// Builds a point, validating the ranges.
    pub fn new(phi: f64, theta: f64) -> Result<Self, HarmonicsError> {
        if !(0.0..2.0 * PI).contains(&phi) || !(0.0..=PI).contains(&theta) {
            return Err(HarmonicsError::PointOutOfRange { phi, theta });
        }
        Ok(SpherePoint { phi, theta })
    }

    /// Builds a point from arbitrary angles by wrapping `phi` modulo `2pi`
    /// and reflecting `theta` back into `[0, pi]`.
    pub fn wrap(phi: f64, theta: f64) -> Self {
        let mut theta = theta.rem_euclid(2.0 * PI);
        let mut phi = phi;
        if theta > PI {
            theta = 2.0 * PI - theta;
            phi += PI;
        }
        let phi = phi.rem_euclid(2.0 * PI);
        SpherePoint { phi, theta }
    }

    /// The point as a unit vector in R^3.
    pub fn unit_vec(&self) -> [f64; 3] {
        let (sp, cp) = self.phi.sin_cos();
        let (st, ct) = self.theta.sin_cos();
        [st * cp, st * sp, ct]
    }

    /// Builds a point from a (not necessarily normalized) direction in R^3.
    pub fn from_vec(v: [f64; 3]) -> Self {
        let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        let theta = (v[2] / r).clamp(-1.0, 1.0).acos();
        let phi = v[1].atan2(v[0]).rem_euclid(2.0 * PI);
        SpherePoint { phi, theta }
    }

    /// Geodesic distance `arccos(xi_i . xi_j)`, in `[0, pi]`.
    pub fn distance(&self, other: &SpherePoint) -> f64 {
        let a = self.unit_vec();
        let b = other.unit_vec();
        let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        dot.clamp(-1.0, 1.0).acos()
    }

    pub fn north_pole() -> Self {
        SpherePoint {
            phi: 0.0,
            theta: 0.0,
        }
    }

    pub fn south_pole() -> Self {
        SpherePoint {
            phi: 0.0,
            theta: PI,
        }
    }
}

/// Number of basis functions of degree at most `n`.
pub fn basis_len(degree: usize) -> usize {
    (degree + 1) * (degree + 1)
}

/// Flat index of `(n, k)` in the column-stacked ordering: `n` ascending,
/// `k` from `-n` to `n`.
pub fn coeff_index(n: usize, k: i64) -> usize {
    debug_assert!(k.unsigned_abs() as usize <= n);
    n * n + (n as i64 + k) as usize
}

/// Inverse of [`coeff_index`].
pub fn index_to_nk(idx: usize) -> (usize, i64) {
    let n = (idx as f64).sqrt() as usize;
    let n = if (n + 1) * (n + 1) <= idx { n + 1 } else { n };
    let k = idx as i64 - (n * n + n) as i64;
    (n, k)
}

/// The `(N+1)^2` measurements `y_{n,k}`, column stacked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicCoeffs {
    degree: usize,
    values: Vec<Complex64>,
}

impl HarmonicCoeffs {
    pub fn zeros(degree: usize) -> Self {
        HarmonicCoeffs {
            degree,
            values: vec![Complex64::ZERO; basis_len(degree)],
        }
    }

    pub fn from_values(degree: usize, values: Vec<Complex64>) -> Result<Self, HarmonicsError> {
        if values.len() != basis_len(degree) {
            return Err(HarmonicsError::LengthMismatch {
                degree,
                expected: basis_len(degree),
                got: values.len(),
            });
        }
        Ok(HarmonicCoeffs { degree, values })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, n: usize, k: i64) -> Complex64 {
        self.values[coeff_index(n, k)]
    }

    pub fn set(&mut self, n: usize, k: i64, v: Complex64) {
        self.values[coeff_index(n, k)] = v;
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    /// Euclidean norm over all stored entries.
    pub fn norm2(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest deviation from the Hermitian symmetry
    /// `y_{n,-k} = conj(y_{n,k})` of measurements of real-weighted signals.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for n in 0..=self.degree {
            for k in 0..=(n as i64) {
                let d = (self.get(n, -k) - self.get(n, k).conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }
}

/// Coefficients `alpha_{n,k}` of a degree-`N` polynomial
/// `q(xi) = sum alpha_{n,k} Y_{n,k}(xi)`, indexed like [`HarmonicCoeffs`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualPolynomial {
    degree: usize,
    alpha: Vec<Complex64>,
}

impl DualPolynomial {
    pub fn zeros(degree: usize) -> Self {
        DualPolynomial {
            degree,
            alpha: vec![Complex64::ZERO; basis_len(degree)],
        }
    }

    pub fn from_values(degree: usize, alpha: Vec<Complex64>) -> Result<Self, HarmonicsError> {
        if alpha.len() != basis_len(degree) {
            return Err(HarmonicsError::LengthMismatch {
                degree,
                expected: basis_len(degree),
                got: alpha.len(),
            });
        }
        Ok(DualPolynomial { degree, alpha })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn get(&self, n: usize, k: i64) -> Complex64 {
        self.alpha[coeff_index(n, k)]
    }

    pub fn set(&mut self, n: usize, k: i64, v: Complex64) {
        self.alpha[coeff_index(n, k)] = v;
    }

    pub fn values(&self) -> &[Complex64] {
        &self.alpha
    }

    /// Pointwise evaluation `q(xi)`; see [`adjoint_eval`].
    pub fn eval(&self, xi: &SpherePoint) -> Complex64 {
        adjoint_eval(self, xi)
    }
}
