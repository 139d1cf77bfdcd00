//! Dirac ensembles on the sphere, separated random supports, equiangular
//! grids, and the Gaussian noise model with its tail-bound calibration.

use crate::harmonics::{HarmonicCoeffs, SpherePoint};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::{BufRead, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("support and weight lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("support points {0} and {1} coincide")]
    DuplicateSupport(usize, usize),
    #[error("invalid noise spec: {0}")]
    InvalidNoiseSpec(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A finite signed sum of point masses `f = sum_m c_m delta_{xi_m}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiracEnsemble {
    support: Vec<SpherePoint>,
    weights: Vec<f64>,
}

impl DiracEnsemble {
    /// Builds an ensemble after checking that support points are pairwise
    /// distinct (distance above 1e-12).
    pub fn new(support: Vec<SpherePoint>, weights: Vec<f64>) -> Result<Self, SignalError> {
        if support.len() != weights.len() {
            return Err(SignalError::LengthMismatch(support.len(), weights.len()));
        }
        for i in 0..support.len() {
            for j in (i + 1)..support.len() {
                if support[i].distance(&support[j]) <= 1e-12 {
                    return Err(SignalError::DuplicateSupport(i, j));
                }
            }
        }
        Ok(DiracEnsemble { support, weights })
    }

    pub fn empty() -> Self {
        DiracEnsemble {
            support: Vec::new(),
            weights: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn support(&self) -> &[SpherePoint] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Total-variation norm `sum_m |c_m|`.
    pub fn tv_norm(&self) -> f64 {
        self.weights.iter().map(|c| c.abs()).sum()
    }

    /// Smallest pairwise distance of the support, `pi` for fewer than two points.
    pub fn min_separation(&self) -> f64 {
        let mut best = PI;
        for i in 0..self.support.len() {
            for j in (i + 1)..self.support.len() {
                best = best.min(self.support[i].distance(&self.support[j]));
            }
        }
        best
    }

    /// Writes the `phi,theta,weight` CSV representation.
    pub fn to_csv<W: Write>(&self, mut w: W) -> Result<(), SignalError> {
        writeln!(w, "phi,theta,weight")?;
        for (p, c) in self.support.iter().zip(&self.weights) {
            writeln!(w, "{:.17e},{:.17e},{:.17e}", p.phi, p.theta, c)?;
        }
        Ok(())
    }

    /// Reads back the CSV representation.
    pub fn from_csv<R: BufRead>(r: R) -> Result<Self, SignalError> {
        let mut support = Vec::new();
        let mut weights = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line.starts_with("phi")) {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(SignalError::Parse(format!(
                    "line {}: expected 3 fields",
                    lineno + 1
                )));
            }
            let mut vals = [0.0f64; 3];
            for (slot, f) in vals.iter_mut().zip(&fields) {
                *slot = f
                    .trim()
                    .parse()
                    .map_err(|_| SignalError::Parse(format!("line {}: bad number", lineno + 1)))?;
            }
            support.push(SpherePoint::wrap(vals[0], vals[1]));
            weights.push(vals[2]);
        }
        DiracEnsemble::new(support, weights)
    }
}

/// The equiangular grid `(phi_q, theta_p) = (2 pi q / L, pi p / L)` for
/// `0 <= q, p <= L-1`, with the duplicated pole row collapsed to a single
/// point so that distinct grid points keep distance at least `1/L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereGrid {
    l: usize,
    points: Vec<SpherePoint>,
}

impl SphereGrid {
    pub fn new(l: usize) -> Self {
        assert!(l >= 1);
        let mut points = Vec::with_capacity(l * l);
        points.push(SpherePoint::north_pole());
        for p in 1..l {
            let theta = PI * p as f64 / l as f64;
            for q in 0..l {
                let phi = 2.0 * PI * q as f64 / l as f64;
                points.push(SpherePoint { phi, theta });
            }
        }
        SphereGrid { l, points }
    }

    pub fn resolution(&self) -> usize {
        self.l
    }

    pub fn points(&self) -> &[SpherePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index of the grid point nearest to `xi`.
    pub fn nearest(&self, xi: &SpherePoint) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = p.distance(xi);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Writes the `phi,theta,weight` CSV representation with zero weights.
    pub fn to_csv<W: Write>(&self, mut w: W) -> Result<(), SignalError> {
        writeln!(w, "phi,theta,weight")?;
        for p in &self.points {
            writeln!(w, "{:.17e},{:.17e},0", p.phi, p.theta)?;
        }
        Ok(())
    }
}

/// Additive-noise model: iid real Gaussians of standard deviation `sigma`
/// per stored coefficient, plus the slack `gamma` used in the tail bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub gamma: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(sigma: f64, gamma: f64, seed: u64) -> Result<Self, SignalError> {
        if sigma < 0.0 {
            return Err(SignalError::InvalidNoiseSpec(format!("sigma = {sigma} < 0")));
        }
        if gamma <= 0.0 {
            return Err(SignalError::InvalidNoiseSpec(format!("gamma = {gamma} <= 0")));
        }
        Ok(NoiseSpec { sigma, gamma, seed })
    }
}

/// Geodesic distance between two points; see [`SpherePoint::distance`].
pub fn sphere_distance(a: &SpherePoint, b: &SpherePoint) -> f64 {
    a.distance(b)
}

/// Draws one point uniformly on the sphere (`cos theta` uniform on `[-1,1]`).
pub fn sample_uniform_point(rng: &mut impl Rng) -> SpherePoint {
    let phi = rng.random::<f64>() * 2.0 * PI;
    let theta = (1.0 - 2.0 * rng.random::<f64>()).clamp(-1.0, 1.0).acos();
    SpherePoint { phi, theta }
}

const REJECTION_CAP: usize = 10_000;

/// Sequentially samples up to `count_max` uniform points whose pairwise
/// distances stay at least `nu / N`.
///
/// Each point gets at most 10,000 rejection attempts; fewer points than
/// requested is a valid outcome once the sphere cannot pack more caps.
pub fn sample_separated_support(
    degree: usize,
    nu: f64,
    count_max: usize,
    rng: &mut impl Rng,
) -> Vec<SpherePoint> {
    assert!(nu > 0.0);
    let min_dist = nu / degree as f64;
    let mut points: Vec<SpherePoint> = Vec::with_capacity(count_max);
    while points.len() < count_max {
        let mut placed = false;
        for _ in 0..REJECTION_CAP {
            let cand = sample_uniform_point(rng);
            if points.iter().all(|p| p.distance(&cand) >= min_dist) {
                points.push(cand);
                placed = true;
                break;
            }
        }
        if !placed {
            break;
        }
    }
    points
}

/// Amplitude law for synthetic signals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AmplitudeMode {
    /// iid normal with standard deviation 10.
    Signed,
    /// iid uniform on `[0, 10]`.
    Nonnegative,
}

/// Draws `count` amplitudes under the given law.
pub fn sample_amplitudes(count: usize, mode: AmplitudeMode, rng: &mut impl Rng) -> Vec<f64> {
    match mode {
        AmplitudeMode::Signed => {
            let dist = Normal::new(0.0, 10.0).expect("valid parameters");
            (0..count).map(|_| dist.sample(rng)).collect()
        }
        AmplitudeMode::Nonnegative => {
            let dist = Uniform::new_inclusive(0.0, 10.0).expect("valid parameters");
            (0..count).map(|_| dist.sample(rng)).collect()
        }
    }
}

/// Super-resolution factor `L / N`.
pub fn srf(l: usize, degree: usize) -> f64 {
    assert!(degree >= 1);
    l as f64 / degree as f64
}

/// Adds one real `N(0, sigma^2)` draw to each stored coefficient.
/// Deterministic for a fixed `spec.seed`.
pub fn add_noise(y: &HarmonicCoeffs, spec: &NoiseSpec) -> HarmonicCoeffs {
    let mut out = y.clone();
    if spec.sigma == 0.0 {
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let dist = Normal::new(0.0, spec.sigma).expect("sigma >= 0");
    for v in out.values_mut() {
        *v += dist.sample(&mut rng);
    }
    out
}

/// The calibrated noise ball radius `epsilon = (N+1)(1+gamma) sigma`.
///
/// `||eta||_2` exceeds this with probability at most
/// `exp(-(N+1)^2 gamma^2 / 2)`.
pub fn noise_bound(degree: usize, spec: &NoiseSpec) -> f64 {
    (degree as f64 + 1.0) * (1.0 + spec.gamma) * spec.sigma
}
