//! Three-stage recovery from low-degree harmonic measurements: a dual
//! semidefinite program, root finding on the sphere, and least-squares
//! amplitude fitting.

mod fit;
mod roots;
mod sdp;

pub use fit::{fit_amplitudes, FitOutcome};
pub use roots::{find_roots, RootSearchOutcome};
pub use sdp::{
    build_dual_sdp, build_dual_sdp_with, extract_alpha, hhat_from_alpha, DualSdpLayout,
    HhatOperator,
};

use crate::conic::{self, ConicError, Residuals, SolveStatus, Tolerances};
use crate::harmonics::{DualPolynomial, HarmonicCoeffs, HarmonicsError, SpherePoint};
use crate::signal::{DiracEnsemble, SignalError};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RecoverError {
    #[error(transparent)]
    Conic(#[from] ConicError),
    #[error("solver finished with status {status:?} (primal {primal_rel:.3e}, dual {dual_rel:.3e}, gap {gap_rel:.3e})")]
    SolverFailed {
        status: SolveStatus,
        primal_rel: f64,
        dual_rel: f64,
        gap_rel: f64,
    },
    #[error("dual polynomial is degenerate (|q| constant at 1)")]
    DegenerateDual,
    #[error("dual polynomial grossly infeasible: sup |q| = {0}")]
    InfeasibleDual(f64),
    #[error(transparent)]
    Harmonics(#[from] HarmonicsError),
    #[error(transparent)]
    Signal(#[from] SignalError),
}

/// Membership test of the half space used to enumerate one representative
/// per conjugate pair: `l > 0`, or `l = 0` and `k >= 0`.
pub fn in_half_space(k: i64, l: i64) -> bool {
    l > 0 || (l == 0 && k >= 0)
}

/// All half-space indices with `|k|, |l| <= max`, in a fixed order.
pub fn half_space_indices(max: i64) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    for l in 0..=max {
        let k_lo = if l == 0 { 0 } else { -max };
        for k in k_lo..=max {
            out.push((k, l));
        }
    }
    out
}

/// The elementary two-level Toeplitz matrix `Theta_{k,l} = Theta_l (x)
/// Theta_k` over side `width^2`, where `Theta_k` has ones on the diagonal
/// `column - row = k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ToeplitzSelector {
    pub k: i64,
    pub l: i64,
}

impl ToeplitzSelector {
    /// The `(row, col)` positions of the ones, for factors of side `width`.
    pub fn entries(&self, width: usize) -> Vec<(usize, usize)> {
        let w = width as i64;
        let mut out = Vec::new();
        for il in (-self.l).max(0)..(w - self.l.max(0)) {
            let jl = il + self.l;
            for ik in (-self.k).max(0)..(w - self.k.max(0)) {
                let jk = ik + self.k;
                out.push(((il * w + ik) as usize, (jl * w + jk) as usize));
            }
        }
        out
    }

    /// `tr(Theta_{k,l} Q)` as a sparse sum over the diagonal pattern.
    pub fn trace_product(
        &self,
        q: &ndarray::Array2<num_complex::Complex64>,
        width: usize,
    ) -> num_complex::Complex64 {
        self.entries(width).iter().map(|&(i, j)| q[[j, i]]).sum()
    }
}

/// Diagnostics accumulated along the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryDiagnostics {
    pub solver_status: SolveStatus,
    pub solver_iterations: usize,
    pub solver_residuals: Residuals,
    /// Largest `|q|` over the dense feasibility scan.
    pub q_sup: f64,
    pub root_searches: usize,
    pub non_convergent_searches: usize,
    pub raw_minima: usize,
    pub roots: usize,
    pub fit_residual: f64,
    pub fit_rank: usize,
    /// Most negative fitted weight in non-negative mode.
    pub nonneg_violation: Option<f64>,
}

/// Output of the recovery pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryResult {
    pub ensemble: DiracEnsemble,
    pub dual_poly: DualPolynomial,
    pub sdp_objective: f64,
    pub diagnostics: RecoveryDiagnostics,
}

impl RecoveryResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

/// Knobs of the pipeline; the defaults match the reference experiments.
#[derive(Debug, Clone, Copy)]
pub struct RecoverOptions {
    pub tol: Tolerances,
    /// Local minima of `1 -+ Re q` below this value count as roots.
    pub root_threshold: f64,
    /// Restrict root finding to `1 - q` and flag negative fitted weights.
    pub nonnegative: bool,
}

impl Default for RecoverOptions {
    fn default() -> Self {
        RecoverOptions {
            tol: Tolerances::default(),
            root_threshold: 1e-5,
            nonnegative: false,
        }
    }
}

/// Runs the full pipeline with default options.
pub fn recover(y: &HarmonicCoeffs, eps: f64) -> Result<RecoveryResult, RecoverError> {
    recover_with(y, eps, &RecoverOptions::default())
}

/// Runs the full pipeline restricted to non-negative signals (roots of
/// `1 - q` only); a fitted weight below `-1e-6` is reported in
/// `diagnostics.nonneg_violation`.
pub fn recover_nonnegative(y: &HarmonicCoeffs) -> Result<RecoveryResult, RecoverError> {
    recover_with(
        y,
        0.0,
        &RecoverOptions {
            nonnegative: true,
            ..RecoverOptions::default()
        },
    )
}

/// Full pipeline with explicit options.
pub fn recover_with(
    y: &HarmonicCoeffs,
    eps: f64,
    opts: &RecoverOptions,
) -> Result<RecoveryResult, RecoverError> {
    let degree = y.degree();
    let problem = build_dual_sdp(y, eps);
    let sol = conic::solve(&problem, &opts.tol)?;
    if sol.status != SolveStatus::Optimal {
        return Err(RecoverError::SolverFailed {
            status: sol.status,
            primal_rel: sol.residuals.primal_rel,
            dual_rel: sol.residuals.dual_rel,
            gap_rel: sol.residuals.gap_rel,
        });
    }
    let alpha = extract_alpha(&sol.primal, degree);
    let sdp_objective = -sol.objective;

    // dense feasibility scan of |q|; the dual constraint bounds it by one
    // up to solver accuracy
    let (q_sup, q_inf) = scan_q(&alpha);
    if q_sup > 1.0 + 1e-3 {
        return Err(RecoverError::InfeasibleDual(q_sup));
    }
    if q_sup - q_inf < 1e-6 && q_sup > 1.0 - 1e-3 {
        return Err(RecoverError::DegenerateDual);
    }

    let search = find_roots(&alpha, opts.root_threshold, !opts.nonnegative);
    let fit = fit_amplitudes(&search.points, y)?;
    let nonneg_violation = if opts.nonnegative {
        let worst = fit.weights.iter().copied().fold(f64::INFINITY, f64::min);
        (worst < -1e-6).then_some(worst)
    } else {
        None
    };
    let ensemble = DiracEnsemble::new(search.points.clone(), fit.weights.clone())?;

    Ok(RecoveryResult {
        ensemble,
        dual_poly: alpha,
        sdp_objective,
        diagnostics: RecoveryDiagnostics {
            solver_status: sol.status,
            solver_iterations: sol.iterations,
            solver_residuals: sol.residuals,
            q_sup,
            root_searches: search.attempted,
            non_convergent_searches: search.non_convergent,
            raw_minima: search.raw_minima,
            roots: search.points.len(),
            fit_residual: fit.residual,
            fit_rank: fit.rank,
            nonneg_violation,
        },
    })
}

/// Max and min of `|q|` over a dense equiangular sample.
fn scan_q(alpha: &DualPolynomial) -> (f64, f64) {
    let degree = alpha.degree().max(1);
    let n_theta = 8 * degree + 4;
    let n_phi = 16 * degree + 8;
    let mut sup = 0.0f64;
    let mut inf = f64::INFINITY;
    for it in 0..=n_theta {
        let theta = PI * it as f64 / n_theta as f64;
        for ip in 0..n_phi {
            let phi = 2.0 * PI * ip as f64 / n_phi as f64;
            let v = alpha.eval(&SpherePoint { phi, theta }).norm();
            sup = sup.max(v);
            inf = inf.min(v);
        }
    }
    (sup, inf)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_space_properties() {
        // H and -H intersect only at the origin and cover the index square
        let max = 4i64;
        let idx = half_space_indices(max);
        for &(k, l) in &idx {
            assert!(in_half_space(k, l));
            let both = in_half_space(k, l) && in_half_space(-k, -l);
            assert_eq!(both, k == 0 && l == 0, "pair ({k},{l})");
        }
        let mut covered = 0usize;
        for k in -max..=max {
            for l in -max..=max {
                if in_half_space(k, l) || in_half_space(-k, -l) {
                    covered += 1;
                }
            }
        }
        let square = (2 * max + 1) * (2 * max + 1);
        assert_eq!(covered as i64, square);
        assert_eq!(idx.len() as i64, (square + 1) / 2);
    }

    #[test]
    fn half_space_closed_under_addition() {
        let max = 3i64;
        for &(k1, l1) in &half_space_indices(max) {
            for &(k2, l2) in &half_space_indices(max) {
                assert!(in_half_space(k1 + k2, l1 + l2), "({k1},{l1}) + ({k2},{l2})");
            }
        }
    }

    #[test]
    fn toeplitz_matches_dense_kronecker() {
        use ndarray::Array2;
        // dense oracle: Theta_l (x) Theta_k with ones where col - row = k
        let width = 5usize; // N = 2
        let dense_theta = |d: i64| -> Array2<f64> {
            let mut t = Array2::zeros((width, width));
            for r in 0..width as i64 {
                let c = r + d;
                if (0..width as i64).contains(&c) {
                    t[[r as usize, c as usize]] = 1.0;
                }
            }
            t
        };
        for k in -(width as i64 - 1)..width as i64 {
            for l in -(width as i64 - 1)..width as i64 {
                let tk = dense_theta(k);
                let tl = dense_theta(l);
                let mut kron = Array2::zeros((width * width, width * width));
                for a in 0..width {
                    for bcol in 0..width {
                        for c in 0..width {
                            for d in 0..width {
                                kron[[a * width + c, bcol * width + d]] =
                                    tl[[a, bcol]] * tk[[c, d]];
                            }
                        }
                    }
                }
                let sel = ToeplitzSelector { k, l };
                let mut sparse = Array2::zeros((width * width, width * width));
                for (i, j) in sel.entries(width) {
                    sparse[[i, j]] = 1.0;
                }
                assert_eq!(sparse, kron, "mismatch at ({k},{l})");
            }
        }
    }

    #[test]
    fn sparse_trace_equals_dense() {
        use ndarray::Array2;
        use num_complex::Complex64;
        let width = 3usize;
        let m = width * width;
        let mut q = Array2::<Complex64>::zeros((m, m));
        for i in 0..m {
            for j in 0..m {
                q[[i, j]] = Complex64::new((i * 7 + j) as f64 * 0.1, (i as f64) - (j as f64));
            }
        }
        for k in -2i64..=2 {
            for l in -2i64..=2 {
                let sel = ToeplitzSelector { k, l };
                let mut theta = Array2::<Complex64>::zeros((m, m));
                for (i, j) in sel.entries(width) {
                    theta[[i, j]] = Complex64::new(1.0, 0.0);
                }
                let dense = theta.dot(&q).diag().sum();
                let sparse = sel.trace_product(&q, width);
                assert!((dense - sparse).norm() < 1e-12);
            }
        }
    }
}
