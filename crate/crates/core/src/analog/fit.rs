//! Least-squares amplitude fitting over a candidate support.

use crate::harmonics::{basis_len, eval_y_all, HarmonicCoeffs, HarmonicsError, SpherePoint};
use ndarray::{Array1, Array2};
use ndarray_linalg::SVD;

/// Minimum-norm least-squares fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitOutcome {
    pub weights: Vec<f64>,
    /// Euclidean residual of the realified system.
    pub residual: f64,
    /// Numerical rank at the 1e-10 relative singular-value cutoff.
    pub rank: usize,
    /// Ratio of largest to smallest retained singular value.
    pub condition: f64,
}

/// Solves `sum_m c_m conj(Y_{n,k}(xi_m)) = y_{n,k}` for real weights in the
/// least-squares sense.
///
/// The complex system is realified (real and imaginary rows stacked) and
/// solved through an SVD with singular values below `1e-10 sigma_max`
/// truncated, which zeroes the weights of spurious support points instead
/// of amplifying noise.
pub fn fit_amplitudes(
    support: &[SpherePoint],
    y: &HarmonicCoeffs,
) -> Result<FitOutcome, HarmonicsError> {
    if support.is_empty() {
        return Ok(FitOutcome {
            weights: Vec::new(),
            residual: y.norm2(),
            rank: 0,
            condition: 1.0,
        });
    }
    let degree = y.degree();
    let n_rows = 2 * basis_len(degree);
    let n_cols = support.len();
    let mut a = Array2::<f64>::zeros((n_rows, n_cols));
    for (m, xi) in support.iter().enumerate() {
        for (idx, v) in eval_y_all(degree, xi).into_iter().enumerate() {
            let vc = v.conj();
            a[[2 * idx, m]] = vc.re;
            a[[2 * idx + 1, m]] = vc.im;
        }
    }
    let mut rhs = Array1::<f64>::zeros(n_rows);
    for (idx, v) in y.values().iter().enumerate() {
        rhs[2 * idx] = v.re;
        rhs[2 * idx + 1] = v.im;
    }

    let (u, s, vt) = a
        .svd(true, true)
        .map_err(|e| HarmonicsError::Parse(format!("SVD failed: {e}")))?;
    let u = u.expect("requested");
    let vt = vt.expect("requested");
    let smax = s.iter().copied().fold(0.0f64, f64::max);
    let cutoff = 1e-10 * smax;
    let mut rank = 0usize;
    let mut smin = f64::INFINITY;
    let mut w = Array1::<f64>::zeros(n_cols);
    for (i, &sv) in s.iter().enumerate() {
        if sv <= cutoff {
            continue;
        }
        rank += 1;
        smin = smin.min(sv);
        let proj = u.column(i).dot(&rhs) / sv;
        for j in 0..n_cols {
            w[j] += proj * vt[[i, j]];
        }
    }
    let fitted = a.dot(&w);
    let residual = (&fitted - &rhs).iter().map(|r| r * r).sum::<f64>().sqrt();
    Ok(FitOutcome {
        weights: w.to_vec(),
        residual,
        rank,
        condition: if rank > 0 { smax / smin } else { 1.0 },
    })
}
