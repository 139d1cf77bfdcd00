//! Associated Legendre functions and the spherical-harmonic normalization.
//!
//! `P_{n,k}(x) = (1-x^2)^{k/2} L_n^{(k)}(x)` for `k >= 0`, where `L_n^{(k)}`
//! is the k-th derivative of the Legendre polynomial of degree `n`. No
//! Condon-Shortley phase; negative orders use `P_{n,-k} = P_{n,k}`.

use super::HarmonicsError;
use std::f64::consts::PI;

/// Evaluates `P_{n,|k|}(x)` by upward recursion in the degree.
///
/// The seed is `P_{m,m}(x) = (2m-1)!! (1-x^2)^{m/2}` followed by
/// `P_{n,m} = ((2n-1) x P_{n-1,m} - (n-1+m) P_{n-2,m}) / (n-m)`.
pub fn assoc_legendre(n: usize, k: i64, x: f64) -> Result<f64, HarmonicsError> {
    let m = k.unsigned_abs() as usize;
    if m > n {
        return Err(HarmonicsError::OrderOutOfRange { n, k });
    }
    if !(-1.0..=1.0).contains(&x) {
        return Err(HarmonicsError::ArgOutOfRange(x));
    }
    Ok(assoc_legendre_unchecked(n, m, x))
}

fn assoc_legendre_unchecked(n: usize, m: usize, x: f64) -> f64 {
    let sx = (1.0 - x * x).max(0.0).sqrt();
    let mut pmm = 1.0;
    for i in 1..=m {
        pmm *= (2 * i - 1) as f64 * sx;
    }
    if n == m {
        return pmm;
    }
    let mut prev = pmm;
    let mut curr = (2 * m + 1) as f64 * x * pmm;
    for nn in (m + 2)..=n {
        let next = ((2 * nn - 1) as f64 * x * curr - (nn + m - 1) as f64 * prev)
            / (nn - m) as f64;
        prev = curr;
        curr = next;
    }
    curr
}

/// All values `P_{n,k}(x)` for `0 <= k <= n <= degree` at a single argument,
/// stored triangularly. Shared by basis evaluation and the measurement
/// operators, which need every order at once.
#[derive(Debug, Clone)]
pub struct LegendreTable {
    degree: usize,
    // row n starts at n(n+1)/2 and holds orders 0..=n
    data: Vec<f64>,
}

impl LegendreTable {
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// `P_{n,|k|}(x)` for the tabulated argument.
    pub fn get(&self, n: usize, k: i64) -> f64 {
        let m = k.unsigned_abs() as usize;
        debug_assert!(m <= n && n <= self.degree);
        self.data[n * (n + 1) / 2 + m]
    }
}

/// Tabulates `P_{n,k}(x)` for all `0 <= k <= n <= degree`.
///
/// Runs the diagonal seed plus the degree recursion once per order,
/// `O(degree^2)` total.
pub fn legendre_table(degree: usize, x: f64) -> Result<LegendreTable, HarmonicsError> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(HarmonicsError::ArgOutOfRange(x));
    }
    let sx = (1.0 - x * x).max(0.0).sqrt();
    let mut data = vec![0.0; (degree + 1) * (degree + 2) / 2];
    let at = |n: usize, m: usize| n * (n + 1) / 2 + m;
    // diagonal P_{m,m}
    let mut pmm = 1.0;
    data[at(0, 0)] = 1.0;
    for m in 1..=degree {
        pmm *= (2 * m - 1) as f64 * sx;
        data[at(m, m)] = pmm;
    }
    for m in 0..degree {
        let mut prev = data[at(m, m)];
        let mut curr = (2 * m + 1) as f64 * x * prev;
        data[at(m + 1, m)] = curr;
        for n in (m + 2)..=degree {
            let next =
                ((2 * n - 1) as f64 * x * curr - (n + m - 1) as f64 * prev) / (n - m) as f64;
            data[at(n, m)] = next;
            prev = curr;
            curr = next;
        }
    }
    Ok(LegendreTable { degree, data })
}

/// Normalization factor `A_{n,k} = sqrt((2n+1)/(4 pi) (n-|k|)!/(n+|k|)!)`.
///
/// The factorial ratio is computed in log space, so degrees well beyond the
/// overflow point of `f64` factorials (n ~ 85) are fine.
pub fn normalization(n: usize, k: i64) -> Result<f64, HarmonicsError> {
    let m = k.unsigned_abs() as usize;
    if m > n {
        return Err(HarmonicsError::OrderOutOfRange { n, k });
    }
    // ln (n-m)!/(n+m)! = -sum_{i=n-m+1}^{n+m} ln i
    let mut log_ratio = 0.0;
    for i in (n - m + 1)..=(n + m) {
        log_ratio -= (i as f64).ln();
    }
    Ok(((2 * n + 1) as f64 / (4.0 * PI)).sqrt() * (0.5 * log_ratio).exp())
}
