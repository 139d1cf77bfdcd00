//! Trigonometric expansion of the associated Legendre functions.
//!
//! For every `(n, k)` the function `theta -> P_{n,k}(cos theta)` is a
//! trigonometric polynomial of degree `n` and therefore has a unique
//! expansion `P_{n,k}(cos theta) = sum_{l=-n}^{n} beta_{n,k,l} e^{j l theta}`.
//! The coefficients are obtained by sampling on `2n+1` equispaced angles and
//! inverting the discrete Fourier system, which is exact for this degree.

use super::{coeff_index, legendre::legendre_table};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Coefficients `beta_{n,k,l}` for all `0 <= n <= degree`, `|k| <= n`,
/// `|l| <= n`. The coefficients are real and even in `l`; they are kept as
/// complex numbers because the consumers combine them with complex data.
#[derive(Debug, Clone)]
pub struct TrigTable {
    degree: usize,
    // indexed by coeff_index(n, k); row holds l = -n..=n
    rows: Vec<Vec<Complex64>>,
}

impl TrigTable {
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// `beta_{n,k,l}`; zero when `|l| > n`.
    pub fn beta(&self, n: usize, k: i64, l: i64) -> Complex64 {
        debug_assert!(n <= self.degree && k.unsigned_abs() as usize <= n);
        if l.unsigned_abs() as usize > n {
            return Complex64::ZERO;
        }
        self.rows[coeff_index(n, k)][(l + n as i64) as usize]
    }

    /// Evaluates the expansion `sum_l beta_{n,k,l} e^{j l theta}`.
    pub fn eval_expansion(&self, n: usize, k: i64, theta: f64) -> Complex64 {
        let row = &self.rows[coeff_index(n, k)];
        let mut acc = Complex64::ZERO;
        for (i, b) in row.iter().enumerate() {
            let l = i as i64 - n as i64;
            acc += b * Complex64::from_polar(1.0, l as f64 * theta);
        }
        acc
    }
}

/// Builds the [`TrigTable`] for all degrees up to `degree`.
pub fn trig_expansion(degree: usize) -> TrigTable {
    let mut rows = vec![Vec::new(); (degree + 1) * (degree + 1)];
    for n in 0..=degree {
        let len = 2 * n + 1;
        // P_{n,k}(cos theta_t) on theta_t = 2 pi t / (2n+1) for all k at once.
        // The trigonometric extension past theta = pi carries the signed
        // sin(theta)^{|k|} factor, so odd orders flip sign where sin < 0.
        let mut samples = vec![vec![0.0f64; len]; n + 1];
        for t in 0..len {
            let theta = 2.0 * PI * t as f64 / len as f64;
            let table = legendre_table(n, theta.cos()).expect("cos theta is in [-1,1]");
            let neg_sin = theta.sin() < 0.0;
            for (m, row) in samples.iter_mut().enumerate() {
                let flip = if neg_sin && m % 2 == 1 { -1.0 } else { 1.0 };
                row[t] = flip * table.get(n, m as i64);
            }
        }
        for k in -(n as i64)..=(n as i64) {
            let sample = &samples[k.unsigned_abs() as usize];
            let mut row = vec![Complex64::ZERO; len];
            for l in -(n as i64)..=(n as i64) {
                let mut acc = Complex64::ZERO;
                for (t, &f) in sample.iter().enumerate() {
                    let ang = -2.0 * PI * (l * t as i64) as f64 / len as f64;
                    acc += f * Complex64::from_polar(1.0, ang);
                }
                row[(l + n as i64) as usize] = acc / len as f64;
            }
            rows[coeff_index(n, k)] = row;
        }
    }
    TrigTable { degree, rows }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonics::assoc_legendre;

    #[test]
    fn hand_checked_low_degrees() {
        let t = trig_expansion(2);
        // P_{1,0}(cos t) = cos t = (e^{jt} + e^{-jt})/2
        assert!((t.beta(1, 0, 1) - 0.5).norm() < 1e-14);
        assert!((t.beta(1, 0, -1) - 0.5).norm() < 1e-14);
        assert!(t.beta(1, 0, 0).norm() < 1e-14);
        // P_{1,1}(cos t) = sin t = (e^{jt} - e^{-jt})/(2j)
        assert!((t.beta(1, 1, 1) - Complex64::new(0.0, -0.5)).norm() < 1e-14);
        assert!((t.beta(1, 1, -1) - Complex64::new(0.0, 0.5)).norm() < 1e-14);
        assert!(t.beta(1, 1, 0).norm() < 1e-14);
        // P_{2,0}(cos t) = (3 cos^2 t - 1)/2 = 1/4 + (3/8)(e^{2jt} + e^{-2jt})
        assert!((t.beta(2, 0, 0) - 0.25).norm() < 1e-14);
        assert!((t.beta(2, 0, 2) - 0.375).norm() < 1e-14);
        assert!((t.beta(2, 0, -2) - 0.375).norm() < 1e-14);
        assert!(t.beta(2, 0, 1).norm() < 1e-14);
    }

    #[test]
    fn round_trip_up_to_degree_10() {
        // P_{n,k} itself grows like (2k-1)!! (about 3.4e7 at n = k = 10), so
        // the meaningful tolerance is relative to the function scale; the
        // normalized A_{n,k} P_{n,k} round-trips to better than 1e-10 in
        // absolute terms.
        let degree = 10;
        let table = trig_expansion(degree);
        let mut worst = 0.0f64;
        for n in 0..=degree {
            for k in -(n as i64)..=(n as i64) {
                let scale = (0..100)
                    .map(|i| {
                        let theta = PI * (i as f64 + 0.5) / 100.0;
                        assoc_legendre(n, k, theta.cos()).unwrap().abs()
                    })
                    .fold(1.0f64, f64::max);
                for i in 0..100 {
                    let theta = PI * (i as f64 + 0.5) / 100.0;
                    let direct = assoc_legendre(n, k, theta.cos()).unwrap();
                    let via = table.eval_expansion(n, k, theta);
                    worst = worst.max((via - direct).norm() / scale);
                }
            }
        }
        assert!(worst < 1e-10, "relative round-trip error {worst}");
    }

    #[test]
    fn coefficient_symmetries() {
        // the extension satisfies P~(-theta) = (-1)^k P~(theta) and is real,
        // so beta_{n,k,-l} = (-1)^k beta_{n,k,l}, with beta real for even k
        // and purely imaginary for odd k
        let table = trig_expansion(8);
        for n in 0..=8usize {
            for k in -(n as i64)..=(n as i64) {
                let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                let scale = (0..=(2 * n))
                    .map(|i| table.rows[coeff_index(n, k)][i].norm())
                    .fold(1.0f64, f64::max);
                for l in 0..=(n as i64) {
                    let b = table.beta(n, k, l);
                    if sign > 0.0 {
                        assert!(b.im.abs() < 1e-12 * scale, "beta({n},{k},{l}) = {b}");
                    } else {
                        assert!(b.re.abs() < 1e-12 * scale, "beta({n},{k},{l}) = {b}");
                    }
                    assert!((table.beta(n, k, -l) - sign * b).norm() < 1e-12 * scale);
                }
                // zero outside the band
                assert_eq!(table.beta(n, k, n as i64 + 1), Complex64::ZERO);
            }
        }
    }
}
