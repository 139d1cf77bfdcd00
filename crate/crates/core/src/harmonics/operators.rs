//! The measurement operator `F_N`, its adjoint, and the low-resolution
//! projection `P_N = F_N* F_N`.

use super::legendre::{legendre_table, normalization};
use super::{basis_len, DualPolynomial, HarmonicCoeffs, HarmonicsError, SpherePoint};
use crate::signal::DiracEnsemble;
use num_complex::Complex64;

/// Evaluates the basis function `Y_{n,k}(xi) = A_{n,k} e^{jk phi} P_{n,|k|}(cos theta)`.
pub fn eval_y(n: usize, k: i64, xi: &SpherePoint) -> Result<Complex64, HarmonicsError> {
    let a = normalization(n, k)?;
    let p = super::legendre::assoc_legendre(n, k, xi.theta.cos())?;
    Ok(Complex64::from_polar(1.0, k as f64 * xi.phi) * a * p)
}

/// All `Y_{n,k}(xi)` for `n <= degree`, column stacked like [`HarmonicCoeffs`].
pub fn eval_y_all(degree: usize, xi: &SpherePoint) -> Vec<Complex64> {
    let table = legendre_table(degree, xi.theta.cos()).expect("cos theta is in [-1,1]");
    let mut out = Vec::with_capacity(basis_len(degree));
    for n in 0..=degree {
        for k in -(n as i64)..=(n as i64) {
            let a = normalization(n, k).expect("|k| <= n by construction");
            let v = Complex64::from_polar(1.0, k as f64 * xi.phi) * a * table.get(n, k);
            out.push(v);
        }
    }
    out
}

/// Measurements `y_{n,k} = <f, Y_{n,k}> = sum_m c_m conj(Y_{n,k}(xi_m))`
/// for all `n <= degree`.
pub fn forward_measure(f: &DiracEnsemble, degree: usize) -> HarmonicCoeffs {
    let mut y = HarmonicCoeffs::zeros(degree);
    for (xi, &c) in f.support().iter().zip(f.weights()) {
        let basis = eval_y_all(degree, xi);
        for (v, b) in y.values_mut().iter_mut().zip(basis) {
            *v += c * b.conj();
        }
    }
    y
}

/// Pointwise evaluation of `F_N* alpha (xi) = sum alpha_{n,k} Y_{n,k}(xi)`.
pub fn adjoint_eval(alpha: &DualPolynomial, xi: &SpherePoint) -> Complex64 {
    let basis = eval_y_all(alpha.degree(), xi);
    alpha
        .values()
        .iter()
        .zip(basis)
        .map(|(a, b)| a * b)
        .sum()
}

/// Batch variant of [`adjoint_eval`].
pub fn adjoint_eval_batch(alpha: &DualPolynomial, points: &[SpherePoint]) -> Vec<Complex64> {
    points.iter().map(|xi| adjoint_eval(alpha, xi)).collect()
}

/// The low-resolution field `Re (F_N* F_N f)` evaluated at `points`.
///
/// The imaginary part of `F_N* F_N f` at any point is a numerical residue
/// below 1e-9 for real-weighted ensembles and is discarded.
pub fn project_field(f: &DiracEnsemble, degree: usize, points: &[SpherePoint]) -> Vec<f64> {
    let y = forward_measure(f, degree);
    let alpha = DualPolynomial::from_values(degree, y.values().to_vec())
        .expect("same indexing as the measurements");
    points
        .iter()
        .map(|xi| {
            let v = adjoint_eval(&alpha, xi);
            debug_assert!(v.im.abs() < 1e-9, "projection field not real: {v}");
            v.re
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonics::quadrature::gauss_legendre;
    use crate::signal::DiracEnsemble;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_point(rng: &mut impl Rng) -> SpherePoint {
        let phi = rng.random::<f64>() * 2.0 * PI;
        let theta = (1.0 - 2.0 * rng.random::<f64>()).clamp(-1.0, 1.0).acos();
        SpherePoint { phi, theta }
    }

    #[test]
    fn constant_basis_function() {
        let v = eval_y(0, 0, &SpherePoint::wrap(1.3, 2.2)).unwrap();
        assert!((v.re - 0.2820947917738781).abs() < 1e-12);
        assert!(v.im.abs() < 1e-15);
    }

    #[test]
    fn y10_at_north_pole() {
        let v = eval_y(1, 0, &SpherePoint::north_pole()).unwrap();
        assert!((v.re - 0.4886025119029199).abs() < 1e-12);
    }

    #[test]
    fn conjugation_under_order_flip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n = rng.random_range(0..8usize);
            let k = rng.random_range(-(n as i64)..=(n as i64));
            let xi = random_point(&mut rng);
            let a = eval_y(n, k, &xi).unwrap();
            let b = eval_y(n, -k, &xi).unwrap();
            assert!((a.conj() - b).norm() < 1e-13);
        }
    }

    #[test]
    fn eval_y_all_matches_scalar() {
        let xi = SpherePoint::wrap(0.9, 2.5);
        let all = eval_y_all(6, &xi);
        for n in 0..=6usize {
            for k in -(n as i64)..=(n as i64) {
                let v = eval_y(n, k, &xi).unwrap();
                assert!((all[super::super::coeff_index(n, k)] - v).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn north_pole_measurements() {
        let f = DiracEnsemble::new(vec![SpherePoint::north_pole()], vec![1.0]).unwrap();
        let y = forward_measure(&f, 5);
        for n in 0..=5usize {
            let expect = normalization(n, 0).unwrap();
            assert!((y.get(n, 0).re - expect).abs() < 1e-13);
            assert!(y.get(n, 0).im.abs() < 1e-15);
            for k in 1..=(n as i64) {
                assert_eq!(y.get(n, k), Complex64::ZERO);
                assert_eq!(y.get(n, -k), Complex64::ZERO);
            }
        }
    }

    #[test]
    fn empty_ensemble_measures_zero() {
        let f = DiracEnsemble::empty();
        let y = forward_measure(&f, 4);
        assert!(y.values().iter().all(|v| *v == Complex64::ZERO));
        assert!(project_field(&f, 4, &[SpherePoint::north_pole()])
            .iter()
            .all(|v| *v == 0.0));
    }

    #[test]
    fn forward_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mk = |rng: &mut ChaCha8Rng| {
            let pts: Vec<_> = (0..4).map(|_| random_point(rng)).collect();
            let ws: Vec<f64> = (0..4).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
            DiracEnsemble::new(pts, ws).unwrap()
        };
        let f = mk(&mut rng);
        let g = mk(&mut rng);
        let mut sum_support = f.support().to_vec();
        sum_support.extend_from_slice(g.support());
        let mut sum_weights = f.weights().to_vec();
        sum_weights.extend_from_slice(g.weights());
        let fg = DiracEnsemble::new(sum_support, sum_weights).unwrap();

        let y_fg = forward_measure(&fg, 6);
        let y_f = forward_measure(&f, 6);
        let y_g = forward_measure(&g, 6);
        let max_dev = y_fg
            .values()
            .iter()
            .zip(y_f.values().iter().zip(y_g.values()))
            .map(|(s, (a, b))| (s - (a + b)).norm())
            .fold(0.0f64, f64::max)
            ;
        assert!(max_dev < 1e-12, "linearity deviation {max_dev}");
    }

    #[test]
    fn hermitian_symmetry_of_measurements() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<_> = (0..5).map(|_| random_point(&mut rng)).collect();
        let ws: Vec<f64> = (0..5).map(|_| rng.random::<f64>() * 10.0 - 5.0).collect();
        let f = DiracEnsemble::new(pts, ws).unwrap();
        let y = forward_measure(&f, 7);
        assert!(y.hermitian_defect() < 1e-12);
    }

    #[test]
    fn adjoint_of_unit_and_zero() {
        let mut alpha = DualPolynomial::zeros(3);
        alpha.set(0, 0, Complex64::ONE);
        for xi in [
            SpherePoint::north_pole(),
            SpherePoint::wrap(1.0, 1.0),
            SpherePoint::wrap(4.0, 3.0),
        ] {
            let q = adjoint_eval(&alpha, &xi);
            assert!((q.re - 0.2820947917738781).abs() < 1e-12 && q.im.abs() < 1e-14);
        }
        let zero = DualPolynomial::zeros(3);
        assert_eq!(adjoint_eval(&zero, &SpherePoint::north_pole()), Complex64::ZERO);
    }

    #[test]
    fn delta_field_is_positive_norm_sum() {
        // P_N delta at its own location equals sum |Y_{n,k}|^2 there
        let xi = SpherePoint::wrap(2.0, 1.1);
        let f = DiracEnsemble::new(vec![xi], vec![1.0]).unwrap();
        let val = project_field(&f, 10, &[xi])[0];
        let expect: f64 = eval_y_all(10, &xi).iter().map(|v| v.norm_sqr()).sum();
        assert!(expect > 0.0);
        assert!((val - expect).abs() < 1e-10 * expect);
    }

    #[test]
    fn field_integrates_to_total_mass() {
        // only the (0,0) term survives integration over the sphere
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<_> = (0..3).map(|_| random_point(&mut rng)).collect();
        let f = DiracEnsemble::new(pts, vec![2.0, -0.7, 1.3]).unwrap();
        let degree = 6;
        let (nodes, weights) = gauss_legendre(24);
        let n_phi = 32;
        let mut integral = 0.0;
        for (x, w) in nodes.iter().zip(&weights) {
            let theta = x.acos();
            for i in 0..n_phi {
                let phi = 2.0 * PI * i as f64 / n_phi as f64;
                let v = project_field(&f, degree, &[SpherePoint::wrap(phi, theta)])[0];
                integral += v * w * 2.0 * PI / n_phi as f64;
            }
        }
        let mass: f64 = f.weights().iter().sum();
        assert!(
            (integral - mass).abs() < 1e-6,
            "integral {integral} vs mass {mass}"
        );
    }

    #[test]
    fn adjoint_real_for_hermitian_alpha() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut alpha = DualPolynomial::zeros(5);
        for n in 0..=5usize {
            alpha.set(n, 0, Complex64::new(rng.random::<f64>() - 0.5, 0.0));
            for k in 1..=(n as i64) {
                let v = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
                alpha.set(n, k, v);
                alpha.set(n, -k, v.conj());
            }
        }
        for _ in 0..20 {
            let xi = random_point(&mut rng);
            assert!(adjoint_eval(&alpha, &xi).im.abs() < 1e-10);
        }
    }
}
