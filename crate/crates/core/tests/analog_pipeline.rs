//! End-to-end recovery checks: strong duality of the dual program, the
//! feasibility characterization of the sup-norm constraint, and support +
//! amplitude recovery on synthetic instances.

use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use spheresr::analog::{build_dual_sdp, extract_alpha, recover, recover_with, RecoverOptions};
use spheresr::conic::{solve, SolveStatus, Tolerances};
use spheresr::harmonics::{adjoint_eval, forward_measure, DualPolynomial, SpherePoint};
use spheresr::signal::{sample_separated_support, DiracEnsemble};
use std::f64::consts::PI;

fn random_alpha(degree: usize, rng: &mut impl Rng) -> DualPolynomial {
    let mut alpha = DualPolynomial::zeros(degree);
    for n in 0..=degree {
        for k in -(n as i64)..=(n as i64) {
            alpha.set(
                n,
                k,
                Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5),
            );
        }
    }
    alpha
}

fn sup_on_dense_grid(alpha: &DualPolynomial) -> f64 {
    let mut sup = 0.0f64;
    let nt = 60;
    let np = 120;
    for it in 0..=nt {
        let theta = PI * it as f64 / nt as f64;
        for ip in 0..np {
            let phi = 2.0 * PI * ip as f64 / np as f64;
            sup = sup.max(adjoint_eval(alpha, &SpherePoint { phi, theta }).norm());
        }
    }
    sup
}

/// Feasibility of the sup-norm system for a fixed alpha: pin alpha with
/// equality rows on top of the dual-program constraints and solve with a
/// zero objective.
fn bounded_real_feasible(alpha: &DualPolynomial) -> bool {
    let degree = alpha.degree();
    let y = spheresr::harmonics::HarmonicCoeffs::zeros(degree);
    let base = build_dual_sdp(&y, 0.0);
    let mut triplets = base.a.triplets();
    let mut b = base.b.clone();
    let mut row = base.a.nrows();
    for (idx, v) in alpha.values().iter().enumerate() {
        triplets.push((row, 2 * idx, 1.0));
        b.push(v.re);
        row += 1;
        triplets.push((row, 2 * idx + 1, 1.0));
        b.push(v.im);
        row += 1;
    }
    let problem = spheresr::conic::ConeProblem {
        blocks: base.blocks.clone(),
        a: spheresr::conic::CsrMatrix::from_triplets(row, base.a.ncols(), &triplets),
        b,
        c: vec![0.0; base.a.ncols()],
    };
    let tol = Tolerances {
        feas: 1e-9,
        gap: 1e-9,
        ..Tolerances::default()
    };
    let sol = solve(&problem, &tol).expect("well formed");
    match sol.status {
        SolveStatus::Optimal => true,
        SolveStatus::Infeasible => false,
        other => panic!("unexpected status {other:?}"),
    }
}

#[test]
fn bounded_real_characterizes_sup_norm() {
    // scaled to sup 0.999 the system is feasible, to 1.001 infeasible
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for degree in [1usize, 2] {
        for trial in 0..3 {
            let alpha = random_alpha(degree, &mut rng);
            let sup = sup_on_dense_grid(&alpha);
            for (scale, expect) in [(0.999, true), (1.001, false)] {
                let mut scaled = DualPolynomial::zeros(degree);
                for n in 0..=degree {
                    for kk in -(n as i64)..=(n as i64) {
                        scaled.set(n, kk, alpha.get(n, kk) * (scale / sup));
                    }
                }
                assert_eq!(
                    bounded_real_feasible(&scaled),
                    expect,
                    "degree {degree} trial {trial} scale {scale}"
                );
            }
        }
    }
}

#[test]
fn strong_duality_single_spike() {
    // one spike of weight 5: the dual optimum equals the TV norm
    let f = DiracEnsemble::new(vec![SpherePoint::wrap(1.1, 1.7)], vec![5.0]).unwrap();
    let y = forward_measure(&f, 2);
    let p = build_dual_sdp(&y, 0.0);
    let sol = solve(&p, &Tolerances::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    let objective = -sol.objective;
    assert!(
        (objective - 5.0).abs() < 5.0 * 1e-5,
        "dual objective {objective}"
    );
    // the dual polynomial peaks at the spike with value 1
    let alpha = extract_alpha(&sol.primal, 2);
    let at_spike = adjoint_eval(&alpha, &f.support()[0]);
    assert!(
        (at_spike.re - 1.0).abs() < 1e-4,
        "q at spike {at_spike}"
    );
}

#[test]
fn strong_duality_separated_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for degree in [3usize, 5] {
        for _ in 0..2 {
            let support = sample_separated_support(degree, 2.0 * PI, degree, &mut rng);
            let weights: Vec<f64> = (0..support.len())
                .map(|_| {
                    let w: f64 = rng.random::<f64>() * 9.0 + 1.0;
                    if rng.random::<bool>() {
                        w
                    } else {
                        -w
                    }
                })
                .collect();
            let f = DiracEnsemble::new(support, weights).unwrap();
            let y = forward_measure(&f, degree);
            let p = build_dual_sdp(&y, 0.0);
            let sol = solve(&p, &Tolerances::default()).unwrap();
            assert_eq!(sol.status, SolveStatus::Optimal);
            let objective = -sol.objective;
            let tv = f.tv_norm();
            assert!(
                ((objective - tv) / tv).abs() < 1e-5,
                "degree {degree}: objective {objective} vs tv {tv}"
            );
        }
    }
}

#[test]
fn recover_single_negative_spike() {
    let xi = SpherePoint::wrap(4.0, 2.3);
    let f = DiracEnsemble::new(vec![xi], vec![-7.0]).unwrap();
    let y = forward_measure(&f, 3);
    let result = recover(&y, 0.0).unwrap();
    assert_eq!(result.ensemble.len(), 1, "{:?}", result.ensemble);
    let got = result.ensemble.support()[0];
    assert!(got.distance(&xi) < 1e-4, "distance {}", got.distance(&xi));
    assert!((result.ensemble.weights()[0] + 7.0).abs() < 1e-4);
    assert!((result.sdp_objective - 7.0).abs() < 7.0 * 1e-4);
}

#[test]
fn recover_two_separated_spikes() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let degree = 4;
    let support = sample_separated_support(degree, 2.0 * PI, 2, &mut rng);
    assert_eq!(support.len(), 2);
    let f = DiracEnsemble::new(support.clone(), vec![3.0, -4.0]).unwrap();
    let y = forward_measure(&f, degree);
    let result = recover(&y, 0.0).unwrap();
    // match each true spike to the closest estimate
    for (xi, w) in support.iter().zip(f.weights()) {
        let (best, bw) = result
            .ensemble
            .support()
            .iter()
            .zip(result.ensemble.weights())
            .min_by(|a, b| {
                xi.distance(a.0)
                    .partial_cmp(&xi.distance(b.0))
                    .expect("finite")
            })
            .expect("nonempty");
        assert!(xi.distance(best) < 1e-3, "distance {}", xi.distance(best));
        assert!((bw - w).abs() < 1e-3, "weight {bw} vs {w}");
    }
    // dual feasibility of the scanned polynomial
    assert!(result.diagnostics.q_sup <= 1.0 + 1e-5);
    // interpolation at the spikes
    for (xi, w) in support.iter().zip(f.weights()) {
        let q = adjoint_eval(&result.dual_poly, xi);
        assert!(
            (q.re - w.signum()).abs() < 1e-4,
            "q({xi:?}) = {q} for weight {w}"
        );
    }
}

#[test]
fn pipeline_is_deterministic() {
    let f = DiracEnsemble::new(vec![SpherePoint::wrap(0.5, 0.8)], vec![2.0]).unwrap();
    let y = forward_measure(&f, 2);
    let a = recover(&y, 0.0).unwrap();
    let b = recover(&y, 0.0).unwrap();
    assert_eq!(a, b);
}

#[test]
fn hermitian_fastpath_matches_generic_projection() {
    let f = DiracEnsemble::new(
        vec![SpherePoint::wrap(1.0, 1.0), SpherePoint::wrap(4.0, 2.0)],
        vec![2.0, 3.0],
    )
    .unwrap();
    let y = forward_measure(&f, 2);
    let fast = recover(&y, 0.0).unwrap();
    let slow = recover_with(
        &y,
        0.0,
        &RecoverOptions {
            tol: Tolerances {
                hermitian_fastpath: false,
                ..Tolerances::default()
            },
            ..RecoverOptions::default()
        },
    )
    .unwrap();
    assert!((fast.sdp_objective - slow.sdp_objective).abs() < 1e-6);
    assert_eq!(fast.ensemble.len(), slow.ensemble.len());
    for (a, b) in fast
        .ensemble
        .support()
        .iter()
        .zip(slow.ensemble.support())
    {
        assert!(a.distance(b) < 1e-6);
    }
}

#[test]
fn noisy_recovery_stays_close() {
    // moderate noise with the calibrated ball still localizes the spikes
    let mut rng = ChaCha8Rng::seed_from_u64(91);
    let degree = 4;
    let support = sample_separated_support(degree, 2.5 * PI, 2, &mut rng);
    let f = DiracEnsemble::new(support.clone(), vec![8.0, -6.0]).unwrap();
    let clean = forward_measure(&f, degree);
    let spec = spheresr::signal::NoiseSpec::new(0.05, 1.0, 7).unwrap();
    let noisy = spheresr::signal::add_noise(&clean, &spec);
    let eps = spheresr::signal::noise_bound(degree, &spec);
    let result = recover(&noisy, eps).unwrap();
    for xi in &support {
        let nearest = result
            .ensemble
            .support()
            .iter()
            .map(|p| p.distance(xi))
            .fold(f64::INFINITY, f64::min);
        assert!(nearest < 0.1, "support shifted by {nearest}");
    }
}
