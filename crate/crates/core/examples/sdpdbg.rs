use spheresr::analog::build_dual_sdp;
use spheresr::conic::{solve, Tolerances};
use spheresr::harmonics::{forward_measure, SpherePoint};
use spheresr::signal::DiracEnsemble;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let degree: usize = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(2);
    let max_iter: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(20000);
    let f = DiracEnsemble::new(vec![SpherePoint::wrap(1.1, 1.7)], vec![5.0]).unwrap();
    let y = forward_measure(&f, degree);
    let p = build_dual_sdp(&y, 0.0);
    eprintln!(
        "n_vars {} rows {} nnz {}",
        p.num_vars(),
        p.num_constraints(),
        p.a.nnz()
    );
    let tol = Tolerances {
        verbose: true,
        aa_safeguard: std::env::var("AA_SAFE").ok().and_then(|s| s.parse().ok()).unwrap_or(1.0),
        over_relax: std::env::var("RELAX").ok().and_then(|s| s.parse().ok()).unwrap_or(1.5),
        max_iter,
        check_every: 25,
        ..Tolerances::default()
    };
    let t = std::time::Instant::now();
    let sol = solve(&p, &tol).unwrap();
    eprintln!(
        "status {:?} iters {} objective {} dt {:?}",
        sol.status,
        sol.iterations,
        -sol.objective,
        t.elapsed()
    );
    eprintln!("residuals {:?}", sol.residuals);
}
