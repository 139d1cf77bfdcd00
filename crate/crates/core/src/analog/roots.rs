//! Root finding for the level sets `q = 1` and `q = -1` on the sphere.
//!
//! The sphere is partitioned into cells of angular side about `pi/(4N)`.
//! From each cell center a derivative-free trust-region search minimizes
//! `1 - Re q` (and `1 + Re q` for signed signals) in local tangent-plane
//! coordinates, which stay well behaved at the poles. Minima below the
//! acceptance threshold are merged within radius `0.1/N` by averaging.

use crate::harmonics::{adjoint_eval, DualPolynomial, SpherePoint};
use rayon::prelude::*;
use std::f64::consts::PI;

/// Result of a root search.
#[derive(Debug, Clone, PartialEq)]
pub struct RootSearchOutcome {
    pub points: Vec<SpherePoint>,
    /// Total local searches started.
    pub attempted: usize,
    /// Searches that hit the iteration budget before converging.
    pub non_convergent: usize,
    /// Accepted minima before merging.
    pub raw_minima: usize,
}

/// Orthonormal tangent frame plus exponential map at a center point.
struct TangentFrame {
    center: [f64; 3],
    e1: [f64; 3],
    e2: [f64; 3],
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

impl TangentFrame {
    fn at(p: &SpherePoint) -> Self {
        let c = p.unit_vec();
        let helper = if c[2].abs() < 0.9 {
            [0.0, 0.0, 1.0]
        } else {
            [1.0, 0.0, 0.0]
        };
        let e1 = normalize(cross(c, helper));
        let e2 = cross(c, e1);
        TangentFrame { center: c, e1, e2 }
    }

    /// Exponential map: tangent coordinates to a sphere point.
    fn point(&self, u: [f64; 2]) -> SpherePoint {
        let r = (u[0] * u[0] + u[1] * u[1]).sqrt();
        let (cr, sinc) = if r < 1e-8 {
            (1.0 - r * r / 2.0, 1.0 - r * r / 6.0)
        } else {
            (r.cos(), r.sin() / r)
        };
        let v = [
            cr * self.center[0] + sinc * (u[0] * self.e1[0] + u[1] * self.e2[0]),
            cr * self.center[1] + sinc * (u[0] * self.e1[1] + u[1] * self.e2[1]),
            cr * self.center[2] + sinc * (u[0] * self.e1[2] + u[1] * self.e2[2]),
        ];
        SpherePoint::from_vec(v)
    }
}

/// Minimizes the 2x2 quadratic model `g'u + u'Hu/2` over `||u|| <= delta`.
fn trust_region_step(g: [f64; 2], h: [[f64; 2]; 2], delta: f64) -> [f64; 2] {
    // eigendecomposition of the symmetric 2x2 Hessian
    let tr = h[0][0] + h[1][1];
    let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    let l1 = tr / 2.0 - disc;
    let l2 = tr / 2.0 + disc;
    // eigenvector for l1
    let (v1, v2) = if h[0][1].abs() > 1e-14 {
        let v1 = normalize2([h[0][1], l1 - h[0][0]]);
        (v1, [-v1[1], v1[0]])
    } else if h[0][0] <= h[1][1] {
        ([1.0, 0.0], [0.0, 1.0])
    } else {
        ([0.0, 1.0], [1.0, 0.0])
    };
    let g1 = g[0] * v1[0] + g[1] * v1[1];
    let g2 = g[0] * v2[0] + g[1] * v2[1];

    let step_for = |lam: f64| -> [f64; 2] {
        let s1 = -g1 / (l1 + lam);
        let s2 = -g2 / (l2 + lam);
        [s1 * v1[0] + s2 * v2[0], s1 * v1[1] + s2 * v2[1]]
    };
    let norm2 = |s: [f64; 2]| (s[0] * s[0] + s[1] * s[1]).sqrt();

    // interior Newton step when positive definite
    if l1 > 1e-12 {
        let s = step_for(0.0);
        if norm2(s) <= delta {
            return s;
        }
    }
    // boundary solution: find lam > max(0, -l1) with ||step(lam)|| = delta
    let mut lo = (-l1).max(0.0) + 1e-12;
    // expand upper bound until the step fits inside delta
    let mut hi = lo + 1.0;
    for _ in 0..120 {
        if norm2(step_for(hi)) < delta {
            break;
        }
        hi *= 2.0;
    }
    // handle the hard case where the gradient has no component along v1
    if norm2(step_for(lo)) < delta && l1 < 0.0 {
        // move along v1 to the boundary
        let s = step_for(lo);
        let rem = (delta * delta - s[0] * s[0] - s[1] * s[1]).max(0.0).sqrt();
        return [s[0] + rem * v1[0], s[1] + rem * v1[1]];
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if norm2(step_for(mid)) > delta {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 * (1.0 + hi) {
            break;
        }
    }
    step_for(hi)
}

fn normalize2(v: [f64; 2]) -> [f64; 2] {
    let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
    [v[0] / n, v[1] / n]
}

/// One derivative-free trust-region minimization of `f` starting at `start`.
/// Returns the final point and value, plus whether it converged within the
/// iteration budget.
fn local_minimize<F: Fn(&SpherePoint) -> f64>(
    f: &F,
    start: SpherePoint,
    initial_radius: f64,
    max_radius: f64,
) -> (SpherePoint, f64, bool) {
    let mut center = start;
    let mut frame = TangentFrame::at(&center);
    let mut f0 = f(&center);
    let mut delta = initial_radius;
    for _ in 0..80 {
        if delta < 1e-11 {
            return (center, f0, true);
        }
        let s = (0.5 * delta).max(1e-8);
        // six-point stencil for the quadratic model
        let fp1 = f(&frame.point([s, 0.0]));
        let fm1 = f(&frame.point([-s, 0.0]));
        let fp2 = f(&frame.point([0.0, s]));
        let fm2 = f(&frame.point([0.0, -s]));
        let fpp = f(&frame.point([s, s]));
        let g = [(fp1 - fm1) / (2.0 * s), (fp2 - fm2) / (2.0 * s)];
        let h11 = (fp1 - 2.0 * f0 + fm1) / (s * s);
        let h22 = (fp2 - 2.0 * f0 + fm2) / (s * s);
        let h12 = (fpp - fp1 - fp2 + f0) / (s * s);
        let step = trust_region_step(g, [[h11, h12], [h12, h22]], delta);
        let predicted = -(g[0] * step[0] + g[1] * step[1])
            - 0.5 * (h11 * step[0] * step[0]
                + 2.0 * h12 * step[0] * step[1]
                + h22 * step[1] * step[1]);
        let cand = frame.point(step);
        let fc = f(&cand);
        let actual = f0 - fc;
        let step_len = (step[0] * step[0] + step[1] * step[1]).sqrt();
        if predicted <= 1e-18 && g[0].abs() < 1e-12 && g[1].abs() < 1e-12 {
            return (center, f0, true);
        }
        let rho = if predicted.abs() > 0.0 {
            actual / predicted
        } else {
            0.0
        };
        if rho > 0.0 && fc < f0 {
            center = cand;
            frame = TangentFrame::at(&center);
            f0 = fc;
        }
        if rho < 0.25 {
            delta *= 0.25;
        } else if rho > 0.75 && step_len > 0.9 * delta {
            delta = (2.0 * delta).min(max_radius);
        }
    }
    (center, f0, false)
}

/// Cell centers of the sphere partition with angular side about `pi/(4N)`.
fn cell_centers(degree: usize) -> Vec<SpherePoint> {
    let h = PI / (4.0 * degree.max(1) as f64);
    let n_bands = (PI / h).ceil() as usize;
    let mut centers = Vec::new();
    for b in 0..n_bands {
        let theta = PI * (b as f64 + 0.5) / n_bands as f64;
        let n_phi = ((2.0 * PI * theta.sin() / h).ceil() as usize).max(1);
        for p in 0..n_phi {
            let phi = 2.0 * PI * (p as f64 + 0.5) / n_phi as f64;
            centers.push(SpherePoint { phi, theta });
        }
    }
    centers
}

/// Finds the roots of `1 - q` (and of `1 + q` when `both_signs` is set).
///
/// Local minima of `1 -+ Re q` with value below `threshold` are accepted
/// and merged within radius `0.1/N` by chordal averaging. Searches that
/// exhaust their iteration budget are skipped and counted.
pub fn find_roots(q: &DualPolynomial, threshold: f64, both_signs: bool) -> RootSearchOutcome {
    let degree = q.degree().max(1);
    let centers = cell_centers(degree);
    let h = PI / (4.0 * degree as f64);
    let signs: &[f64] = if both_signs { &[1.0, -1.0] } else { &[1.0] };

    // each search returns (converged, Option<minimum>)
    let searches: Vec<(bool, Option<SpherePoint>)> = centers
        .par_iter()
        .flat_map_iter(|center| {
            signs.iter().map(move |&sign| (center, sign))
        })
        .map(|(center, sign)| {
            let f = |xi: &SpherePoint| 1.0 - sign * adjoint_eval(q, xi).re;
            let (point, value, converged) = local_minimize(&f, *center, 0.5 * h, 1.2 * h);
            if converged && value < threshold {
                (true, Some(point))
            } else {
                (converged, None)
            }
        })
        .collect();

    let attempted = searches.len();
    let non_convergent = searches.iter().filter(|s| !s.0).count();
    let minima: Vec<SpherePoint> = searches.into_iter().filter_map(|s| s.1).collect();
    let raw_minima = minima.len();

    // merge within 0.1/N by accumulating chordal means
    let merge_radius = 0.1 / degree as f64;
    let mut clusters: Vec<(Vec<SpherePoint>, SpherePoint)> = Vec::new();
    for p in minima {
        let mut placed = false;
        for (members, rep) in clusters.iter_mut() {
            if rep.distance(&p) < merge_radius {
                members.push(p);
                let mut acc = [0.0f64; 3];
                for m in members.iter() {
                    let v = m.unit_vec();
                    acc[0] += v[0];
                    acc[1] += v[1];
                    acc[2] += v[2];
                }
                *rep = SpherePoint::from_vec(acc);
                placed = true;
                break;
            }
        }
        if !placed {
            clusters.push((vec![p], p));
        }
    }
    let points = clusters.into_iter().map(|(_, rep)| rep).collect();

    RootSearchOutcome {
        points,
        attempted,
        non_convergent,
        raw_minima,
    }
}
