//! The gridded model: `l1` minimization of grid weights subject to a noise
//! ball around the measurements.

use crate::conic::{self, ConeBlock, ConeProblem, ConicError, CsrMatrix, SolveStatus, Tolerances};
use crate::harmonics::{basis_len, eval_y_all, HarmonicCoeffs};
use crate::signal::SphereGrid;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DiscreteError {
    #[error(transparent)]
    Conic(#[from] ConicError),
    #[error("solver finished with status {0:?}")]
    SolverFailed(SolveStatus),
    #[error("grids differ: resolution {0} vs {1}")]
    GridMismatch(usize, usize),
}

/// A sparse signal supported on grid points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSignal {
    grid: SphereGrid,
    /// Map from grid index to weight; absent indices are zero.
    weights: BTreeMap<usize, f64>,
}

impl GridSignal {
    pub fn new(grid: SphereGrid) -> Self {
        GridSignal {
            grid,
            weights: BTreeMap::new(),
        }
    }

    pub fn grid(&self) -> &SphereGrid {
        &self.grid
    }

    pub fn set(&mut self, index: usize, weight: f64) {
        assert!(index < self.grid.len());
        if weight == 0.0 {
            self.weights.remove(&index);
        } else {
            self.weights.insert(index, weight);
        }
    }

    pub fn get(&self, index: usize) -> f64 {
        self.weights.get(&index).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.weights.iter().map(|(&i, &w)| (i, w))
    }

    pub fn support_len(&self) -> usize {
        self.weights.len()
    }

    /// `sum |c_m|`, which equals the TV norm of the induced measure.
    pub fn l1_norm(&self) -> f64 {
        self.weights.values().map(|w| w.abs()).sum()
    }

    /// The induced Dirac ensemble (nonzero weights only).
    pub fn to_ensemble(&self) -> crate::signal::DiracEnsemble {
        let support = self
            .weights
            .keys()
            .map(|&i| self.grid.points()[i])
            .collect();
        let weights = self.weights.values().copied().collect();
        crate::signal::DiracEnsemble::new(support, weights).expect("grid points are distinct")
    }

    /// Measurements of the grid signal up to the given degree.
    pub fn measure(&self, degree: usize) -> HarmonicCoeffs {
        crate::harmonics::forward_measure(&self.to_ensemble(), degree)
    }
}

/// `sum_over_grid |a - b|` for signals on the same grid.
pub fn l1_error(a: &GridSignal, b: &GridSignal) -> Result<f64, DiscreteError> {
    if a.grid.resolution() != b.grid.resolution() {
        return Err(DiscreteError::GridMismatch(
            a.grid.resolution(),
            b.grid.resolution(),
        ));
    }
    let mut err = 0.0;
    let mut seen: BTreeMap<usize, f64> = a.weights.clone();
    for (&i, &w) in &b.weights {
        *seen.entry(i).or_insert(0.0) -= w;
    }
    for v in seen.values() {
        err += v.abs();
    }
    Ok(err)
}

/// Builds the conic form of
/// `min ||g||_1  s.t.  ||y - F_N g||_2 <= eps` over signals on the grid.
///
/// Weights split into positive and negative parts (the `l1` objective is
/// then linear over two nonnegative vectors); the residual ball becomes a
/// second-order cone with its radius pinned to `eps` by one equality. With
/// `eps = 0` the ball degenerates and the measurements are matched exactly.
pub fn build_l1_program(y: &HarmonicCoeffs, grid: &SphereGrid, eps: f64) -> ConeProblem {
    assert!(eps >= 0.0);
    let degree = y.degree();
    let n_pts = grid.len();
    let n_meas = 2 * basis_len(degree); // realified rows
    let with_ball = eps > 0.0;

    // columns: conj(Y_{n,k})(xi_m) realified
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    for (m, xi) in grid.points().iter().enumerate() {
        for (idx, v) in eval_y_all(degree, xi).into_iter().enumerate() {
            let vc = v.conj();
            if vc.re != 0.0 {
                triplets.push((2 * idx, m, vc.re)); // g+ column
                triplets.push((2 * idx, n_pts + m, -vc.re)); // g- column
            }
            if vc.im != 0.0 {
                triplets.push((2 * idx + 1, m, vc.im));
                triplets.push((2 * idx + 1, n_pts + m, -vc.im));
            }
        }
    }
    let mut b: Vec<f64> = Vec::with_capacity(n_meas + 1);
    for v in y.values() {
        b.push(v.re);
        b.push(v.im);
    }
    let mut n_vars = 2 * n_pts;
    let mut rows = n_meas;
    if with_ball {
        // F g + r = y with (t, r) in the second-order cone and t = eps
        let t_col = 2 * n_pts;
        for i in 0..n_meas {
            triplets.push((i, t_col + 1 + i, 1.0));
        }
        triplets.push((n_meas, t_col, 1.0));
        b.push(eps);
        n_vars += 1 + n_meas;
        rows += 1;
    }

    let mut blocks = Vec::with_capacity(2 * n_pts + 1);
    blocks.extend(std::iter::repeat_n(ConeBlock::Soc { dim: 1 }, 2 * n_pts));
    if with_ball {
        blocks.push(ConeBlock::Soc { dim: 1 + n_meas });
    }
    let mut c = vec![0.0f64; n_vars];
    for ci in c.iter_mut().take(2 * n_pts) {
        *ci = 1.0;
    }

    ConeProblem {
        blocks,
        a: CsrMatrix::from_triplets(rows, n_vars, &triplets),
        b,
        c,
    }
}

/// Solves the `l1` program and reads the weights back off the grid.
///
/// Weights below `1e-7 max |weight|` are treated as solver noise and
/// dropped from the reported signal.
pub fn recover_discrete(
    y: &HarmonicCoeffs,
    grid: &SphereGrid,
    eps: f64,
) -> Result<GridSignal, DiscreteError> {
    recover_discrete_with(y, grid, eps, &Tolerances::default())
}

/// As [`recover_discrete`] with explicit solver tolerances.
pub fn recover_discrete_with(
    y: &HarmonicCoeffs,
    grid: &SphereGrid,
    eps: f64,
    tol: &Tolerances,
) -> Result<GridSignal, DiscreteError> {
    let problem = build_l1_program(y, grid, eps);
    let sol = conic::solve(&problem, tol)?;
    if sol.status != SolveStatus::Optimal {
        return Err(DiscreteError::SolverFailed(sol.status));
    }
    let n_pts = grid.len();
    let mut raw: Vec<f64> = (0..n_pts)
        .map(|m| sol.primal[m] - sol.primal[n_pts + m])
        .collect();
    let peak = raw.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    // reporting floor: 1e-7 of the peak weight, anchored at the
    // measurement scale so an all-noise solution reports as empty
    let floor = 1e-7 * peak.max(1.0 + y.norm2());
    let mut out = GridSignal::new(grid.clone());
    for (m, w) in raw.drain(..).enumerate() {
        if w.abs() > floor && w.abs() > 0.0 {
            out.set(m, w);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::SphereGrid;

    #[test]
    fn l1_norm_and_error_basics() {
        let grid = SphereGrid::new(6);
        let mut a = GridSignal::new(grid.clone());
        a.set(3, 1.0);
        let mut b = GridSignal::new(grid.clone());
        b.set(7, 1.0);
        assert_eq!(a.l1_norm(), 1.0);
        assert_eq!(l1_error(&a, &a).unwrap(), 0.0);
        // disjoint unit spikes differ by 2 in l1
        assert_eq!(l1_error(&a, &b).unwrap(), 2.0);
        // elementwise oracle on a random pair
        let mut x = GridSignal::new(grid.clone());
        let mut z = GridSignal::new(grid.clone());
        let mut expect = 0.0;
        for i in 0..grid.len() {
            let xi = ((i * 13) % 7) as f64 - 3.0;
            let zi = ((i * 5) % 11) as f64 / 2.0 - 2.0;
            if xi != 0.0 {
                x.set(i, xi);
            }
            if zi != 0.0 {
                z.set(i, zi);
            }
            expect += (xi - zi).abs();
        }
        assert!((l1_error(&x, &z).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn grid_mismatch_is_error() {
        let a = GridSignal::new(SphereGrid::new(4));
        let b = GridSignal::new(SphereGrid::new(5));
        assert!(l1_error(&a, &b).is_err());
    }

    #[test]
    fn zero_measurements_recover_zero() {
        let grid = SphereGrid::new(8);
        let y = HarmonicCoeffs::zeros(3);
        let g = recover_discrete(&y, &grid, 0.0).unwrap();
        assert_eq!(g.support_len(), 0);
        assert_eq!(g.l1_norm(), 0.0);
    }

    #[test]
    fn huge_ball_recovers_zero() {
        // eps >= ||y|| makes g = 0 feasible and optimal
        let grid = SphereGrid::new(8);
        let mut truth = GridSignal::new(grid.clone());
        truth.set(5, 2.0);
        truth.set(20, -1.0);
        let y = truth.measure(3);
        let g = recover_discrete(&y, &grid, 2.0 * y.norm2()).unwrap();
        assert_eq!(g.l1_norm(), 0.0);
    }

    #[test]
    fn noise_free_on_grid_instance_is_exact() {
        // small separated instance on a coarse grid
        let grid = SphereGrid::new(10);
        let mut truth = GridSignal::new(grid.clone());
        // pick well separated grid indices
        let a = grid.nearest(&crate::harmonics::SpherePoint::wrap(0.5, 1.0));
        let b = grid.nearest(&crate::harmonics::SpherePoint::wrap(3.3, 2.2));
        truth.set(a, 4.0);
        truth.set(b, -2.5);
        let y = truth.measure(3);
        let g = recover_discrete(&y, &grid, 0.0).unwrap();
        let err = l1_error(&g, &truth).unwrap();
        assert!(err < 1e-5, "l1 error {err}");
    }
}
