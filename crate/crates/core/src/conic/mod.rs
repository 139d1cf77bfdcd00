//! Generic conic programming: `min c'x  s.t.  A x = b, x in K`, where `K`
//! is a product of free blocks, second-order cones and PSD cones.
//!
//! The solver is a first-order operator-splitting method on the homogeneous
//! self-dual embedding, so it returns certificates for infeasible and
//! unbounded problems as well as optimal points. Complex Hermitian PSD
//! constraints are handled through the real embedding in [`embed`].

mod embed;
mod solver;
mod sparse;

pub use embed::{embed_hermitian, herm_eig, psd_project, sym_eig, RealEmbedding};
pub use solver::solve;
pub use sparse::CsrMatrix;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConicError {
    #[error("structural error: {0}")]
    Structure(String),
    #[error("LAPACK eigensolver failed with info = {0}")]
    Eig(i32),
    #[error("serialization error: {0}")]
    Serde(String),
}

/// One block of the variable-cone partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConeBlock {
    /// Unconstrained coordinates.
    Free { dim: usize },
    /// `(t, u)` with `t >= ||u||_2`; `dim = 1` degenerates to `t >= 0`.
    Soc { dim: usize },
    /// Symmetric PSD matrix of the given side, stored as svec (upper
    /// triangle, column-major, off-diagonals scaled by sqrt(2)).
    Psd { side: usize },
    /// PSD block whose matrix is the real embedding of a Hermitian matrix
    /// of side `complex_side` (real side is twice that). Semantically
    /// identical to `Psd`; the tag lets the solver project via a complex
    /// eigendecomposition of half the side.
    PsdHermitian { complex_side: usize },
}

impl ConeBlock {
    /// Number of variable coordinates the block occupies.
    pub fn dim(&self) -> usize {
        match *self {
            ConeBlock::Free { dim } | ConeBlock::Soc { dim } => dim,
            ConeBlock::Psd { side } => side * (side + 1) / 2,
            ConeBlock::PsdHermitian { complex_side } => {
                let side = 2 * complex_side;
                side * (side + 1) / 2
            }
        }
    }

    pub fn is_free(&self) -> bool {
        matches!(self, ConeBlock::Free { .. })
    }
}

/// A conic program `min c'x  s.t.  A x = b, x in K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeProblem {
    pub blocks: Vec<ConeBlock>,
    pub a: CsrMatrix,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl ConeProblem {
    /// Total variable dimension implied by the blocks.
    pub fn num_vars(&self) -> usize {
        self.blocks.iter().map(|b| b.dim()).sum()
    }

    pub fn num_constraints(&self) -> usize {
        self.b.len()
    }

    /// Checks dimensional consistency.
    pub fn validate(&self) -> Result<(), ConicError> {
        let n = self.num_vars();
        if self.a.ncols() != n {
            return Err(ConicError::Structure(format!(
                "A has {} columns but the blocks give {} variables",
                self.a.ncols(),
                n
            )));
        }
        if self.a.nrows() != self.b.len() {
            return Err(ConicError::Structure(format!(
                "A has {} rows but b has length {}",
                self.a.nrows(),
                self.b.len()
            )));
        }
        if self.c.len() != n {
            return Err(ConicError::Structure(format!(
                "c has length {} but the blocks give {} variables",
                self.c.len(),
                n
            )));
        }
        for blk in &self.blocks {
            match *blk {
                ConeBlock::Free { dim } | ConeBlock::Soc { dim } => {
                    if dim == 0 {
                        return Err(ConicError::Structure("zero-dimensional block".into()));
                    }
                }
                ConeBlock::Psd { side } => {
                    if side == 0 {
                        return Err(ConicError::Structure("zero-side PSD block".into()));
                    }
                }
                ConeBlock::PsdHermitian { complex_side } => {
                    if complex_side == 0 {
                        return Err(ConicError::Structure("zero-side PSD block".into()));
                    }
                }
            }
        }
        Ok(())
    }

    /// Serializes to the documented JSON container: cone blocks, triplet-form
    /// `A` (`rows`, `cols`, `vals`), and the dense `b`, `c` vectors.
    pub fn to_json(&self) -> String {
        let trip = self.a.triplets();
        let json = ConeProblemJson {
            blocks: self.blocks.clone(),
            nrows: self.a.nrows(),
            ncols: self.a.ncols(),
            rows: trip.iter().map(|t| t.0).collect(),
            cols: trip.iter().map(|t| t.1).collect(),
            vals: trip.iter().map(|t| t.2).collect(),
            b: self.b.clone(),
            c: self.c.clone(),
        };
        serde_json::to_string_pretty(&json).expect("plain data serializes")
    }

    pub fn from_json(s: &str) -> Result<ConeProblem, ConicError> {
        let json: ConeProblemJson =
            serde_json::from_str(s).map_err(|e| ConicError::Serde(e.to_string()))?;
        if json.rows.len() != json.cols.len() || json.rows.len() != json.vals.len() {
            return Err(ConicError::Serde("triplet arrays disagree in length".into()));
        }
        let triplets: Vec<(usize, usize, f64)> = json
            .rows
            .iter()
            .zip(json.cols.iter())
            .zip(json.vals.iter())
            .map(|((&r, &c), &v)| (r, c, v))
            .collect();
        let p = ConeProblem {
            blocks: json.blocks,
            a: CsrMatrix::from_triplets(json.nrows, json.ncols, &triplets),
            b: json.b,
            c: json.c,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Serialize, Deserialize)]
struct ConeProblemJson {
    blocks: Vec<ConeBlock>,
    nrows: usize,
    ncols: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
}

/// Solve status.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIter,
}

/// Feasibility and gap residuals of a returned point, all unscaled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Residuals {
    /// `||A x + s - b||_2 / (1 + ||b||_2)` over the homogeneous system.
    pub primal_rel: f64,
    /// `||A x - b||_inf` restricted to the equality rows.
    pub primal_inf: f64,
    /// `||A'y + c||_2 / (1 + ||c||_2)`.
    pub dual_rel: f64,
    /// `|c'x + b'y| / (1 + |c'x| + |b'y|)`.
    pub gap_rel: f64,
}

/// Solver tolerances and iteration limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative primal/dual feasibility target.
    pub feas: f64,
    /// Relative duality-gap target.
    pub gap: f64,
    /// Certificate tolerance for infeasibility/unboundedness declarations.
    pub infeas: f64,
    pub max_iter: usize,
    /// Over-relaxation parameter of the splitting iteration, in (0, 2).
    pub over_relax: f64,
    /// Equilibration sweeps over the data before solving.
    pub ruiz_iters: usize,
    /// Residuals are evaluated every this many iterations.
    pub check_every: usize,
    /// Project embedded-Hermitian PSD blocks via the complex
    /// eigendecomposition of half the side.
    pub hermitian_fastpath: bool,
    /// Residual growth factor above which an accelerated step is rejected.
    pub aa_safeguard: f64,
    pub verbose: bool,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            feas: 1e-8,
            gap: 1e-8,
            infeas: 1e-9,
            max_iter: 200_000,
            over_relax: 1.5,
            ruiz_iters: 10,
            check_every: 25,
            hermitian_fastpath: true,
            aa_safeguard: 1.0,
            verbose: false,
        }
    }
}

/// A certified solve outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeSolution {
    pub status: SolveStatus,
    /// Primal point (or unboundedness certificate when `Unbounded`).
    pub primal: Vec<f64>,
    /// Equality multipliers (or infeasibility certificate when `Infeasible`).
    pub dual: Vec<f64>,
    /// `c'x` at the returned primal point.
    pub objective: f64,
    /// `-b'y` at the returned dual point.
    pub dual_objective: f64,
    pub residuals: Residuals,
    pub iterations: usize,
}
