//! Minimal CSR sparse matrix used by the conic solver.

use serde::{Deserialize, Serialize};

/// Compressed sparse row matrix with `f64` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from triplets; duplicate `(row, col)` entries are summed.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> CsrMatrix {
        let mut entries: Vec<(usize, usize, f64)> = triplets.to_vec();
        entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            assert!(r < nrows && c < ncols, "triplet ({r},{c}) out of bounds");
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        let mut row_ptr = vec![0usize; nrows + 1];
        for &(r, _, _) in &merged {
            row_ptr[r + 1] += 1;
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        CsrMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx: merged.iter().map(|e| e.1).collect(),
            vals: merged.iter().map(|e| e.2).collect(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                out.push((r, self.col_idx[i], self.vals[i]));
            }
        }
        out
    }

    /// `out = A x`.
    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(out.len(), self.nrows);
        for r in 0..self.nrows {
            let mut acc = 0.0;
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[i] * x[self.col_idx[i]];
            }
            out[r] = acc;
        }
    }

    /// `out = A' y`.
    pub fn matvec_t(&self, y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(y.len(), self.nrows);
        debug_assert_eq!(out.len(), self.ncols);
        out.fill(0.0);
        for r in 0..self.nrows {
            let yr = y[r];
            if yr == 0.0 {
                continue;
            }
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                out[self.col_idx[i]] += self.vals[i] * yr;
            }
        }
    }

    /// Scales row `r` by `s`.
    pub fn scale_row(&mut self, r: usize, s: f64) {
        for i in self.row_ptr[r]..self.row_ptr[r + 1] {
            self.vals[i] *= s;
        }
    }

    /// Scales every column `c` by `s[c]`.
    pub fn scale_cols(&mut self, s: &[f64]) {
        debug_assert_eq!(s.len(), self.ncols);
        for (i, &c) in self.col_idx.iter().enumerate() {
            self.vals[i] *= s[c];
        }
    }

    /// Infinity norm of row `r`.
    pub fn row_inf_norm(&self, r: usize) -> f64 {
        self.vals[self.row_ptr[r]..self.row_ptr[r + 1]]
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Infinity norms of all columns.
    pub fn col_inf_norms(&self) -> Vec<f64> {
        let mut out = vec![0.0f64; self.ncols];
        for (i, &c) in self.col_idx.iter().enumerate() {
            out[c] = out[c].max(self.vals[i].abs());
        }
        out
    }
}
