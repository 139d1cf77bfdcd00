//! Operator-splitting solver on the homogeneous self-dual embedding.
//!
//! The problem `min c'x s.t. Ax = b, x in K` is rewritten in the
//! `Ax + s = b, s in K_full` form with `K_full = {0}^m_eq x K`: equality
//! rows keep a zero cone and every cone block of `x` gets mirror rows
//! `-x_blk + s_blk = 0`. The embedding variable `u = (x, y, tau)` and
//! residual `v = (0, s, kappa)` are iterated with
//!
//! ```text
//! u~ = (I + Q)^{-1} (u + v)
//! u' = Proj_C (relax(u~) - v),   C = R^n x K* x R_+
//! v' = v - relax(u~) + u'
//! ```
//!
//! The linear solve reduces to an SPD system `(I + A'A) z = r` handled by
//! preconditioned conjugate gradients, and the cone projection to one
//! eigendecomposition per PSD block. Data are Ruiz-equilibrated first;
//! cone rows share one scale per block so the scaled slacks stay in their
//! cones.

use super::embed::{herm_project_slice, psd_project_slice};
use super::sparse::CsrMatrix;
use super::{
    ConeBlock, ConeProblem, ConeSolution, ConicError, Residuals, SolveStatus, Tolerances,
};
use num_complex::Complex64;

#[derive(Debug, Clone, Copy)]
struct BlockInfo {
    kind: ConeBlock,
    var_offset: usize,
    dim: usize,
    /// Offset into the cone-row section; usize::MAX for free blocks.
    cone_offset: usize,
}

struct Workspace {
    n: usize,
    m_eq: usize,
    n_cone: usize,
    blocks: Vec<BlockInfo>,
    /// Scaled equality matrix `D1 A E`.
    a_eq: CsrMatrix,
    /// Original equality matrix.
    a_orig: CsrMatrix,
    /// Per-coordinate weight of the scaled `-I` rows: `d2 * e` on the
    /// selected columns (cone coordinates, in block order).
    w_sel: Vec<f64>,
    /// Variable index of each cone coordinate.
    sel: Vec<usize>,
    d1: Vec<f64>,
    d2: Vec<f64>,
    e: Vec<f64>,
    sc_b: f64,
    sc_c: f64,
    b_hat: Vec<f64>,
    c_hat: Vec<f64>,
    b_orig: Vec<f64>,
    c_orig: Vec<f64>,
    precond: Vec<f64>,
}

impl Workspace {
    /// `out[m] = A_scaled x` over both row sections.
    fn apply_a(&self, x: &[f64], out: &mut [f64]) {
        let (eq, cone) = out.split_at_mut(self.m_eq);
        self.a_eq.matvec(x, eq);
        for (j, c) in cone.iter_mut().enumerate() {
            *c = -self.w_sel[j] * x[self.sel[j]];
        }
    }

    /// `out[n] = A_scaled' y`.
    fn apply_at(&self, y: &[f64], out: &mut [f64]) {
        self.a_eq.matvec_t(&y[..self.m_eq], out);
        for j in 0..self.n_cone {
            out[self.sel[j]] -= self.w_sel[j] * y[self.m_eq + j];
        }
    }

    /// `out[n] = (I + A'A) q`.
    fn apply_normal(&self, q: &[f64], out: &mut [f64], tmp_m: &mut [f64]) {
        self.a_eq.matvec(q, &mut tmp_m[..self.m_eq]);
        self.a_eq.matvec_t(&tmp_m[..self.m_eq], out);
        for (o, qi) in out.iter_mut().zip(q) {
            *o += qi;
        }
        for j in 0..self.n_cone {
            let w2 = self.w_sel[j] * self.w_sel[j];
            out[self.sel[j]] += w2 * q[self.sel[j]];
        }
    }
}

fn block_infos(problem: &ConeProblem) -> Vec<BlockInfo> {
    let mut infos = Vec::with_capacity(problem.blocks.len());
    let mut var_offset = 0usize;
    let mut cone_offset = 0usize;
    for &kind in &problem.blocks {
        let dim = kind.dim();
        let off = if kind.is_free() {
            usize::MAX
        } else {
            let o = cone_offset;
            cone_offset += dim;
            o
        };
        infos.push(BlockInfo {
            kind,
            var_offset,
            dim,
            cone_offset: off,
        });
        var_offset += dim;
    }
    infos
}

/// Ruiz-style equilibration plus the scalar `b`/`c` normalization.
fn equilibrate(problem: &ConeProblem, blocks: &[BlockInfo], tol: &Tolerances) -> Workspace {
    let n = problem.num_vars();
    let m_eq = problem.a.nrows();
    let sel: Vec<usize> = blocks
        .iter()
        .filter(|b| !b.kind.is_free())
        .flat_map(|b| b.var_offset..b.var_offset + b.dim)
        .collect();
    let n_cone = sel.len();
    // cone block id per cone coordinate, for per-block uniform scales
    let mut cone_block: Vec<usize> = Vec::with_capacity(n_cone);
    for (bi, b) in blocks.iter().filter(|b| !b.kind.is_free()).enumerate() {
        cone_block.extend(std::iter::repeat_n(bi, b.dim));
    }
    let n_cone_blocks = cone_block.last().map_or(0, |&b| b + 1);
    // hermitian-embedded blocks need one column scale per block as well,
    // so scaled data stay inside the embedding subspace
    let uniform_cols: Vec<bool> = blocks
        .iter()
        .filter(|b| !b.kind.is_free())
        .map(|b| matches!(b.kind, ConeBlock::PsdHermitian { .. }))
        .collect();

    let mut d1 = vec![1.0f64; m_eq];
    let mut d2 = vec![1.0f64; n_cone];
    let mut e = vec![1.0f64; n];
    let triplets = problem.a.triplets();

    let clamp = |x: f64| x.clamp(1e-6, 1e6);
    for _ in 0..tol.ruiz_iters {
        // row sweep
        let mut row_norm = vec![0.0f64; m_eq];
        for &(r, c, v) in &triplets {
            row_norm[r] = row_norm[r].max((d1[r] * v * e[c]).abs());
        }
        for (di, rn) in d1.iter_mut().zip(&row_norm) {
            if *rn > 1e-12 {
                *di = clamp(*di / rn.sqrt());
            }
        }
        let mut block_scale = vec![0.0f64; n_cone_blocks];
        let mut block_count = vec![0usize; n_cone_blocks];
        for j in 0..n_cone {
            let norm = (d2[j] * e[sel[j]]).abs();
            if norm > 1e-12 {
                d2[j] = clamp(d2[j] / norm.sqrt());
            }
            block_scale[cone_block[j]] += d2[j].ln();
            block_count[cone_block[j]] += 1;
        }
        // geometric mean per block keeps slacks inside their cones
        for j in 0..n_cone {
            let bid = cone_block[j];
            d2[j] = (block_scale[bid] / block_count[bid] as f64).exp();
        }
        // column sweep
        let mut col_norm = vec![0.0f64; n];
        for &(r, c, v) in &triplets {
            col_norm[c] = col_norm[c].max((d1[r] * v * e[c]).abs());
        }
        for j in 0..n_cone {
            col_norm[sel[j]] = col_norm[sel[j]].max((d2[j] * e[sel[j]]).abs());
        }
        for (ej, cn) in e.iter_mut().zip(&col_norm) {
            if *cn > 1e-12 {
                *ej = clamp(*ej / cn.sqrt());
            }
        }
        // unify column scales over embedded-Hermitian blocks
        let mut ln_sum = vec![0.0f64; n_cone_blocks];
        for j in 0..n_cone {
            ln_sum[cone_block[j]] += e[sel[j]].ln();
        }
        for j in 0..n_cone {
            let bid = cone_block[j];
            if uniform_cols[bid] {
                e[sel[j]] = (ln_sum[bid] / block_count[bid] as f64).exp();
            }
        }
    }

    let mut a_eq = problem.a.clone();
    for r in 0..m_eq {
        a_eq.scale_row(r, d1[r]);
    }
    a_eq.scale_cols(&e);
    let w_sel: Vec<f64> = (0..n_cone).map(|j| d2[j] * e[sel[j]]).collect();

    // scalar normalization of b and c against the mean column/row norms
    let mut col_sq = vec![0.0f64; n];
    let mut row_sq = vec![0.0f64; m_eq];
    for (r, c, v) in a_eq.triplets() {
        col_sq[c] += v * v;
        row_sq[r] += v * v;
    }
    for j in 0..n_cone {
        col_sq[sel[j]] += w_sel[j] * w_sel[j];
    }
    let mean_col = col_sq.iter().map(|s| s.sqrt()).sum::<f64>() / n as f64;
    let mean_row = (row_sq.iter().map(|s| s.sqrt()).sum::<f64>()
        + w_sel.iter().map(|w| w.abs()).sum::<f64>())
        / (m_eq + n_cone) as f64;

    let mut b_hat: Vec<f64> = problem.b.iter().zip(&d1).map(|(b, d)| b * d).collect();
    let nb = b_hat.iter().map(|x| x * x).sum::<f64>().sqrt();
    let sc_b = (mean_col.max(1e-6) / nb.max(1e-6)).clamp(1e-3, 1e3);
    for bi in &mut b_hat {
        *bi *= sc_b;
    }
    let mut c_hat: Vec<f64> = problem.c.iter().zip(&e).map(|(c, s)| c * s).collect();
    let nc = c_hat.iter().map(|x| x * x).sum::<f64>().sqrt();
    let sc_c = (mean_row.max(1e-6) / nc.max(1e-6)).clamp(1e-3, 1e3);
    for ci in &mut c_hat {
        *ci *= sc_c;
    }

    // Jacobi preconditioner of I + A'A
    let mut precond = vec![1.0f64; n];
    for (j, s) in col_sq.iter().enumerate() {
        precond[j] += s;
    }

    Workspace {
        n,
        m_eq,
        n_cone,
        blocks: blocks.to_vec(),
        a_eq,
        a_orig: problem.a.clone(),
        w_sel,
        sel,
        d1,
        d2,
        e,
        sc_b,
        sc_c,
        b_hat,
        c_hat,
        b_orig: problem.b.clone(),
        c_orig: problem.c.clone(),
        precond,
    }
}

/// Preconditioned conjugate gradients on `(I + A'A) z = rhs`.
#[allow(clippy::too_many_arguments)]
fn cg_solve(
    ws: &Workspace,
    rhs: &[f64],
    z: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
    r: &mut [f64],
    p: &mut [f64],
    ap: &mut [f64],
    zprec: &mut [f64],
    tmp_m: &mut [f64],
) {
    let n = ws.n;
    let rhs_norm = rhs.iter().map(|x| x * x).sum::<f64>().sqrt();
    if rhs_norm == 0.0 {
        z.fill(0.0);
        return;
    }
    let target = rel_tol * rhs_norm;
    ws.apply_normal(z, ap, tmp_m);
    for i in 0..n {
        r[i] = rhs[i] - ap[i];
    }
    for i in 0..n {
        zprec[i] = r[i] / ws.precond[i];
    }
    p.copy_from_slice(zprec);
    let mut rz: f64 = r.iter().zip(zprec.iter()).map(|(a, b)| a * b).sum();
    for _ in 0..max_iter {
        let rnorm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        if rnorm <= target {
            return;
        }
        ws.apply_normal(p, ap, tmp_m);
        let pap: f64 = p.iter().zip(ap.iter()).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return;
        }
        let alpha = rz / pap;
        for i in 0..n {
            z[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            zprec[i] = r[i] / ws.precond[i];
        }
        let rz_new: f64 = r.iter().zip(zprec.iter()).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = zprec[i] + beta * p[i];
        }
    }
}

fn project_soc(slice: &mut [f64]) {
    let t = slice[0];
    let nrm = slice[1..].iter().map(|x| x * x).sum::<f64>().sqrt();
    if nrm <= t {
        return;
    }
    if nrm <= -t {
        slice.fill(0.0);
        return;
    }
    let a = 0.5 * (t + nrm);
    slice[0] = a;
    let scale = a / nrm;
    for x in &mut slice[1..] {
        *x *= scale;
    }
}

fn svec_to_dense(svec: &[f64], side: usize, dense: &mut [f64]) {
    let mut idx = 0;
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for j in 0..side {
        for i in 0..=j {
            let v = svec[idx];
            if i == j {
                dense[i * side + j] = v;
            } else {
                let w = v * inv_sqrt2;
                dense[i * side + j] = w;
                dense[j * side + i] = w;
            }
            idx += 1;
        }
    }
}

fn dense_to_svec(dense: &[f64], side: usize, svec: &mut [f64]) {
    let mut idx = 0;
    let sqrt2 = std::f64::consts::SQRT_2;
    for j in 0..side {
        for i in 0..=j {
            svec[idx] = if i == j {
                dense[i * side + j]
            } else {
                0.5 * (dense[i * side + j] + dense[j * side + i]) * sqrt2
            };
            idx += 1;
        }
    }
}

/// Projects one cone block in place. `scratch` must hold `side^2` reals for
/// a PSD block (or `2 m^2` for the Hermitian path).
fn project_block(
    kind: ConeBlock,
    slice: &mut [f64],
    scratch: &mut Vec<f64>,
    fastpath: bool,
) -> Result<(), ConicError> {
    match kind {
        ConeBlock::Free { .. } => {}
        ConeBlock::Soc { .. } => project_soc(slice),
        ConeBlock::Psd { side } => {
            scratch.resize(side * side, 0.0);
            svec_to_dense(slice, side, scratch);
            psd_project_slice(scratch, side)?;
            dense_to_svec(scratch, side, slice);
        }
        ConeBlock::PsdHermitian { complex_side } => {
            let side = 2 * complex_side;
            if !fastpath {
                scratch.resize(side * side, 0.0);
                svec_to_dense(slice, side, scratch);
                psd_project_slice(scratch, side)?;
                dense_to_svec(scratch, side, slice);
            } else {
                let m = complex_side;
                scratch.resize(side * side, 0.0);
                svec_to_dense(slice, side, scratch);
                // symmetrized read of the Hermitian part; exact on embedded
                // matrices, kills roundoff drift off the subspace
                let mut h = vec![Complex64::ZERO; m * m];
                for i in 0..m {
                    for j in 0..m {
                        let re = 0.5 * (scratch[i * side + j] + scratch[(i + m) * side + j + m]);
                        let im = 0.5 * (scratch[(i + m) * side + j] - scratch[i * side + j + m]);
                        h[i * m + j] = Complex64::new(re, im);
                    }
                }
                herm_project_slice(&mut h, m)?;
                for i in 0..m {
                    for j in 0..m {
                        let v = h[i * m + j];
                        scratch[i * side + j] = v.re;
                        scratch[(i + m) * side + j + m] = v.re;
                        scratch[i * side + j + m] = -v.im;
                        scratch[(i + m) * side + j] = v.im;
                    }
                }
                dense_to_svec(scratch, side, slice);
            }
        }
    }
    Ok(())
}

/// Gaussian elimination with partial pivoting for the small Anderson
/// least-squares system; `None` on a vanishing pivot.
fn solve_small(a: &mut [f64], b: &mut [f64], n: usize) -> Option<Vec<f64>> {
    for col in 0..n {
        let mut piv = col;
        for r in (col + 1)..n {
            if a[r * n + col].abs() > a[piv * n + col].abs() {
                piv = r;
            }
        }
        if a[piv * n + col].abs() < 1e-300 {
            return None;
        }
        if piv != col {
            for c in 0..n {
                a.swap(col * n + c, piv * n + c);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        for r in (col + 1)..n {
            let factor = a[r * n + col] / d;
            if factor == 0.0 {
                continue;
            }
            for c in col..n {
                a[r * n + c] -= factor * a[col * n + c];
            }
            b[r] -= factor * b[col];
        }
    }
    let mut x = vec![0.0f64; n];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for c in (col + 1)..n {
            acc -= a[col * n + c] * x[c];
        }
        x[col] = acc / a[col * n + col];
    }
    Some(x)
}

/// Solves the conic program.
///
/// `Optimal` solutions satisfy the relative feasibility and gap targets in
/// `tol`; `Infeasible`/`Unbounded` return normalized certificates in the
/// `dual`/`primal` fields; `MaxIter` returns the final iterate with its
/// residuals.
pub fn solve(problem: &ConeProblem, tol: &Tolerances) -> Result<ConeSolution, ConicError> {
    problem.validate()?;
    let blocks = block_infos(problem);
    let ws = equilibrate(problem, &blocks, tol);
    let (n, m_eq, n_cone) = (ws.n, ws.m_eq, ws.n_cone);
    let m = m_eq + n_cone;

    // h = (c_hat, b_hat_full)
    let mut h = vec![0.0f64; n + m];
    h[..n].copy_from_slice(&ws.c_hat);
    h[n..n + m_eq].copy_from_slice(&ws.b_hat);

    let mut tmp_m = vec![0.0f64; m];
    let mut cg_r = vec![0.0f64; n];
    let mut cg_p = vec![0.0f64; n];
    let mut cg_ap = vec![0.0f64; n];
    let mut cg_z = vec![0.0f64; n];

    // g = (I + S)^{-1} h
    let mut g = vec![0.0f64; n + m];
    {
        let mut rhs = vec![0.0f64; n];
        ws.apply_at(&h[n..], &mut rhs);
        for i in 0..n {
            rhs[i] = h[i] - rhs[i];
        }
        let mut g1 = vec![0.0f64; n];
        cg_solve(
            &ws, &rhs, &mut g1, 1e-14, 2000, &mut cg_r, &mut cg_p, &mut cg_ap, &mut cg_z,
            &mut tmp_m,
        );
        let mut g2 = vec![0.0f64; m];
        ws.apply_a(&g1, &mut g2);
        for (gi, hi) in g2.iter_mut().zip(&h[n..]) {
            *gi += hi;
        }
        g[..n].copy_from_slice(&g1);
        g[n..].copy_from_slice(&g2);
    }
    let htg: f64 = h.iter().zip(&g).map(|(a, b)| a * b).sum();
    let denom = 1.0 + htg;

    // Douglas-Rachford state: u = Proj_C(z), v = u - z, fixed point when
    // (I+Q)^{-1}(2u - z) = u.
    let dim = n + m + 1;
    let mut z = vec![0.0f64; dim];
    z[n + m] = 1.0;
    let mut u = vec![0.0f64; dim];
    let mut utilde = vec![0.0f64; dim];
    let mut fvec = vec![0.0f64; dim];

    let mut w = vec![0.0f64; dim];
    let mut d = vec![0.0f64; n + m];
    let mut p_buf = vec![0.0f64; n + m];
    let mut z1 = vec![0.0f64; n];
    let mut scratch: Vec<f64> = Vec::new();
    let mut x_un = vec![0.0f64; n];
    let mut s_un = vec![0.0f64; m];
    let mut ax = vec![0.0f64; m_eq];
    let mut aty = vec![0.0f64; n];

    // Anderson acceleration over the z sequence, with a monotone residual
    // safeguard that falls back to the plain relaxed step.
    let aa_mem = 10usize;
    let mut aa_dz: Vec<Vec<f64>> = Vec::new();
    let mut aa_df: Vec<Vec<f64>> = Vec::new();
    let mut prev_z: Option<Vec<f64>> = None;
    let mut prev_f: Option<Vec<f64>> = None;
    let mut fallback_z: Vec<f64> = Vec::new();
    let mut aa_pending = false;
    let mut f_norm_at_accept = f64::INFINITY;
    let mut aa_taken = 0usize;
    let mut aa_rejected = 0usize;

    let mut cg_tol = 1e-4f64;
    let mut best = f64::INFINITY;

    let mut status = SolveStatus::MaxIter;
    let mut residuals = Residuals::default();
    let mut iterations = tol.max_iter;
    let mut x_out = vec![0.0f64; n];
    let mut y_out = vec![0.0f64; m_eq];
    let mut obj = 0.0f64;
    let mut dual_obj = 0.0f64;

    for k in 0..tol.max_iter {
        // u = Proj_C(z): x free, y in the dual cones, tau >= 0
        u.copy_from_slice(&z);
        for b in &ws.blocks {
            if b.kind.is_free() {
                continue;
            }
            let start = n + m_eq + b.cone_offset;
            project_block(
                b.kind,
                &mut u[start..start + b.dim],
                &mut scratch,
                tol.hermitian_fastpath,
            )?;
        }
        u[n + m] = z[n + m].max(0.0);

        // w = 2u - z
        for i in 0..dim {
            w[i] = 2.0 * u[i] - z[i];
        }
        let w_tau = w[n + m];
        for i in 0..n + m {
            d[i] = w[i] - w_tau * h[i];
        }
        // utilde = (I + Q)^{-1} w
        {
            let (d_x, d_y) = d.split_at(n);
            ws.apply_at(d_y, &mut aty);
            for i in 0..n {
                cg_r[i] = d_x[i] - aty[i];
            }
            let rhs = cg_r.clone();
            cg_solve(
                &ws, &rhs, &mut z1, cg_tol, 300, &mut cg_r, &mut cg_p, &mut cg_ap, &mut cg_z,
                &mut tmp_m,
            );
            p_buf[..n].copy_from_slice(&z1);
            let (p_x, p_y) = p_buf.split_at_mut(n);
            ws.apply_a(p_x, p_y);
            for (pi, di) in p_y.iter_mut().zip(&d[n..]) {
                *pi += di;
            }
        }
        let hp: f64 = h.iter().zip(&p_buf).map(|(a, b)| a * b).sum();
        let shift = hp / denom;
        let mut htz = 0.0f64;
        for i in 0..n + m {
            let zi = p_buf[i] - g[i] * shift;
            utilde[i] = zi;
            htz += h[i] * zi;
        }
        utilde[n + m] = w_tau + htz;

        // DR residual f = utilde - u
        let mut f_norm_sq = 0.0f64;
        for i in 0..dim {
            let fi = utilde[i] - u[i];
            fvec[i] = fi;
            f_norm_sq += fi * fi;
        }
        let f_norm = f_norm_sq.sqrt();

        // safeguard: a pending accelerated step must not have grown the
        // residual much, otherwise restart from the stored plain step
        if aa_pending && (!f_norm.is_finite() || f_norm > tol.aa_safeguard * f_norm_at_accept) {
            z.copy_from_slice(&fallback_z);
            aa_dz.clear();
            aa_df.clear();
            prev_z = None;
            prev_f = None;
            aa_pending = false;
            aa_rejected += 1;
            continue;
        }
        if aa_pending {
            aa_taken += 1;
        }
        aa_pending = false;

        let do_check = (k + 1) % tol.check_every == 0 || k + 1 == tol.max_iter;

        // --- residual check on unscaled data (v = u - z) ---
        let tau = u[n + m];
        if do_check && tau > 1e-12 {
            for i in 0..n {
                x_un[i] = ws.e[i] * u[i] / (ws.sc_b * tau);
            }
            for i in 0..m_eq {
                s_un[i] = (u[n + i] - z[n + i]) / (ws.d1[i] * ws.sc_b * tau);
            }
            for j in 0..n_cone {
                s_un[m_eq + j] =
                    (u[n + m_eq + j] - z[n + m_eq + j]) / (ws.d2[j] * ws.sc_b * tau);
            }
            ws.a_orig.matvec(&x_un, &mut ax);
            let mut pres_sq = 0.0f64;
            let mut pinf = 0.0f64;
            for i in 0..m_eq {
                let r = ax[i] + s_un[i] - ws.b_orig[i];
                pres_sq += r * r;
                pinf = pinf.max((ax[i] - ws.b_orig[i]).abs());
            }
            for j in 0..n_cone {
                let r = -x_un[ws.sel[j]] + s_un[m_eq + j];
                pres_sq += r * r;
            }
            let b_norm = ws.b_orig.iter().map(|x| x * x).sum::<f64>().sqrt();
            let pres = pres_sq.sqrt() / (1.0 + b_norm);

            // dual: A'y + c with y from both row sections
            let mut y_eq = vec![0.0f64; m_eq];
            for i in 0..m_eq {
                y_eq[i] = ws.d1[i] * u[n + i] / (ws.sc_c * tau);
            }
            ws.a_orig.matvec_t(&y_eq, &mut aty);
            for j in 0..n_cone {
                let ycone = ws.d2[j] * u[n + m_eq + j] / (ws.sc_c * tau);
                aty[ws.sel[j]] -= ycone;
            }
            let mut dres_sq = 0.0f64;
            for i in 0..n {
                let r = aty[i] + ws.c_orig[i];
                dres_sq += r * r;
            }
            let c_norm = ws.c_orig.iter().map(|x| x * x).sum::<f64>().sqrt();
            let dres = dres_sq.sqrt() / (1.0 + c_norm);

            let ctx: f64 = ws.c_orig.iter().zip(&x_un).map(|(a, b)| a * b).sum();
            let bty: f64 = ws.b_orig.iter().zip(&y_eq).map(|(a, b)| a * b).sum();
            let gap = (ctx + bty).abs() / (1.0 + ctx.abs() + bty.abs());

            if tol.verbose && ((k + 1) % (tol.check_every * 40) == 0 || k + 1 == tol.max_iter) {
                eprintln!(
                    "iter {:>7}: pres {:.3e} dres {:.3e} gap {:.3e} tau {:.3e} f {:.3e} aa {}/{}",
                    k + 1,
                    pres,
                    dres,
                    gap,
                    tau,
                    f_norm,
                    aa_taken,
                    aa_rejected
                );
            }

            let score = pres.max(dres).max(gap);
            if score < best {
                best = score;
                x_out.copy_from_slice(&x_un);
                y_out.copy_from_slice(&y_eq);
                obj = ctx;
                dual_obj = -bty;
                residuals = Residuals {
                    primal_rel: pres,
                    primal_inf: pinf,
                    dual_rel: dres,
                    gap_rel: gap,
                };
            }
            cg_tol = (best * 0.05).clamp(1e-11, 1e-4);

            if pres <= tol.feas && dres <= tol.feas && gap <= tol.gap {
                status = SolveStatus::Optimal;
                iterations = k + 1;
                x_out.copy_from_slice(&x_un);
                y_out.copy_from_slice(&y_eq);
                obj = ctx;
                dual_obj = -bty;
                residuals = Residuals {
                    primal_rel: pres,
                    primal_inf: pinf,
                    dual_rel: dres,
                    gap_rel: gap,
                };
                break;
            }
        }

        // --- certificate checks (tau-free scaling) ---
        if do_check {
            let mut bty_c = 0.0f64;
            for i in 0..m_eq {
                bty_c += ws.b_orig[i] * ws.d1[i] * u[n + i];
            }
            if bty_c < -1e-12 {
                let mut y_eq = vec![0.0f64; m_eq];
                for i in 0..m_eq {
                    y_eq[i] = ws.d1[i] * u[n + i] / (-bty_c);
                }
                ws.a_orig.matvec_t(&y_eq, &mut aty);
                for j in 0..n_cone {
                    let ycone = ws.d2[j] * u[n + m_eq + j] / (-bty_c);
                    aty[ws.sel[j]] -= ycone;
                }
                let res = aty.iter().map(|x| x * x).sum::<f64>().sqrt();
                if res <= tol.infeas {
                    status = SolveStatus::Infeasible;
                    iterations = k + 1;
                    x_out.fill(0.0);
                    y_out.copy_from_slice(&y_eq);
                    obj = 0.0;
                    dual_obj = 0.0;
                    residuals = Residuals {
                        primal_rel: f64::INFINITY,
                        primal_inf: f64::INFINITY,
                        dual_rel: res,
                        gap_rel: f64::INFINITY,
                    };
                    break;
                }
            }

            let mut ctx_c = 0.0f64;
            for i in 0..n {
                ctx_c += ws.c_orig[i] * ws.e[i] * u[i];
            }
            if ctx_c < -1e-12 {
                for i in 0..n {
                    x_un[i] = ws.e[i] * u[i] / (-ctx_c);
                }
                for i in 0..m_eq {
                    s_un[i] = (u[n + i] - z[n + i]) / (ws.d1[i] * (-ctx_c));
                }
                for j in 0..n_cone {
                    s_un[m_eq + j] = (u[n + m_eq + j] - z[n + m_eq + j]) / (ws.d2[j] * (-ctx_c));
                }
                ws.a_orig.matvec(&x_un, &mut ax);
                let mut res_sq = 0.0f64;
                for i in 0..m_eq {
                    let r = ax[i] + s_un[i];
                    res_sq += r * r;
                }
                for j in 0..n_cone {
                    let r = -x_un[ws.sel[j]] + s_un[m_eq + j];
                    res_sq += r * r;
                }
                if res_sq.sqrt() <= tol.infeas {
                    status = SolveStatus::Unbounded;
                    iterations = k + 1;
                    x_out.copy_from_slice(&x_un);
                    y_out.fill(0.0);
                    obj = 0.0;
                    dual_obj = 0.0;
                    residuals = Residuals {
                        primal_rel: res_sq.sqrt(),
                        primal_inf: f64::INFINITY,
                        dual_rel: f64::INFINITY,
                        gap_rel: f64::INFINITY,
                    };
                    break;
                }
            }
        }

        // --- step: plain relaxed DR, with an Anderson candidate on top ---
        let om = tol.over_relax;
        if let (Some(pz), Some(pf)) = (prev_z.as_ref(), prev_f.as_ref()) {
            let dz: Vec<f64> = z.iter().zip(pz).map(|(a, b)| a - b).collect();
            let df: Vec<f64> = fvec.iter().zip(pf).map(|(a, b)| a - b).collect();
            if aa_dz.len() == aa_mem {
                aa_dz.remove(0);
                aa_df.remove(0);
            }
            aa_dz.push(dz);
            aa_df.push(df);
        }
        prev_z = Some(z.clone());
        prev_f = Some(fvec.clone());

        // plain candidate z + omega f
        fallback_z.clear();
        fallback_z.extend(z.iter().zip(&fvec).map(|(zi, fi)| zi + om * fi));

        let mem = aa_dz.len();
        if mem >= 2 {
            // least squares: gamma = argmin || f - DF gamma ||
            let mut gram = vec![0.0f64; mem * mem];
            let mut rhs = vec![0.0f64; mem];
            for a in 0..mem {
                for b in a..mem {
                    let v: f64 = aa_df[a].iter().zip(&aa_df[b]).map(|(x, y)| x * y).sum();
                    gram[a * mem + b] = v;
                    gram[b * mem + a] = v;
                }
                rhs[a] = aa_df[a].iter().zip(&fvec).map(|(x, y)| x * y).sum();
            }
            let reg = 1e-12 * (0..mem).map(|i| gram[i * mem + i]).sum::<f64>().max(1e-300);
            for i in 0..mem {
                gram[i * mem + i] += reg;
            }
            if let Some(gamma) = solve_small(&mut gram, &mut rhs, mem) {
                // z_aa = z + omega f - sum gamma_j (dz_j + omega df_j)
                z.copy_from_slice(&fallback_z);
                for (j, &gj) in gamma.iter().enumerate() {
                    if gj == 0.0 {
                        continue;
                    }
                    for i in 0..dim {
                        z[i] -= gj * (aa_dz[j][i] + om * aa_df[j][i]);
                    }
                }
                if z.iter().all(|v| v.is_finite()) {
                    aa_pending = true;
                    f_norm_at_accept = f_norm;
                } else {
                    z.copy_from_slice(&fallback_z);
                }
            } else {
                z.copy_from_slice(&fallback_z);
            }
        } else {
            z.copy_from_slice(&fallback_z);
        }
    }

    Ok(ConeSolution {
        status,
        primal: x_out,
        dual: y_out,
        objective: obj,
        dual_objective: dual_obj,
        residuals,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn soc1() -> ConeBlock {
        ConeBlock::Soc { dim: 1 }
    }

    #[test]
    fn tiny_lp() {
        // max x1 + x2 s.t. x1 + x2 + slack = 1, all >= 0
        let p = ConeProblem {
            blocks: vec![soc1(), soc1(), soc1()],
            a: CsrMatrix::from_triplets(1, 3, &[(0, 0, 1.0), (0, 1, 1.0), (0, 2, 1.0)]),
            b: vec![1.0],
            c: vec![-1.0, -1.0, 0.0],
        };
        let sol = solve(&p, &Tolerances::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.objective + 1.0).abs() < 1e-6, "obj {}", sol.objective);
    }

    #[test]
    fn soc_norm_bound() {
        // min t s.t. t >= ||(3,4)||
        let p = ConeProblem {
            blocks: vec![ConeBlock::Soc { dim: 3 }],
            a: CsrMatrix::from_triplets(2, 3, &[(0, 1, 1.0), (1, 2, 1.0)]),
            b: vec![3.0, 4.0],
            c: vec![1.0, 0.0, 0.0],
        };
        let sol = solve(&p, &Tolerances::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.objective - 5.0).abs() < 1e-6, "obj {}", sol.objective);
        assert!((sol.primal[0] - 5.0).abs() < 1e-6);
    }

    #[test]
    fn psd_correlation_bound() {
        // max x s.t. [[1, x], [x, 1]] >= 0  =>  x* = 1
        // vars: x free, svec(P) = (p00, sqrt2 p01, p11)
        let s2 = std::f64::consts::SQRT_2;
        let p = ConeProblem {
            blocks: vec![ConeBlock::Free { dim: 1 }, ConeBlock::Psd { side: 2 }],
            a: CsrMatrix::from_triplets(
                3,
                4,
                &[
                    (0, 1, 1.0),          // p00 = 1
                    (1, 3, 1.0),          // p11 = 1
                    (2, 2, 1.0),          // sqrt2 p01 - sqrt2 x = 0
                    (2, 0, -s2),
                ],
            ),
            b: vec![1.0, 1.0, 0.0],
            c: vec![-1.0, 0.0, 0.0, 0.0],
        };
        let sol = solve(&p, &Tolerances::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.objective + 1.0).abs() < 1e-6, "obj {}", sol.objective);
        assert!((sol.primal[0] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn detects_infeasible() {
        // x >= 0 with x = -1
        let p = ConeProblem {
            blocks: vec![soc1()],
            a: CsrMatrix::from_triplets(1, 1, &[(0, 0, 1.0)]),
            b: vec![-1.0],
            c: vec![0.0],
        };
        let sol = solve(&p, &Tolerances::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
    }

    #[test]
    fn detects_unbounded() {
        // min -x, x >= 0, no equalities
        let p = ConeProblem {
            blocks: vec![soc1()],
            a: CsrMatrix::from_triplets(0, 1, &[]),
            b: vec![],
            c: vec![-1.0],
        };
        let sol = solve(&p, &Tolerances::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Unbounded);
    }

    #[test]
    fn weak_duality_at_solution() {
        let p = ConeProblem {
            blocks: vec![ConeBlock::Soc { dim: 3 }],
            a: CsrMatrix::from_triplets(2, 3, &[(0, 1, 1.0), (1, 2, 1.0)]),
            b: vec![3.0, 4.0],
            c: vec![1.0, 0.0, 0.0],
        };
        let sol = solve(&p, &Tolerances::default()).unwrap();
        // |c'x + b'y| within the reported gap residual scale
        let gap_abs = (sol.objective - sol.dual_objective).abs();
        assert!(gap_abs <= 1e-6 * (1.0 + sol.objective.abs() + sol.dual_objective.abs()));
    }

    #[test]
    fn deterministic_given_inputs() {
        let p = ConeProblem {
            blocks: vec![ConeBlock::Free { dim: 1 }, ConeBlock::Soc { dim: 3 }],
            a: CsrMatrix::from_triplets(
                3,
                4,
                &[(0, 0, 1.0), (0, 1, 0.3), (1, 2, 1.0), (2, 3, 1.0)],
            ),
            b: vec![1.0, 0.7, -0.2],
            c: vec![0.1, 1.0, 0.0, 0.0],
        };
        let a = solve(&p, &Tolerances::default()).unwrap();
        let b = solve(&p, &Tolerances::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dimension_mismatch_is_structural_error() {
        let p = ConeProblem {
            blocks: vec![soc1()],
            a: CsrMatrix::from_triplets(1, 2, &[(0, 0, 1.0)]),
            b: vec![1.0],
            c: vec![0.0, 0.0],
        };
        assert!(solve(&p, &Tolerances::default()).is_err());
    }
}
