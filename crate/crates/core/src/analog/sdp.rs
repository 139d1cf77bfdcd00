//! The dual semidefinite program of total-variation minimization.
//!
//! With `M = (2N+1)^2`, the program over `alpha` (complex, `(N+1)^2`
//! entries) and a Hermitian `Q` of side `M` is
//!
//! ```text
//! max  Re<y, alpha> - eps ||alpha||_2
//! s.t. [[Q, g], [g*, 1]] >= 0
//!      tr(Theta_{k,l} Q) = delta_{k,l}   for (k,l) in the half space,
//! ```
//!
//! where `g` is the column-stacked bivariate coefficient vector tied to
//! `alpha` through the Legendre trigonometric expansion. Everything is
//! realified: `alpha` splits into interleaved re/im pairs, the PSD block is
//! the real embedding of the Hermitian matrix `T = [[Q, g],[g*, 1]]`, and
//! the norm term becomes one second-order cone.

use super::{half_space_indices, ToeplitzSelector};
use crate::conic::{ConeBlock, ConeProblem, CsrMatrix};
use crate::harmonics::{
    basis_len, coeff_index, normalization, DualPolynomial, HarmonicCoeffs, HarmonicsError,
    TrigTable,
};
use num_complex::Complex64;

/// The sparse linear map `alpha -> h` with `h_{k,l} = sum_n A_{n,k}
/// beta_{n,k,l} alpha_{n,k}`, `|k|,|l| <= N`.
#[derive(Debug, Clone)]
pub struct HhatOperator {
    degree: usize,
    /// For every `(k, l)` (index `(l+N)(2N+1) + (k+N)`) the list of
    /// `(alpha index, complex weight)` pairs.
    terms: Vec<Vec<(usize, Complex64)>>,
}

impl HhatOperator {
    pub fn new(trig: &TrigTable) -> Self {
        let degree = trig.degree();
        let width = 2 * degree + 1;
        let mut terms = vec![Vec::new(); width * width];
        for k in -(degree as i64)..=(degree as i64) {
            for l in -(degree as i64)..=(degree as i64) {
                let row = ((l + degree as i64) as usize) * width + (k + degree as i64) as usize;
                let n_min = k.unsigned_abs().max(l.unsigned_abs()) as usize;
                for n in n_min..=degree {
                    let a = normalization(n, k).expect("|k| <= n");
                    let b = trig.beta(n, k, l);
                    if b.norm() == 0.0 {
                        continue;
                    }
                    terms[row].push((coeff_index(n, k), a * b));
                }
            }
        }
        HhatOperator { degree, terms }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Row index of `(k, l)` in the column-stacked order (`k` fast).
    pub fn row_index(&self, k: i64, l: i64) -> usize {
        let n = self.degree as i64;
        debug_assert!(k.abs() <= n && l.abs() <= n);
        ((l + n) as usize) * (2 * self.degree + 1) + (k + n) as usize
    }

    pub fn terms(&self, k: i64, l: i64) -> &[(usize, Complex64)] {
        &self.terms[self.row_index(k, l)]
    }

    /// Applies the operator to a coefficient vector.
    pub fn apply(&self, alpha: &DualPolynomial) -> Result<Vec<Complex64>, HarmonicsError> {
        if alpha.degree() != self.degree {
            return Err(HarmonicsError::DegreeMismatch(alpha.degree(), self.degree));
        }
        Ok(self
            .terms
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&(idx, w)| w * alpha.values()[idx])
                    .sum::<Complex64>()
            })
            .collect())
    }
}

/// `h_{k,l}` for all `|k|,|l| <= N`, column stacked with `k` fast.
pub fn hhat_from_alpha(
    alpha: &DualPolynomial,
    trig: &TrigTable,
) -> Result<Vec<Complex64>, HarmonicsError> {
    HhatOperator::new(trig).apply(alpha)
}

/// Variable layout of the dual program, fixed by the degree and the
/// presence of the norm term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DualSdpLayout {
    pub degree: usize,
    /// Number of realified `alpha` coordinates (`2 (N+1)^2`), at offset 0.
    pub alpha_len: usize,
    /// Complex side of the PSD block, `(2N+1)^2 + 1`.
    pub psd_complex_side: usize,
    /// Offset of the PSD svec block.
    pub psd_offset: usize,
    /// Offset of the SOC block, if `eps > 0`.
    pub soc_offset: Option<usize>,
}

impl DualSdpLayout {
    pub fn new(degree: usize, with_soc: bool) -> Self {
        let alpha_len = 2 * basis_len(degree);
        let m_c = (2 * degree + 1) * (2 * degree + 1) + 1;
        let side = 2 * m_c;
        let psd_dim = side * (side + 1) / 2;
        DualSdpLayout {
            degree,
            alpha_len,
            psd_complex_side: m_c,
            psd_offset: alpha_len,
            soc_offset: with_soc.then_some(alpha_len + psd_dim),
        }
    }
}

/// Reads the polynomial coefficients out of a solver primal point.
pub fn extract_alpha(x: &[f64], degree: usize) -> DualPolynomial {
    let mut alpha = DualPolynomial::zeros(degree);
    for idx in 0..basis_len(degree) {
        let v = Complex64::new(x[2 * idx], x[2 * idx + 1]);
        let (n, k) = crate::harmonics::index_to_nk(idx);
        alpha.set(n, k, v);
    }
    alpha
}

/// svec index of entry `(i, j)` (`i <= j`) in the upper-triangular
/// column-major packing.
fn svec_index(i: usize, j: usize) -> usize {
    debug_assert!(i <= j);
    j * (j + 1) / 2 + i
}

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Accumulates a linear functional over the entries of a symmetric matrix,
/// expressed in svec coordinates.
struct RowBuilder<'a> {
    triplets: &'a mut Vec<(usize, usize, f64)>,
    row: usize,
    offset: usize,
}

impl RowBuilder<'_> {
    /// Adds `w * E[p, q]` (symmetric matrix entry) to the row.
    fn add(&mut self, p: usize, q: usize, w: f64) {
        let (i, j) = if p <= q { (p, q) } else { (q, p) };
        let coeff = if i == j { w } else { w / SQRT_2 };
        self.triplets
            .push((self.row, self.offset + svec_index(i, j), coeff));
    }
}

/// Builds the realified conic program for the dual of TV minimization.
///
/// With `eps = 0` the norm term and its second-order cone are dropped and
/// the objective is plain `max Re<y, alpha>`.
pub fn build_dual_sdp(y: &HarmonicCoeffs, eps: f64) -> ConeProblem {
    assert!(eps >= 0.0, "noise level must be nonnegative");
    let degree = y.degree();
    let trig = crate::harmonics::trig_expansion(degree);
    build_dual_sdp_with(y, eps, &HhatOperator::new(&trig))
}

/// As [`build_dual_sdp`], reusing a prebuilt coefficient operator.
pub fn build_dual_sdp_with(y: &HarmonicCoeffs, eps: f64, hop: &HhatOperator) -> ConeProblem {
    let degree = y.degree();
    assert_eq!(hop.degree(), degree, "operator degree mismatch");
    let n_i = degree as i64;
    let layout = DualSdpLayout::new(degree, eps > 0.0);
    let m_c = layout.psd_complex_side;
    let m_q = m_c - 1; // side of Q, (2N+1)^2
    let corner = m_q; // index of the corner row/column inside T
    let width = 2 * degree + 1;

    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut b: Vec<f64> = Vec::new();
    let mut row = 0usize;

    // trace constraints over the half space within |k|,|l| <= 2N
    for (k, l) in half_space_indices(2 * n_i) {
        let rhs = if k == 0 && l == 0 { 1.0 } else { 0.0 };
        let selector = ToeplitzSelector { k, l };
        // tr(Theta Q) = sum over pattern (i, j) of Q[j, i]
        {
            let mut re_row = RowBuilder {
                triplets: &mut triplets,
                row,
                offset: layout.psd_offset,
            };
            for (i, j) in selector.entries(width) {
                re_row.add(i, j, 0.5);
                re_row.add(i + m_c, j + m_c, 0.5);
            }
            b.push(rhs);
            row += 1;
        }
        if k != 0 || l != 0 {
            let mut im_row = RowBuilder {
                triplets: &mut triplets,
                row,
                offset: layout.psd_offset,
            };
            // Im Q[j, i] = (E[j + m, i] - E[j, i + m]) / 2
            for (i, j) in selector.entries(width) {
                im_row.add(j + m_c, i, 0.5);
                im_row.add(j, i + m_c, -0.5);
            }
            b.push(0.0);
            row += 1;
        }
    }

    // ties g_{k,l} = sum_n A_{n,k} beta_{n,k,l} alpha_{n,k}
    for l in -n_i..=n_i {
        for k in -n_i..=n_i {
            let r = hop.row_index(k, l);
            let terms = hop.terms(k, l);
            // real part
            {
                let mut rb = RowBuilder {
                    triplets: &mut triplets,
                    row,
                    offset: layout.psd_offset,
                };
                rb.add(r, corner, 0.5);
                rb.add(r + m_c, corner + m_c, 0.5);
                for &(aidx, w) in terms {
                    triplets.push((row, 2 * aidx, -w.re));
                    triplets.push((row, 2 * aidx + 1, w.im));
                }
                b.push(0.0);
                row += 1;
            }
            // imaginary part
            {
                let mut rb = RowBuilder {
                    triplets: &mut triplets,
                    row,
                    offset: layout.psd_offset,
                };
                rb.add(r + m_c, corner, 0.5);
                rb.add(r, corner + m_c, -0.5);
                for &(aidx, w) in terms {
                    triplets.push((row, 2 * aidx, -w.im));
                    triplets.push((row, 2 * aidx + 1, -w.re));
                }
                b.push(0.0);
                row += 1;
            }
        }
    }

    // corner of T equals one
    {
        let mut rb = RowBuilder {
            triplets: &mut triplets,
            row,
            offset: layout.psd_offset,
        };
        rb.add(corner, corner, 0.5);
        rb.add(corner + m_c, corner + m_c, 0.5);
        b.push(1.0);
        row += 1;
    }

    // second-order cone ties w = alpha when the norm term is present
    if let Some(soc_off) = layout.soc_offset {
        for i in 0..layout.alpha_len {
            triplets.push((row, soc_off + 1 + i, 1.0));
            triplets.push((row, i, -1.0));
            b.push(0.0);
            row += 1;
        }
    }

    let mut blocks = vec![
        ConeBlock::Free {
            dim: layout.alpha_len,
        },
        ConeBlock::PsdHermitian { complex_side: m_c },
    ];
    let mut num_vars = layout.alpha_len + ConeBlock::PsdHermitian { complex_side: m_c }.dim();
    if layout.soc_offset.is_some() {
        blocks.push(ConeBlock::Soc {
            dim: 1 + layout.alpha_len,
        });
        num_vars += 1 + layout.alpha_len;
    }

    // objective: minimize -Re<y, alpha> + eps * t
    let mut c = vec![0.0f64; num_vars];
    for idx in 0..basis_len(degree) {
        let (nn, kk) = crate::harmonics::index_to_nk(idx);
        let v = y.get(nn, kk);
        c[2 * idx] = -v.re;
        c[2 * idx + 1] = -v.im;
    }
    if let Some(soc_off) = layout.soc_offset {
        c[soc_off] = eps;
    }

    ConeProblem {
        blocks,
        a: CsrMatrix::from_triplets(row, num_vars, &triplets),
        b,
        c,
    }
}
