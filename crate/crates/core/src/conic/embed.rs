//! Complex-Hermitian-to-real-symmetric embedding and PSD projection.
//!
//! A Hermitian matrix `H = X + jY` of side `m` embeds as the real symmetric
//! matrix `E(H) = [[X, -Y], [Y, X]]` of side `2m`. The embedding doubles
//! each eigenvalue's multiplicity, so `H >= 0` iff `E(H) >= 0`, and inner
//! products pick up a factor of two: `<E(A), E(B)>_F = 2 Re <A, B>_F`.

use super::ConicError;
use ndarray::Array2;
use num_complex::Complex64;
use std::os::raw::c_char;

// LAPACK divide-and-conquer symmetric/Hermitian eigensolvers, linked through
// the BLAS backend already required by ndarray-linalg.
extern "C" {
    fn dsyevd_(
        jobz: *const c_char,
        uplo: *const c_char,
        n: *const i32,
        a: *mut f64,
        lda: *const i32,
        w: *mut f64,
        work: *mut f64,
        lwork: *const i32,
        iwork: *mut i32,
        liwork: *const i32,
        info: *mut i32,
    );
    fn zheevd_(
        jobz: *const c_char,
        uplo: *const c_char,
        n: *const i32,
        a: *mut Complex64,
        lda: *const i32,
        w: *mut f64,
        work: *mut Complex64,
        lwork: *const i32,
        rwork: *mut f64,
        lrwork: *const i32,
        iwork: *mut i32,
        liwork: *const i32,
        info: *mut i32,
    );
}

/// Eigendecomposition of a real symmetric matrix stored densely row-major
/// in `a` (side `n`). Returns eigenvalues ascending; `a` is overwritten with
/// the eigenvectors (one per row on return, LAPACK column-major transposed).
pub fn sym_eig(a: &mut [f64], n: usize) -> Result<Vec<f64>, ConicError> {
    assert_eq!(a.len(), n * n);
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut w = vec![0.0f64; n];
    let (jobz, uplo) = (b'V' as c_char, b'L' as c_char);
    let n_i = n as i32;
    let mut info = 0i32;
    let (mut wkopt, mut iwkopt) = (0.0f64, 0i32);
    let query = -1i32;
    unsafe {
        dsyevd_(
            &jobz,
            &uplo,
            &n_i,
            a.as_mut_ptr(),
            &n_i,
            w.as_mut_ptr(),
            &mut wkopt,
            &query,
            &mut iwkopt,
            &query,
            &mut info,
        );
    }
    let lwork = wkopt as i32;
    let liwork = iwkopt;
    let mut work = vec![0.0f64; lwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork.max(1) as usize];
    unsafe {
        dsyevd_(
            &jobz,
            &uplo,
            &n_i,
            a.as_mut_ptr(),
            &n_i,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(ConicError::Eig(info));
    }
    Ok(w)
}

/// Eigendecomposition of a complex Hermitian matrix stored densely in `a`
/// (side `n`, column-major or row-major is immaterial for Hermitian input up
/// to conjugation of the vectors). Returns eigenvalues ascending.
pub fn herm_eig(a: &mut [Complex64], n: usize) -> Result<Vec<f64>, ConicError> {
    assert_eq!(a.len(), n * n);
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut w = vec![0.0f64; n];
    let (jobz, uplo) = (b'V' as c_char, b'L' as c_char);
    let n_i = n as i32;
    let mut info = 0i32;
    let (mut wkopt, mut rwkopt, mut iwkopt) = (Complex64::ZERO, 0.0f64, 0i32);
    let query = -1i32;
    unsafe {
        zheevd_(
            &jobz,
            &uplo,
            &n_i,
            a.as_mut_ptr(),
            &n_i,
            w.as_mut_ptr(),
            &mut wkopt,
            &query,
            &mut rwkopt,
            &query,
            &mut iwkopt,
            &query,
            &mut info,
        );
    }
    let lwork = wkopt.re as i32;
    let lrwork = rwkopt as i32;
    let liwork = iwkopt;
    let mut work = vec![Complex64::ZERO; lwork.max(1) as usize];
    let mut rwork = vec![0.0f64; lrwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork.max(1) as usize];
    unsafe {
        zheevd_(
            &jobz,
            &uplo,
            &n_i,
            a.as_mut_ptr(),
            &n_i,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            rwork.as_mut_ptr(),
            &lrwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(ConicError::Eig(info));
    }
    Ok(w)
}

/// Projects a dense real symmetric matrix (row-major, side `n`, in place)
/// onto the PSD cone by clipping negative eigenvalues.
pub(crate) fn psd_project_slice(a: &mut [f64], n: usize) -> Result<(), ConicError> {
    let mut v = a.to_vec();
    let w = sym_eig(&mut v, n)?;
    // reconstruct sum_i max(w_i,0) u_i u_i'; LAPACK stored eigenvector i
    // contiguously at v[i*n..(i+1)*n] given our row-major buffer
    a.fill(0.0);
    for (i, &wi) in w.iter().enumerate() {
        if wi <= 0.0 {
            continue;
        }
        let u = &v[i * n..(i + 1) * n];
        for r in 0..n {
            let s = wi * u[r];
            if s == 0.0 {
                continue;
            }
            let row = &mut a[r * n..(r + 1) * n];
            for (ar, &uc) in row.iter_mut().zip(u) {
                *ar += s * uc;
            }
        }
    }
    Ok(())
}

/// Projects a dense Hermitian matrix (side `n`, in place) onto the PSD cone.
pub(crate) fn herm_project_slice(a: &mut [Complex64], n: usize) -> Result<(), ConicError> {
    let mut v = a.to_vec();
    let w = herm_eig(&mut v, n)?;
    a.fill(Complex64::ZERO);
    for (i, &wi) in w.iter().enumerate() {
        if wi <= 0.0 {
            continue;
        }
        let u = &v[i * n..(i + 1) * n];
        for r in 0..n {
            let s = wi * u[r].conj();
            if s == Complex64::ZERO {
                continue;
            }
            let row = &mut a[r * n..(r + 1) * n];
            for (ar, &uc) in row.iter_mut().zip(u) {
                *ar += s * uc;
            }
        }
    }
    Ok(())
}

/// Frobenius-nearest PSD matrix to a symmetric input.
///
/// Fails if the input deviates from symmetry by more than 1e-9.
pub fn psd_project(m: &Array2<f64>) -> Result<Array2<f64>, ConicError> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(ConicError::Structure(format!(
            "psd_project needs a square matrix, got {}x{}",
            n,
            m.ncols()
        )));
    }
    let mut defect = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            defect = defect.max((m[[i, j]] - m[[j, i]]).abs());
        }
    }
    if defect > 1e-9 {
        return Err(ConicError::Structure(format!(
            "asymmetric input to psd_project (defect {defect:.3e})"
        )));
    }
    let mut buf: Vec<f64> = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            buf.push(0.5 * (m[[i, j]] + m[[j, i]]));
        }
    }
    psd_project_slice(&mut buf, n)?;
    Ok(Array2::from_shape_vec((n, n), buf).expect("n*n values"))
}

/// Index bookkeeping for the Hermitian-to-real embedding of side-`m`
/// matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RealEmbedding {
    side: usize,
}

/// Builds the embedding metadata for Hermitian matrices of side `m`.
pub fn embed_hermitian(side: usize) -> RealEmbedding {
    assert!(side >= 1);
    RealEmbedding { side }
}

impl RealEmbedding {
    /// Complex side `m`.
    pub fn complex_side(&self) -> usize {
        self.side
    }

    /// Real side `2m`.
    pub fn real_side(&self) -> usize {
        2 * self.side
    }

    /// `E(H) = [[Re H, -Im H], [Im H, Re H]]`.
    pub fn embed(&self, h: &Array2<Complex64>) -> Array2<f64> {
        let m = self.side;
        assert_eq!(h.nrows(), m);
        assert_eq!(h.ncols(), m);
        let mut e = Array2::<f64>::zeros((2 * m, 2 * m));
        for i in 0..m {
            for j in 0..m {
                let v = h[[i, j]];
                e[[i, j]] = v.re;
                e[[i + m, j + m]] = v.re;
                e[[i, j + m]] = -v.im;
                e[[i + m, j]] = v.im;
            }
        }
        e
    }

    /// Reads a Hermitian matrix back out of a real matrix, averaging the two
    /// copies so that the map is exact on embedded matrices and acts as the
    /// orthogonal projection onto the embedding subspace otherwise.
    pub fn extract(&self, e: &Array2<f64>) -> Array2<Complex64> {
        let m = self.side;
        assert_eq!(e.nrows(), 2 * m);
        assert_eq!(e.ncols(), 2 * m);
        let mut h = Array2::<Complex64>::zeros((m, m));
        for i in 0..m {
            for j in 0..m {
                let re = 0.5 * (e[[i, j]] + e[[i + m, j + m]]);
                let im = 0.5 * (e[[i + m, j]] - e[[i, j + m]]);
                h[[i, j]] = Complex64::new(re, im);
            }
        }
        // enforce exact Hermitian symmetry
        for i in 0..m {
            h[[i, i]] = Complex64::new(h[[i, i]].re, 0.0);
            for j in (i + 1)..m {
                let avg = 0.5 * (h[[i, j]] + h[[j, i]].conj());
                h[[i, j]] = avg;
                h[[j, i]] = avg.conj();
            }
        }
        h
    }

    /// Transports the real-linear functional `H -> Re tr(T' H)` on Hermitian
    /// matrices to the embedding: returns `G` with
    /// `<G, E(H)>_F = Re tr(T' H)` for every Hermitian `H`.
    ///
    /// Because `<E(A), E(B)>_F = 2 Re <A, B>_F`, the transported matrix is
    /// `E(herm(T)) / 2`; the factor of two is absorbed here.
    pub fn transport_functional(&self, t: &Array2<Complex64>) -> Array2<f64> {
        let m = self.side;
        assert_eq!(t.nrows(), m);
        assert_eq!(t.ncols(), m);
        // Hermitian part of T: only it contributes against Hermitian H.
        let mut th = Array2::<Complex64>::zeros((m, m));
        for i in 0..m {
            for j in 0..m {
                th[[i, j]] = 0.5 * (t[[i, j]] + t[[j, i]].conj());
            }
        }
        let mut g = self.embed(&th);
        g.mapv_inplace(|v| 0.5 * v);
        g
    }
}
