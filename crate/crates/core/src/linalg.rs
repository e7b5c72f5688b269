//! Small complex linear-algebra helpers shared by the channel, rate and
//! optimizer modules.
//!
//! Hermitian `M×M` matrices are mapped to real vectors of length `M²` in the
//! order: the `M` diagonal entries, then for every pair `i < j` (row-major)
//! the real part and the imaginary part of the `(i, j)` entry. With this
//! coordinate map, `tr(A·Q) = coef(A) · vec(Q)` where
//! `coef(A) = (A_ii, 2 Re A_ij, 2 Im A_ij)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Number of real coordinates of an `m×m` Hermitian matrix.
pub fn herm_dim(m: usize) -> usize {
    m * m
}

/// Real coordinates of a Hermitian matrix (only the upper triangle is read).
pub fn herm_to_vec(q: &CMatrix, out: &mut [f64]) {
    let m = q.nrows();
    debug_assert_eq!(out.len(), m * m);
    for i in 0..m {
        out[i] = q[(i, i)].re;
    }
    let mut p = m;
    for i in 0..m {
        for j in (i + 1)..m {
            out[p] = q[(i, j)].re;
            out[p + 1] = q[(i, j)].im;
            p += 2;
        }
    }
}

/// Inverse of [`herm_to_vec`].
pub fn vec_to_herm(v: &[f64], m: usize) -> CMatrix {
    debug_assert_eq!(v.len(), m * m);
    let mut q = CMatrix::zeros(m, m);
    for i in 0..m {
        q[(i, i)] = Complex64::new(v[i], 0.0);
    }
    let mut p = m;
    for i in 0..m {
        for j in (i + 1)..m {
            let z = Complex64::new(v[p], v[p + 1]);
            q[(i, j)] = z;
            q[(j, i)] = z.conj();
            p += 2;
        }
    }
    q
}

/// Coefficient vector `c` such that `tr(A·Q) = c · herm_to_vec(Q)` for Hermitian `A`.
pub fn trace_coef(a: &CMatrix, out: &mut [f64]) {
    let m = a.nrows();
    for i in 0..m {
        out[i] = a[(i, i)].re;
    }
    let mut p = m;
    for i in 0..m {
        for j in (i + 1)..m {
            out[p] = 2.0 * a[(i, j)].re;
            out[p + 1] = 2.0 * a[(i, j)].im;
            p += 2;
        }
    }
}

/// Coefficients of `Q ↦ hᴴ Q h + extra·tr(Q)`.
pub fn quad_form_coef(h: &CVector, extra_trace: f64, out: &mut [f64]) {
    let m = h.len();
    for i in 0..m {
        out[i] = h[i].norm_sqr() + extra_trace;
    }
    let mut p = m;
    for i in 0..m {
        for j in (i + 1)..m {
            // (h hᴴ)_{ij} = h_i conj(h_j)
            let z = h[i] * h[j].conj();
            out[p] = 2.0 * z.re;
            out[p + 1] = 2.0 * z.im;
            p += 2;
        }
    }
}

/// `hᴴ Q h` for Hermitian `Q` (real by construction).
pub fn quad_form(h: &CVector, q: &CMatrix) -> f64 {
    let qh = q * h;
    h.dotc(&qh).re
}

pub fn trace_re(q: &CMatrix) -> f64 {
    (0..q.nrows()).map(|i| q[(i, i)].re).sum()
}

/// Frobenius norm of `a − b`.
pub fn frobenius_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

pub fn hermitian_part(q: &CMatrix) -> CMatrix {
    (q + q.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
pub fn herm_eigen(q: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = nalgebra::SymmetricEigen::new(hermitian_part(q));
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = CMatrix::zeros(q.nrows(), q.ncols());
    for (c, &i) in idx.iter().enumerate() {
        vecs.set_column(c, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

pub fn min_eigenvalue(q: &CMatrix) -> f64 {
    herm_eigen(q).0.first().copied().unwrap_or(0.0)
}

/// Projection onto the PSD cone (negative eigenvalues set to zero).
/// Only the negative part is subtracted, so eigenvector error scales with
/// the clipped eigenvalues rather than with the norm of `q`.
pub fn project_psd(q: &CMatrix) -> CMatrix {
    let (vals, vecs) = herm_eigen(q);
    let mut out = hermitian_part(q);
    for (i, &v) in vals.iter().enumerate() {
        if v < 0.0 {
            let u = vecs.column(i);
            out -= u * u.adjoint() * Complex64::new(v, 0.0);
        }
    }
    out
}

/// Lower Cholesky factor of a Hermitian positive definite matrix, reading the
/// lower triangle. Unlike a generic complex factorization, the pivots are
/// kept real, so an indefinite input is reported as `None`.
pub fn hpd_cholesky(x: &CMatrix) -> Option<CMatrix> {
    let m = x.nrows();
    let mut l = CMatrix::zeros(m, m);
    for j in 0..m {
        let mut d = x[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let d = d.sqrt();
        l[(j, j)] = Complex64::new(d, 0.0);
        for i in (j + 1)..m {
            let mut z = x[(i, j)];
            for k in 0..j {
                z -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = z / d;
        }
    }
    Some(l)
}

/// Natural-log determinant from a Cholesky factor.
pub fn ln_det_from_cholesky(l: &CMatrix) -> f64 {
    (0..l.nrows()).map(|i| l[(i, i)].re.ln()).sum::<f64>() * 2.0
}

/// Inverse of a Hermitian positive definite matrix, `None` otherwise.
pub fn hpd_inverse(x: &CMatrix) -> Option<CMatrix> {
    let l = hpd_cholesky(x)?;
    let linv = l.solve_lower_triangular(&CMatrix::identity(x.nrows(), x.nrows()))?;
    Some(linv.adjoint() * linv)
}

/// `log2 det(X)` for Hermitian positive definite `X`, `None` otherwise.
pub fn log2_det_hpd(x: &CMatrix) -> Option<f64> {
    hpd_cholesky(x).map(|l| ln_det_from_cholesky(&l) / std::f64::consts::LN_2)
}

/// Outer product `v vᴴ`.
pub fn outer(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}
