//! Complex-to-real embedding and symmetric vectorization.
//!
//! An N x N Hermitian matrix H maps to the 2N x 2N real symmetric matrix
//! `[[Re H, -Im H], [Im H, Re H]]`; H is PSD iff its embedding is, and every
//! eigenvalue of H appears twice in the embedding.

use num_complex::Complex;

use crate::{CMat, RMat, RVec};

/// Real embedding of a complex matrix (works for non-square maps too).
pub fn embed(c: &CMat) -> RMat {
    let (r, n) = (c.nrows(), c.ncols());
    let mut out = RMat::zeros(2 * r, 2 * n);
    for i in 0..r {
        for j in 0..n {
            let v = c[(i, j)];
            out[(i, j)] = v.re;
            out[(i, j + n)] = -v.im;
            out[(i + r, j)] = v.im;
            out[(i + r, j + n)] = v.re;
        }
    }
    out
}

/// Recovers a Hermitian matrix from a 2N x 2N real symmetric one.
///
/// For a structured input this inverts [`embed`]; for an unstructured one it
/// averages over the embedding symmetry, which preserves semidefiniteness
/// and every trace functional against embedded coefficient matrices.
pub fn unembed_hermitian(y: &RMat) -> CMat {
    let d2 = y.nrows();
    assert!(d2 % 2 == 0 && y.ncols() == d2, "expected an even square matrix");
    let d = d2 / 2;
    let mut h = CMat::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let re = 0.5 * (y[(i, j)] + y[(i + d, j + d)]);
            let im = 0.5 * (y[(i + d, j)] - y[(i, j + d)]);
            h[(i, j)] = Complex::new(re, im);
        }
    }
    // Enforce exact Hermitian symmetry.
    let adj = h.adjoint();
    (h + adj).scale(0.5)
}

/// Length of the symmetric vectorization of a d x d matrix.
pub fn svec_len(d: usize) -> usize {
    d * (d + 1) / 2
}

/// Symmetric vectorization with sqrt(2)-scaled off-diagonals, so that
/// `svec(A) . svec(B) = <A, B>` in the Frobenius inner product.
pub fn svec(m: &RMat) -> RVec {
    let d = m.nrows();
    let s = std::f64::consts::SQRT_2;
    let mut out = RVec::zeros(svec_len(d));
    let mut k = 0;
    for j in 0..d {
        for i in 0..=j {
            out[k] = if i == j { m[(i, j)] } else { s * 0.5 * (m[(i, j)] + m[(j, i)]) };
            k += 1;
        }
    }
    out
}

/// Inverse of [`svec`].
pub fn smat(v: &RVec, d: usize) -> RMat {
    debug_assert_eq!(v.len(), svec_len(d));
    let inv = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = RMat::zeros(d, d);
    let mut k = 0;
    for j in 0..d {
        for i in 0..=j {
            if i == j {
                out[(i, j)] = v[k];
            } else {
                out[(i, j)] = inv * v[k];
                out[(j, i)] = inv * v[k];
            }
            k += 1;
        }
    }
    out
}

/// Orthonormal Hermitian basis functionals of a d x d complex space:
/// d diagonal elements, then for each i < j a real and an imaginary
/// off-diagonal element. There are d^2 of them.
pub fn hermitian_basis(d: usize) -> Vec<CMat> {
    let mut out = Vec::with_capacity(d * d);
    let inv = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..d {
        let mut b = CMat::zeros(d, d);
        b[(i, i)] = Complex::new(1.0, 0.0);
        out.push(b);
    }
    for j in 1..d {
        for i in 0..j {
            let mut re = CMat::zeros(d, d);
            re[(i, j)] = Complex::new(inv, 0.0);
            re[(j, i)] = Complex::new(inv, 0.0);
            out.push(re);
            let mut im = CMat::zeros(d, d);
            im[(i, j)] = Complex::new(0.0, inv);
            im[(j, i)] = Complex::new(0.0, -inv);
            out.push(im);
        }
    }
    out
}

/// Real part of `Tr(B F)` for Hermitian B (exact for Hermitian F).
pub fn herm_inner(b: &CMat, f: &CMat) -> f64 {
    let mut acc = 0.0;
    for i in 0..b.nrows() {
        for j in 0..b.ncols() {
            // Tr(B F) = sum_{ij} B[i][j] F[j][i]
            let p = b[(i, j)] * f[(j, i)];
            acc += p.re;
        }
    }
    acc
}
