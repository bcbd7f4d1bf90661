//! Small dense linear-algebra helpers shared across the crate.

use ndarray::prelude::*;
use ndarray_linalg::{Determinant, Eigh, Inverse, Norm, SVD, UPLO};
use num_complex::Complex64;

use crate::error::{GermError, Result};

pub type C64 = Complex64;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn to_complex(a: &Array2<f64>) -> Array2<C64> {
    a.mapv(|x| c(x, 0.0))
}

pub fn real_part(a: &Array2<C64>) -> Array2<f64> {
    a.mapv(|x| x.re)
}

pub fn max_imag(a: &Array2<C64>) -> f64 {
    a.iter().map(|x| x.im.abs()).fold(0.0, f64::max)
}

pub fn conj_mat(a: &Array2<C64>) -> Array2<C64> {
    a.mapv(|x| x.conj())
}

pub fn adjoint(a: &Array2<C64>) -> Array2<C64> {
    conj_mat(a).reversed_axes().as_standard_layout().to_owned()
}

/// Largest singular value; 0 for empty matrices.
pub fn spectral_norm(a: &Array2<C64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let (_, s, _) = a.svd(false, false).expect("svd failed");
    s.iter().cloned().fold(0.0, f64::max)
}

pub fn frobenius(a: &Array2<C64>) -> f64 {
    a.norm_l2()
}

/// Singular values of `a` in descending order.
pub fn singular_values(a: &Array2<C64>) -> Array1<f64> {
    let (_, s, _) = a.svd(false, false).expect("svd failed");
    s
}

/// Numerical rank at a relative singular-value cutoff.
pub fn numerical_rank(a: &Array2<C64>, rtol: f64) -> usize {
    if a.is_empty() {
        return 0;
    }
    let s = singular_values(a);
    let smax = s.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > rtol * smax).count()
}

/// Orthonormal basis for the column span of `a` (columns), at relative cutoff `rtol`.
pub fn orthonormal_span(a: &Array2<C64>, rtol: f64) -> Array2<C64> {
    let (m, _) = a.dim();
    if a.ncols() == 0 {
        return Array2::zeros((m, 0));
    }
    let (u, s, _) = a.svd(true, false).expect("svd failed");
    let u = u.unwrap();
    let smax = s.iter().cloned().fold(0.0, f64::max);
    let r = if smax == 0.0 {
        0
    } else {
        s.iter().filter(|&&x| x > rtol * smax).count()
    };
    u.slice(s![.., ..r]).to_owned()
}

/// Orthonormal basis of the null space of `a`, at relative cutoff `rtol`.
pub fn null_space(a: &Array2<C64>, rtol: f64) -> Array2<C64> {
    null_space_abs(a, {
        let s = singular_values(a);
        rtol * s.iter().cloned().fold(0.0, f64::max)
    })
}

/// Null space with an absolute singular-value cutoff.
pub fn null_space_abs(a: &Array2<C64>, cutoff: f64) -> Array2<C64> {
    let (_, n) = a.dim();
    let (_, s, vt) = a.svd(false, true).expect("svd failed");
    let vt = vt.unwrap();
    let r = s.iter().filter(|&&x| x > cutoff).count();
    // rows r.. of V^H span the kernel after conjugate transpose
    let mut out = Array2::zeros((n, n - r));
    for (j, i) in (r..vt.nrows()).enumerate() {
        for col in 0..n {
            out[(col, j)] = vt[(i, col)].conj();
        }
    }
    // rows beyond vt.nrows() cannot occur for full VT from LAPACK (square V)
    out
}

/// Moore-Penrose pseudoinverse via SVD.
pub fn pinv(a: &Array2<C64>, rtol: f64) -> Array2<C64> {
    let (m, n) = a.dim();
    if a.is_empty() {
        return Array2::zeros((n, m));
    }
    let (u, s, vt) = a.svd(true, true).expect("svd failed");
    let (u, vt) = (u.unwrap(), vt.unwrap());
    let smax = s.iter().cloned().fold(0.0, f64::max);
    let k = s.len();
    let mut sinv = Array2::<C64>::zeros((k, k));
    for i in 0..k {
        if s[i] > rtol * smax {
            sinv[(i, i)] = c(1.0 / s[i], 0.0);
        }
    }
    let v = adjoint(&vt);
    let uh = adjoint(&u);
    v.slice(s![.., ..k]).dot(&sinv).dot(&uh.slice(s![..k, ..]))
}

/// Orthogonal projector onto the span of the (orthonormal) columns of `q`.
pub fn projector(q: &Array2<C64>) -> Array2<C64> {
    q.dot(&adjoint(q))
}

/// Eigendecomposition of a Hermitian matrix: ascending eigenvalues and eigenvectors.
pub fn hermitian_eig(h: &Array2<C64>) -> Result<(Array1<f64>, Array2<C64>)> {
    // symmetrize to guard against rounding in the assembled form
    let hs = (h + &adjoint(h)).mapv(|x| x * c(0.5, 0.0));
    let (w, v) = hs.eigh(UPLO::Lower)?;
    Ok((w, v))
}

/// Matrix exponential of a real square matrix by scaling-and-squaring with a
/// diagonal Pade approximant.
pub fn expm(a: &Array2<f64>) -> Array2<f64> {
    let n = a.nrows();
    let norm = a.iter().map(|x| x.abs()).fold(0.0, f64::max) * n as f64;
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let a_scaled = a.mapv(|x| x / 2f64.powi(s));
    // [6/6] Pade
    let coeffs = [
        1.0,
        0.5,
        5.0 / 44.0,
        1.0 / 66.0,
        1.0 / 792.0,
        1.0 / 15840.0,
        1.0 / 665280.0,
    ];
    let eye = Array2::<f64>::eye(n);
    let mut term = eye.clone();
    let mut num = term.mapv(|x| x * coeffs[0]);
    let mut den = num.clone();
    for (i, &ci) in coeffs.iter().enumerate().skip(1) {
        term = term.dot(&a_scaled);
        num = num + term.mapv(|x| x * ci);
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        den = den + term.mapv(|x| x * ci * sign);
    }
    let mut r = den.inv().expect("pade denominator singular").dot(&num);
    for _ in 0..s {
        r = r.dot(&r);
    }
    r
}

/// Relative commutator norm ||AB - BA|| / (||A|| ||B||).
pub fn real_det(a: &Array2<f64>) -> f64 {
    a.det().expect("determinant of a square real matrix")
}

pub fn commutator_residual(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    let ab = a.dot(b);
    let ba = b.dot(a);
    let na = frobenius(a).max(1e-300);
    let nb = frobenius(b).max(1e-300);
    frobenius(&(ab - ba)) / (na * nb)
}

/// Checks finite entries, returning an input error otherwise.
pub fn require_square(a: &Array2<C64>, dim: usize) -> Result<()> {
    if a.nrows() != dim || a.ncols() != dim {
        return Err(GermError::DimensionMismatch {
            expected: dim,
            got: a.nrows().max(a.ncols()),
        });
    }
    Ok(())
}
