//! Complex linear-algebra aliases and the small helpers shared by the solvers.

use nalgebra::{DMatrix, DVector};

pub type Complex64 = nalgebra::Complex<f64>;
pub type CVector = DVector<Complex64>;
pub type CMatrix = DMatrix<Complex64>;

/// `exp(j*phase)`.
#[inline]
pub(crate) fn cis(phase: f64) -> Complex64 {
    Complex64::new(libm::cos(phase), libm::sin(phase))
}

#[inline]
pub(crate) fn arg(z: Complex64) -> f64 {
    libm::atan2(z.im, z.re)
}

#[inline]
pub(crate) fn abs(z: Complex64) -> f64 {
    libm::hypot(z.re, z.im)
}

pub(crate) fn norm_sqr(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

pub(crate) fn frobenius_sqr(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// Column-major vectorization.
pub(crate) fn vec_col_major(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vec_col_major`] for a square `n x n` matrix.
pub(crate) fn unvec_col_major(v: &CVector, n: usize) -> CMatrix {
    assert_eq!(v.len(), n * n, "vector length must be n^2");
    CMatrix::from_column_slice(n, n, v.as_slice())
}

/// Largest entrywise deviation of `m` from its conjugate transpose.
pub(crate) fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0_f64;
    for j in 0..n {
        for i in 0..=j {
            dev = dev.max(abs(m[(i, j)] - m[(j, i)].conj()));
        }
    }
    dev
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in 0..j {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}
