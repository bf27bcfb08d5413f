//! Small complex linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Row vector times column vector, `row . col` (no conjugation).
#[inline]
pub fn dot(row: &[Complex64], col: &[Complex64]) -> Complex64 {
    row.iter().zip(col).map(|(a, b)| a * b).sum()
}

/// `a^H b`.
#[inline]
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[inline]
pub fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Scales `v` to unit norm; returns `None` for the zero vector.
pub fn normalized(v: &[Complex64]) -> Option<Vec<Complex64>> {
    let n = norm_sqr(v).sqrt();
    if n > 0.0 && n.is_finite() {
        Some(v.iter().map(|z| z / n).collect())
    } else {
        None
    }
}

/// Solves `A x = b` for Hermitian positive-definite `A`.
pub fn solve_hpd(a: CMatrix, b: &CVector) -> Result<CVector> {
    let chol = a
        .cholesky()
        .ok_or_else(|| Error::SingularMatrix("matrix is not positive definite".into()))?;
    Ok(chol.solve(b))
}

/// Frobenius-norm based upper bound on the condition number of a Hermitian
/// matrix known to satisfy `A >= floor * I`.
pub fn condition_bound(a: &CMatrix, floor: f64) -> f64 {
    a.norm() / floor
}
