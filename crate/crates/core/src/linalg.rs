//! Dense LU with diagnostics.
//!
//! All kernels in this library are inverses of small dense matrices, so we
//! materialize the inverse and report an exact 1-norm condition number
//! together with the smallest LU pivot. Partial pivoting comes from
//! nalgebra's LU; the pivot magnitude gives an exact singularity signal for
//! integer-entry cases (the oriented cycle produces a hard zero pivot).

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tol;

/// Diagnostics attached to a materialized inverse.
#[derive(Debug, Clone, Copy)]
pub struct LuReport {
    /// Exact 1-norm condition number ‖A‖₁·‖A⁻¹‖₁.
    pub condition: f64,
    /// Smallest pivot modulus in the LU factorization.
    pub min_pivot: f64,
    /// ‖A·A⁻¹ − I‖ max-norm.
    pub residual: f64,
}

/// 1-norm (max column sum of moduli).
pub fn norm1<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> f64 {
    let mut best = 0.0_f64;
    for j in 0..m.ncols() {
        let s: f64 = (0..m.nrows()).map(|i| m[(i, j)].clone().modulus()).sum();
        best = best.max(s);
    }
    best
}

/// Max-norm of entries.
pub fn norm_max<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> f64 {
    m.iter().fold(0.0_f64, |a, v| a.max(v.clone().modulus()))
}

fn min_pivot<T: ComplexField<RealField = f64>>(lu: &nalgebra::LU<T, nalgebra::Dyn, nalgebra::Dyn>) -> f64 {
    let u = lu.u();
    (0..u.nrows().min(u.ncols()))
        .map(|i| u[(i, i)].clone().modulus())
        .fold(f64::INFINITY, f64::min)
}

/// Inverts `a`, reporting condition and pivot diagnostics. Declares the
/// matrix singular on a vanishing pivot or a condition estimate beyond the
/// library threshold.
pub fn invert<T: ComplexField<RealField = f64>>(
    a: &DMatrix<T>,
    what: &str,
) -> Result<(DMatrix<T>, LuReport)> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "invert expects a square matrix");
    if n == 0 {
        return Ok((
            DMatrix::zeros(0, 0),
            LuReport {
                condition: 1.0,
                min_pivot: f64::INFINITY,
                residual: 0.0,
            },
        ));
    }
    let lu = a.clone().lu();
    let pivot = min_pivot(&lu);
    if pivot < tol::SINGULAR_PIVOT {
        return Err(Error::Singular {
            what: what.to_string(),
            condition: f64::INFINITY,
            min_pivot: pivot,
        });
    }
    let inv = lu.try_inverse().ok_or_else(|| Error::Singular {
        what: what.to_string(),
        condition: f64::INFINITY,
        min_pivot: pivot,
    })?;
    let condition = norm1(a) * norm1(&inv);
    if condition > tol::SINGULAR_COND {
        return Err(Error::Singular {
            what: what.to_string(),
            condition,
            min_pivot: pivot,
        });
    }
    let residual = norm_max(&(a * &inv - DMatrix::<T>::identity(n, n)));
    Ok((
        inv,
        LuReport {
            condition,
            min_pivot: pivot,
            residual,
        },
    ))
}

/// Like [`invert`] but returns the diagnostics instead of an error for a
/// singular matrix, so callers can report a verdict.
pub fn try_invert<T: ComplexField<RealField = f64>>(
    a: &DMatrix<T>,
    what: &str,
) -> (Option<DMatrix<T>>, LuReport) {
    match invert(a, what) {
        Ok((inv, rep)) => (Some(inv), rep),
        Err(Error::Singular {
            condition,
            min_pivot,
            ..
        }) => (
            None,
            LuReport {
                condition,
                min_pivot,
                residual: f64::INFINITY,
            },
        ),
        Err(_) => unreachable!("invert only fails with Singular"),
    }
}

/// Lifts a real matrix into complex entries.
pub fn complexify(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|v| Complex64::new(v, 0.0))
}

/// Applies a real matrix to a complex vector.
pub fn apply_real(m: &DMatrix<f64>, v: &DVector<Complex64>) -> DVector<Complex64> {
    assert_eq!(m.ncols(), v.len());
    DVector::from_fn(m.nrows(), |i, _| {
        (0..m.ncols())
            .map(|j| v[j] * m[(i, j)])
            .fold(Complex64::new(0.0, 0.0), |a, b| a + b)
    })
}
