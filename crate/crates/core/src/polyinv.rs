//! Time-domain inversion of polynomial eigenvalues.
//!
//! A scalar eigenvalue `a(z)` is inverted by least squares over a
//! two-sided window: find `b` on lags `[−d, d]` minimizing
//! `‖C_a·b − e₀‖₂`, where `C_a` is the full linear-convolution matrix of `a`
//! and `e₀` the unit impulse at lag 0. The normal equations
//! `(C_aᴴC_a + εI)·b = C_aᴴ·e₀` are Hermitian Toeplitz and solved by
//! Cholesky.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky_solve, CMat};
use crate::polymat::{LaurentPoly, PolyMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InversionParams {
    /// Half-support `d` of the inverse.
    pub delay: usize,
    /// Tikhonov weight relative to the leading normal-equation diagonal
    /// (`ε = regularization · ‖a‖²`).
    pub regularization: f64,
}

impl Default for InversionParams {
    fn default() -> Self {
        Self {
            delay: 11,
            regularization: 1e-10,
        }
    }
}

impl InversionParams {
    pub fn with_delay(delay: usize) -> Self {
        Self {
            delay,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.regularization >= 0.0) || !self.regularization.is_finite() {
            return Err(Error::invalid("regularization", "must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Least-squares inverse of a para-Hermitian scalar polynomial.
pub fn invert_scalar_poly(a: &LaurentPoly, params: &InversionParams) -> Result<LaurentPoly> {
    params.validate()?;
    if a.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let defect = a.symmetry_defect();
    if defect > 1e-6 {
        return Err(Error::invalid(
            "a",
            format!("eigenvalue is not para-Hermitian (relative defect {defect:e})"),
        ));
    }
    let d = params.delay as i64;
    let n = 2 * params.delay + 1;

    // r[k] = Σ_m a[m]·conj(a[m − k]); the normal matrix is N[i][j] = r[i − j].
    let coeffs = a.coeffs();
    let autocorr = |k: i64| -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for (i, &x) in coeffs.iter().enumerate() {
            let j = i as i64 - k;
            if j >= 0 && (j as usize) < coeffs.len() {
                s += x * coeffs[j as usize].conj();
            }
        }
        s
    };
    let r: Vec<Complex64> = (0..n as i64).map(autocorr).collect();
    let lead = r[0].re;
    let eps = params.regularization * lead;
    let normal = CMat::from_fn(n, n, |i, j| {
        let k = i as i64 - j as i64;
        let v = if k >= 0 { r[k as usize] } else { r[(-k) as usize].conj() };
        if i == j {
            v + eps
        } else {
            v
        }
    });
    // Right-hand side (C_aᴴe₀)[i] = conj(a[0 − (i − d)]).
    let rhs: Vec<Complex64> = (0..n as i64).map(|i| a.get(d - i).conj()).collect();
    let b = cholesky_solve(&normal, &rhs)?;
    Ok(LaurentPoly::new(-d, b))
}

/// Invert every diagonal element of a diagonal polynomial matrix.
pub fn invert_diag(a: &PolyMatrix, params: &InversionParams) -> Result<PolyMatrix> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let off = a.off_diag_energy()?;
    if off > 1e-20 * a.energy().max(f64::MIN_POSITIVE) {
        return Err(Error::NotDiagonal { energy: off });
    }
    let inv = a
        .diagonal()
        .iter()
        .enumerate()
        .map(|(index, d)| {
            invert_scalar_poly(d, params).map_err(|e| Error::DiagonalInversion {
                index,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PolyMatrix::from_diagonal(&inv))
}

/// `max_τ |(a ⊗ b)[τ] − δ[τ]|`.
pub fn inversion_residual(a: &LaurentPoly, b: &LaurentPoly) -> f64 {
    let p = a.mul(b);
    let lo = p.lag_min().min(0);
    let hi = p.lag_max().max(0);
    (lo..=hi)
        .map(|t| {
            let target = if t == 0 { 1.0 } else { 0.0 };
            (p.get(t) - Complex64::new(target, 0.0)).norm()
        })
        .fold(0.0, f64::max)
}
