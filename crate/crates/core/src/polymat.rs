//! Laurent polynomials and polynomial matrices in `z⁻¹`.
//!
//! A [`PolyMatrix`] stores `A(z) = Σ_τ A[τ]·z^{−τ}` as a dense tensor of
//! coefficient slices over one contiguous lag window `[lag_min, lag_max]`.
//! Lags are signed; nothing here assumes causality.
//!
//! Both types are kept in canonical form: leading and trailing slices whose
//! entries are all at most `1e-14 × max|coefficient|` are dropped, and the
//! zero polynomial is the empty window with `lag_min = 0`.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CMat;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Relative magnitude below which a boundary slice counts as zero.
pub const CANONICAL_EPS: f64 = 1e-14;

/// Full linear convolution of two coefficient sequences.
pub fn convolve(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![ZERO; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == ZERO {
            continue;
        }
        for (o, &y) in out[i..].iter_mut().zip(b) {
            *o += x * y;
        }
    }
    out
}

/// Scalar Laurent polynomial `a(z) = Σ_τ a[τ]·z^{−τ}`.
#[derive(Clone, Debug, PartialEq)]
pub struct LaurentPoly {
    lag_min: i64,
    coeffs: Vec<Complex64>,
}

impl LaurentPoly {
    pub fn new(lag_min: i64, coeffs: Vec<Complex64>) -> Self {
        let mut p = Self { lag_min, coeffs };
        p.canonicalize();
        p
    }

    pub fn from_real(lag_min: i64, coeffs: &[f64]) -> Self {
        Self::new(lag_min, coeffs.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Self {
            lag_min: 0,
            coeffs: Vec::new(),
        }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(0, vec![c])
    }

    /// Unit impulse at `lag` (the monomial `z^{−lag}`).
    pub fn delta(lag: i64) -> Self {
        Self::new(lag, vec![ONE])
    }

    pub fn lag_min(&self) -> i64 {
        self.lag_min
    }

    /// Last lag of the support; `lag_min − 1` for the zero polynomial.
    pub fn lag_max(&self) -> i64 {
        self.lag_min + self.coeffs.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn get(&self, lag: i64) -> Complex64 {
        let idx = lag - self.lag_min;
        if idx < 0 || idx >= self.coeffs.len() as i64 {
            ZERO
        } else {
            self.coeffs[idx as usize]
        }
    }

    /// Iterator over `(lag, coefficient)` pairs of the support.
    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(i, &c)| (self.lag_min + i as i64, c))
    }

    fn canonicalize(&mut self) {
        let max = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let floor = CANONICAL_EPS * max;
        let first = self.coeffs.iter().position(|c| !(c.norm() <= floor));
        match first {
            None => {
                self.coeffs.clear();
                self.lag_min = 0;
            }
            Some(first) => {
                let last = self.coeffs.iter().rposition(|c| !(c.norm() <= floor)).unwrap();
                self.coeffs.truncate(last + 1);
                self.coeffs.drain(..first);
                self.lag_min += first as i64;
            }
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::new(self.lag_min + other.lag_min, convolve(&self.coeffs, &other.coeffs))
    }

    pub fn add(&self, other: &Self) -> Self {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let lo = self.lag_min.min(other.lag_min);
        let hi = self.lag_max().max(other.lag_max());
        Self::new(lo, (lo..=hi).map(|t| self.get(t) + other.get(t)).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-ONE))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(self.lag_min, self.coeffs.iter().map(|&c| c * s).collect())
    }

    /// Multiply by `z^{−delay}`.
    pub fn shift(&self, delay: i64) -> Self {
        let mut p = self.clone();
        if !p.is_zero() {
            p.lag_min += delay;
        }
        p
    }

    /// Para-Hermitian conjugate `ã(z) = a*(1/z*)`: conjugate and time-reverse.
    pub fn parah(&self) -> Self {
        Self::new(-self.lag_max(), self.coeffs.iter().rev().map(|c| c.conj()).collect())
    }

    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `Σ_τ a[τ]·e^{−jΩτ}`.
    pub fn eval(&self, omega: f64) -> Complex64 {
        self.iter()
            .map(|(t, c)| c * Complex64::from_polar(1.0, -omega * t as f64))
            .sum()
    }

    /// Lag of the largest-magnitude coefficient (first on ties).
    pub fn peak_lag(&self) -> Option<i64> {
        let mut best: Option<(i64, f64)> = None;
        for (t, c) in self.iter() {
            let m = c.norm();
            if best.map_or(true, |(_, b)| m > b) {
                best = Some((t, m));
            }
        }
        best.map(|(t, _)| t)
    }

    /// Largest `|a[τ] − conj(a[−τ])|` relative to `max|a|`.
    pub fn symmetry_defect(&self) -> f64 {
        let max = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if max == 0.0 {
            return 0.0;
        }
        let lo = self.lag_min.min(-self.lag_max());
        let hi = self.lag_max().max(-self.lag_min);
        (lo..=hi)
            .map(|t| (self.get(t) - self.get(-t).conj()).norm())
            .fold(0.0, f64::max)
            / max
    }
}

/// Matrix of Laurent polynomials over a shared lag window.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyMatrix {
    rows: usize,
    cols: usize,
    lag_min: i64,
    /// Slice-major: index `(lag − lag_min)·rows·cols + r·cols + c`.
    coeffs: Vec<Complex64>,
}

impl PolyMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            lag_min: 0,
            coeffs: Vec::new(),
        }
    }

    /// Constant identity `I_n` at lag 0.
    pub fn identity(n: usize) -> Self {
        Self::constant(&CMat::identity(n))
    }

    pub fn constant(m: &CMat) -> Self {
        Self::from_raw(m.rows(), m.cols(), 0, m.as_slice().to_vec())
    }

    /// Build from a slice-major coefficient vector; canonicalizes.
    pub fn from_raw(rows: usize, cols: usize, lag_min: i64, coeffs: Vec<Complex64>) -> Self {
        let stride = rows * cols;
        assert!(
            stride == 0 || coeffs.len() % stride == 0,
            "PolyMatrix::from_raw: coefficient count not a multiple of rows·cols"
        );
        let mut m = Self {
            rows,
            cols,
            lag_min,
            coeffs,
        };
        m.canonicalize();
        m
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        lag_min: i64,
        lag_max: i64,
        mut f: impl FnMut(i64, usize, usize) -> Complex64,
    ) -> Self {
        let mut coeffs = Vec::new();
        for t in lag_min..=lag_max {
            for r in 0..rows {
                for c in 0..cols {
                    coeffs.push(f(t, r, c));
                }
            }
        }
        Self::from_raw(rows, cols, lag_min, coeffs)
    }

    /// Assemble from scalar entries, row-major.
    pub fn from_entries(rows: usize, cols: usize, entries: &[LaurentPoly]) -> Self {
        assert_eq!(entries.len(), rows * cols);
        let nonzero = entries.iter().filter(|e| !e.is_zero());
        let lo = nonzero.clone().map(|e| e.lag_min()).min();
        let hi = nonzero.map(|e| e.lag_max()).max();
        match (lo, hi) {
            (Some(lo), Some(hi)) => Self::from_fn(rows, cols, lo, hi, |t, r, c| entries[r * cols + c].get(t)),
            _ => Self::zeros(rows, cols),
        }
    }

    pub fn from_diagonal(entries: &[LaurentPoly]) -> Self {
        let n = entries.len();
        let all: Vec<LaurentPoly> = (0..n * n)
            .map(|i| {
                if i / n == i % n {
                    entries[i / n].clone()
                } else {
                    LaurentPoly::zero()
                }
            })
            .collect();
        Self::from_entries(n, n, &all)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn lag_min(&self) -> i64 {
        self.lag_min
    }

    pub fn lag_max(&self) -> i64 {
        self.lag_min + self.num_lags() as i64 - 1
    }

    pub fn num_lags(&self) -> usize {
        let stride = self.rows * self.cols;
        if stride == 0 {
            0
        } else {
            self.coeffs.len() / stride
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Raw slice-major coefficient storage.
    pub fn raw(&self) -> &[Complex64] {
        &self.coeffs
    }

    #[inline]
    fn stride(&self) -> usize {
        self.rows * self.cols
    }

    pub fn get(&self, lag: i64, r: usize, c: usize) -> Complex64 {
        let idx = lag - self.lag_min;
        if idx < 0 || idx as usize >= self.num_lags() {
            ZERO
        } else {
            self.coeffs[idx as usize * self.stride() + r * self.cols + c]
        }
    }

    /// Row-major coefficient slice at `lag`, or `None` outside the window.
    pub fn slice(&self, lag: i64) -> Option<&[Complex64]> {
        let idx = lag - self.lag_min;
        if idx < 0 || idx as usize >= self.num_lags() {
            return None;
        }
        let s = self.stride();
        Some(&self.coeffs[idx as usize * s..(idx as usize + 1) * s])
    }

    pub fn slice_mat(&self, lag: i64) -> CMat {
        match self.slice(lag) {
            Some(s) => CMat::from_vec(self.rows, self.cols, s.to_vec()),
            None => CMat::zeros(self.rows, self.cols),
        }
    }

    pub(crate) fn slices_mut(&mut self) -> std::slice::ChunksExactMut<'_, Complex64> {
        let s = self.stride().max(1);
        self.coeffs.chunks_exact_mut(s)
    }

    pub fn entry(&self, r: usize, c: usize) -> LaurentPoly {
        LaurentPoly::new(
            self.lag_min,
            (0..self.num_lags())
                .map(|i| self.coeffs[i * self.stride() + r * self.cols + c])
                .collect(),
        )
    }

    pub fn diagonal(&self) -> Vec<LaurentPoly> {
        (0..self.rows.min(self.cols)).map(|i| self.entry(i, i)).collect()
    }

    /// Drop near-zero boundary slices (see module docs).
    pub fn canonicalize(&mut self) {
        let s = self.stride();
        if s == 0 {
            self.coeffs.clear();
            self.lag_min = 0;
            return;
        }
        let max = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let floor = CANONICAL_EPS * max;
        let n = self.num_lags();
        let live = |i: usize| self.coeffs[i * s..(i + 1) * s].iter().any(|c| !(c.norm() <= floor));
        let first = (0..n).find(|&i| live(i));
        match first {
            None => {
                self.coeffs.clear();
                self.lag_min = 0;
            }
            Some(first) => {
                let last = (0..n).rev().find(|&i| live(i)).unwrap();
                self.coeffs.truncate((last + 1) * s);
                self.coeffs.drain(..first * s);
                self.lag_min += first as i64;
            }
        }
    }

    pub fn canonical(mut self) -> Self {
        self.canonicalize();
        self
    }

    /// Re-pad onto `[lo, hi]`, which must contain the current window.
    pub(crate) fn padded(&self, lo: i64, hi: i64) -> Self {
        let s = self.stride();
        let n = (hi - lo + 1).max(0) as usize;
        let mut coeffs = vec![ZERO; n * s];
        if !self.is_zero() {
            let off = (self.lag_min - lo) as usize * s;
            coeffs[off..off + self.coeffs.len()].copy_from_slice(&self.coeffs);
        }
        Self {
            rows: self.rows,
            cols: self.cols,
            lag_min: lo,
            coeffs,
        }
    }

    fn check_same_dims(&self, other: &Self, op: &'static str) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                op,
                left: self.dims(),
                right: other.dims(),
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_same_dims(other, "add")?;
        Ok(self.combine(other, 1.0))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_same_dims(other, "sub")?;
        Ok(self.combine(other, -1.0))
    }

    fn combine(&self, other: &Self, sign: f64) -> Self {
        if other.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return other.scale(Complex64::new(sign, 0.0));
        }
        let lo = self.lag_min.min(other.lag_min);
        let hi = self.lag_max().max(other.lag_max());
        let mut out = self.padded(lo, hi);
        let s = self.stride();
        let off = (other.lag_min - lo) as usize * s;
        for (o, &b) in out.coeffs[off..].iter_mut().zip(&other.coeffs) {
            *o += b * sign;
        }
        out.canonical()
    }

    pub fn scale(&self, k: Complex64) -> Self {
        Self::from_raw(
            self.rows,
            self.cols,
            self.lag_min,
            self.coeffs.iter().map(|&c| c * k).collect(),
        )
    }

    /// Polynomial matrix product; lag windows add.
    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                op: "mul",
                left: self.dims(),
                right: other.dims(),
            });
        }
        let (m, n, p) = (self.rows, self.cols, other.cols);
        if self.is_zero() || other.is_zero() {
            return Ok(Self::zeros(m, p));
        }
        let (na, nb) = (self.num_lags(), other.num_lags());
        let mut out = vec![ZERO; (na + nb - 1) * m * p];
        for ia in 0..na {
            let a = &self.coeffs[ia * m * n..(ia + 1) * m * n];
            if a.iter().all(|&x| x == ZERO) {
                continue;
            }
            for ib in 0..nb {
                let b = &other.coeffs[ib * n * p..(ib + 1) * n * p];
                let dst = &mut out[(ia + ib) * m * p..(ia + ib + 1) * m * p];
                for r in 0..m {
                    for k in 0..n {
                        let x = a[r * n + k];
                        if x == ZERO {
                            continue;
                        }
                        let brow = &b[k * p..(k + 1) * p];
                        let drow = &mut dst[r * p..(r + 1) * p];
                        for (d, &y) in drow.iter_mut().zip(brow) {
                            *d += x * y;
                        }
                    }
                }
            }
        }
        Ok(Self::from_raw(m, p, self.lag_min + other.lag_min, out))
    }

    /// `Ã(z) = Aᴴ(1/z*)`: coefficient at lag τ is `A[−τ]ᴴ`.
    pub fn parah(&self) -> Self {
        let (m, n) = self.dims();
        let nl = self.num_lags();
        let mut out = Vec::with_capacity(self.coeffs.len());
        for i in (0..nl).rev() {
            let s = &self.coeffs[i * m * n..(i + 1) * m * n];
            for c in 0..n {
                for r in 0..m {
                    out.push(s[r * n + c].conj());
                }
            }
        }
        let lag_min = if self.is_zero() { 0 } else { -self.lag_max() };
        Self::from_raw(n, m, lag_min, out)
    }

    /// Multiply by `z^{−delay}`.
    pub fn shift(&self, delay: i64) -> Self {
        let mut out = self.clone();
        if !out.is_zero() {
            out.lag_min += delay;
        }
        out
    }

    /// Sum of squared magnitudes. Summed in sorted order so the result does
    /// not depend on coefficient layout (transposes and time reversals give
    /// bit-identical norms).
    pub fn energy(&self) -> f64 {
        let mut sq: Vec<f64> = self.coeffs.iter().map(|c| c.norm_sqr()).collect();
        sq.sort_by(f64::total_cmp);
        sq.iter().sum()
    }

    /// Polynomial Frobenius norm over all lags.
    pub fn fro_norm(&self) -> f64 {
        self.energy().sqrt()
    }

    /// `Σ_τ A[τ]·e^{−jΩτ}`.
    pub fn eval(&self, omega: f64) -> CMat {
        let mut out = CMat::zeros(self.rows, self.cols);
        let s = self.stride();
        for i in 0..self.num_lags() {
            let tau = self.lag_min + i as i64;
            let w = Complex64::from_polar(1.0, -omega * tau as f64);
            for (o, &c) in out.as_mut_slice().iter_mut().zip(&self.coeffs[i * s..(i + 1) * s]) {
                *o += c * w;
            }
        }
        out
    }

    pub fn diag_energy(&self) -> f64 {
        let s = self.stride();
        let d = self.rows.min(self.cols);
        (0..self.num_lags())
            .map(|i| (0..d).map(|k| self.coeffs[i * s + k * self.cols + k].norm_sqr()).sum::<f64>())
            .sum()
    }

    /// Energy of all off-diagonal coefficients over all lags.
    pub fn off_diag_energy(&self) -> Result<f64> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let s = self.stride();
        let n = self.cols;
        Ok((0..self.num_lags())
            .map(|i| {
                self.coeffs[i * s..(i + 1) * s]
                    .iter()
                    .enumerate()
                    .filter(|(idx, _)| idx / n != idx % n)
                    .map(|(_, c)| c.norm_sqr())
                    .sum::<f64>()
            })
            .sum())
    }

    /// Trim boundary lag slices whose Frobenius norm, relative to the norm of
    /// the whole matrix, is at most `threshold`. If every slice qualifies only
    /// the largest survives.
    pub fn trim(&self, threshold: f64) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let total = self.fro_norm();
        let s = self.stride();
        let norms: Vec<f64> = self
            .coeffs
            .chunks_exact(s)
            .map(|sl| sl.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt() / total)
            .collect();
        let keep = |r: &f64| *r > threshold;
        let (first, last) = match (norms.iter().position(keep), norms.iter().rposition(keep)) {
            (Some(f), Some(l)) => (f, l),
            _ => {
                let mut best = 0;
                for (i, &r) in norms.iter().enumerate() {
                    if r > norms[best] {
                        best = i;
                    }
                }
                (best, best)
            }
        };
        Self::from_raw(
            self.rows,
            self.cols,
            self.lag_min + first as i64,
            self.coeffs[first * s..(last + 1) * s].to_vec(),
        )
    }

    /// Lag whose slice has the largest Frobenius norm (first on ties).
    pub fn peak_lag(&self) -> Option<i64> {
        let s = self.stride();
        let mut best: Option<(usize, f64)> = None;
        for (i, sl) in self.coeffs.chunks_exact(s.max(1)).enumerate() {
            let e: f64 = sl.iter().map(|c| c.norm_sqr()).sum();
            if best.map_or(true, |(_, b)| e > b) {
                best = Some((i, e));
            }
        }
        best.map(|(i, _)| self.lag_min + i as i64)
    }

    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Self {
        assert!(r0 + nr <= self.rows && c0 + nc <= self.cols, "block out of range");
        if self.is_zero() {
            return Self::zeros(nr, nc);
        }
        Self::from_fn(nr, nc, self.lag_min, self.lag_max(), |t, r, c| self.get(t, r0 + r, c0 + c))
    }

    /// Overwrite the sub-block at `(r0, c0)`, widening the lag window as needed.
    pub fn set_block(&mut self, r0: usize, c0: usize, block: &Self) {
        assert!(
            r0 + block.rows <= self.rows && c0 + block.cols <= self.cols,
            "set_block out of range"
        );
        let (lo, hi) = match (self.is_zero(), block.is_zero()) {
            (_, true) => (self.lag_min, self.lag_max()),
            (true, false) => (block.lag_min, block.lag_max()),
            (false, false) => (self.lag_min.min(block.lag_min), self.lag_max().max(block.lag_max())),
        };
        if lo > hi {
            return;
        }
        let mut out = self.padded(lo, hi);
        let cols = self.cols;
        let s = self.stride();
        for (i, sl) in out.coeffs.chunks_exact_mut(s).enumerate() {
            let t = lo + i as i64;
            for r in 0..block.rows {
                for c in 0..block.cols {
                    sl[(r0 + r) * cols + c0 + c] = block.get(t, r, c);
                }
            }
        }
        *self = out.canonical();
    }

    pub fn select_columns(&self, cols: &[usize]) -> Self {
        if self.is_zero() {
            return Self::zeros(self.rows, cols.len());
        }
        Self::from_fn(self.rows, cols.len(), self.lag_min, self.lag_max(), |t, r, c| {
            self.get(t, r, cols[c])
        })
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self::from_raw(self.rows, self.cols, self.lag_min, self.coeffs.iter().map(|&c| f(c)).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// `‖A − Ã‖_F / ‖A‖_F`.
    pub fn para_hermitian_defect(&self) -> f64 {
        let n = self.fro_norm();
        if n == 0.0 {
            return 0.0;
        }
        match self.try_sub(&self.parah()) {
            Ok(d) => d.fro_norm() / n,
            Err(_) => f64::INFINITY,
        }
    }

    /// Number of nonzero taps summed over entries, each entry counted from
    /// its first to its last nonzero coefficient.
    pub fn entry_support_total(&self) -> usize {
        (0..self.rows)
            .flat_map(|r| (0..self.cols).map(move |c| (r, c)))
            .map(|(r, c)| {
                let e = self.entry(r, c);
                e.len()
            })
            .sum()
    }
}

impl Add for &PolyMatrix {
    type Output = PolyMatrix;
    fn add(self, rhs: &PolyMatrix) -> PolyMatrix {
        self.try_add(rhs).expect("PolyMatrix add")
    }
}

impl Sub for &PolyMatrix {
    type Output = PolyMatrix;
    fn sub(self, rhs: &PolyMatrix) -> PolyMatrix {
        self.try_sub(rhs).expect("PolyMatrix sub")
    }
}

impl Mul for &PolyMatrix {
    type Output = PolyMatrix;
    fn mul(self, rhs: &PolyMatrix) -> PolyMatrix {
        self.try_mul(rhs).expect("PolyMatrix mul")
    }
}

impl Neg for &PolyMatrix {
    type Output = PolyMatrix;
    fn neg(self) -> PolyMatrix {
        self.scale(-ONE)
    }
}

/// Uniform grid `Ω_i = 2πi/n` on `[0, 2π)`.
pub fn omega_grid(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| 2.0 * PI * i as f64 / n as f64)
}

/// Structured text form:
///
/// ```text
/// polymatrix rows=2 cols=2 lag_min=-1 lags=3
/// lag=-1 re,im re,im ; re,im re,im
/// ...
/// ```
impl fmt::Display for PolyMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "polymatrix rows={} cols={} lag_min={} lags={}",
            self.rows,
            self.cols,
            self.lag_min,
            self.num_lags()
        )?;
        for i in 0..self.num_lags() {
            write!(f, "lag={}", self.lag_min + i as i64)?;
            for r in 0..self.rows {
                if r > 0 {
                    write!(f, " ;")?;
                }
                for c in 0..self.cols {
                    let z = self.coeffs[i * self.stride() + r * self.cols + c];
                    write!(f, " {:?},{:?}", z.re, z.im)?;
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn parse_kv<T: FromStr>(tok: &str, key: &str, line: usize) -> Result<T> {
    tok.strip_prefix(key)
        .and_then(|v| v.strip_prefix('='))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Parse {
            line,
            reason: format!("expected `{key}=<value>`, found `{tok}`"),
        })
}

impl PolyMatrix {
    /// Parse the [`Display`](fmt::Display) form from an iterator of lines.
    /// Consumes exactly the header plus `lags` lines.
    pub fn parse_lines<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>) -> Result<Self> {
        let (ln, header) = lines.next().ok_or(Error::Parse {
            line: 0,
            reason: "missing polymatrix header".into(),
        })?;
        let toks: Vec<&str> = header.split_whitespace().collect();
        if toks.len() != 5 || toks[0] != "polymatrix" {
            return Err(Error::Parse {
                line: ln,
                reason: format!("bad header `{header}`"),
            });
        }
        let rows: usize = parse_kv(toks[1], "rows", ln)?;
        let cols: usize = parse_kv(toks[2], "cols", ln)?;
        let lag_min: i64 = parse_kv(toks[3], "lag_min", ln)?;
        let lags: usize = parse_kv(toks[4], "lags", ln)?;
        let mut coeffs = Vec::with_capacity(lags * rows * cols);
        for i in 0..lags {
            let (ln, line) = lines.next().ok_or(Error::Parse {
                line: ln + i + 1,
                reason: "truncated coefficient table".into(),
            })?;
            let mut toks = line.split_whitespace().filter(|t| *t != ";");
            let lag: i64 = parse_kv(toks.next().unwrap_or(""), "lag", ln)?;
            if lag != lag_min + i as i64 {
                return Err(Error::Parse {
                    line: ln,
                    reason: format!("expected lag {}, found {lag}", lag_min + i as i64),
                });
            }
            let mut n = 0;
            for t in toks {
                let (re, im) = t
                    .split_once(',')
                    .and_then(|(a, b)| Some((a.parse::<f64>().ok()?, b.parse::<f64>().ok()?)))
                    .ok_or_else(|| Error::Parse {
                        line: ln,
                        reason: format!("bad coefficient `{t}`"),
                    })?;
                coeffs.push(Complex64::new(re, im));
                n += 1;
            }
            if n != rows * cols {
                return Err(Error::Parse {
                    line: ln,
                    reason: format!("expected {} coefficients, found {n}", rows * cols),
                });
            }
        }
        Ok(Self::from_raw(rows, cols, lag_min, coeffs))
    }
}

impl FromStr for PolyMatrix {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.trim().is_empty());
        Self::parse_lines(&mut lines)
    }
}
