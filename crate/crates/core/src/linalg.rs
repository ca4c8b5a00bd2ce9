//! Small dense complex linear algebra: just what the polynomial routines need.
//!
//! Matrices here are at most a few dozen rows, so everything is plain
//! row-major storage with O(n³) kernels.

use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Dense row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    /// Wraps row-major data. Panics if the length does not match.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), rows * cols, "CMat::from_vec: bad length");
        Self { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r).conj())
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "CMat::matmul: inner dimension");
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a == ZERO {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[r * other.cols..(r + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Complex Givens rotation acting on the index pair `(p, q)`.
///
/// As a left factor it maps rows
/// `p ← c·p + s·e^{jφ}·q` and `q ← −s·e^{−jφ}·p + c·q`.
#[derive(Clone, Copy, Debug)]
pub struct Rotation {
    pub p: usize,
    pub q: usize,
    pub c: f64,
    pub s: f64,
    pub phase: Complex64,
}

impl Rotation {
    /// The rotation `V` for which `V·[[a, b], [b*, d]]·Vᴴ` is diagonal with the
    /// larger eigenvalue landing on `p`.
    pub fn annihilating(p: usize, q: usize, a_pp: f64, a_qq: f64, b: Complex64) -> Self {
        let mag = b.norm();
        if mag == 0.0 {
            return Self { p, q, c: 1.0, s: 0.0, phase: ONE };
        }
        let theta = 0.5 * (2.0 * mag).atan2(a_pp - a_qq);
        Self {
            p,
            q,
            c: theta.cos(),
            s: theta.sin(),
            phase: b / mag,
        }
    }

    /// Left-multiply a row-major `rows × cols` block in place.
    #[inline]
    pub fn apply_left(&self, data: &mut [Complex64], cols: usize) {
        let sp = self.phase * self.s;
        let sq = self.phase.conj() * self.s;
        for k in 0..cols {
            let x = data[self.p * cols + k];
            let y = data[self.q * cols + k];
            data[self.p * cols + k] = x * self.c + sp * y;
            data[self.q * cols + k] = y * self.c - sq * x;
        }
    }

    /// Right-multiply by the adjoint rotation (`X ← X·Vᴴ`) in place.
    #[inline]
    pub fn apply_right_adjoint(&self, data: &mut [Complex64], rows: usize, cols: usize) {
        let sp = self.phase * self.s;
        let sq = self.phase.conj() * self.s;
        for r in 0..rows {
            let x = data[r * cols + self.p];
            let y = data[r * cols + self.q];
            data[r * cols + self.p] = x * self.c + sq * y;
            data[r * cols + self.q] = y * self.c - sp * x;
        }
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi sweeps.
///
/// Returns eigenvalues in descending order and the unitary `U` whose columns
/// are the matching eigenvectors, so that `A = U·diag(λ)·Uᴴ`. Only the upper
/// triangle's Hermitian part is trusted.
pub fn hermitian_eig(a: &CMat) -> (Vec<f64>, CMat) {
    assert_eq!(a.rows, a.cols, "hermitian_eig: square input required");
    let n = a.rows;
    let mut w = a.clone();
    // Force exact Hermitian symmetry so the rotations stay consistent.
    for i in 0..n {
        let d = w.get(i, i).re;
        w.set(i, i, Complex64::new(d, 0.0));
        for j in i + 1..n {
            let h = 0.5 * (w.get(i, j) + w.get(j, i).conj());
            w.set(i, j, h);
            w.set(j, i, h.conj());
        }
    }
    // Accumulated left rotations: V·A·Vᴴ = Λ.
    let mut v = CMat::identity(n);
    let total = w.fro_norm();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| w.get(i, j).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * total || total == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let b = w.get(p, q);
                if b.norm() <= 1e-300 {
                    continue;
                }
                let rot = Rotation::annihilating(p, q, w.get(p, p).re, w.get(q, q).re, b);
                rot.apply_left(&mut w.data, n);
                rot.apply_right_adjoint(&mut w.data, n, n);
                w.set(p, q, ZERO);
                w.set(q, p, ZERO);
                rot.apply_left(&mut v.data, n);
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| w.get(j, j).re.total_cmp(&w.get(i, i).re));
    let values = order.iter().map(|&i| w.get(i, i).re).collect();
    // U = Vᴴ, columns permuted into descending order.
    let u = CMat::from_fn(n, n, |r, c| v.get(order[c], r).conj());
    (values, u)
}

/// Singular values (descending) by one-sided Jacobi orthogonalization of the
/// columns of `A` (or of `Aᴴ` when that has fewer columns).
pub fn singular_values(a: &CMat) -> Vec<f64> {
    let mut w = if a.rows >= a.cols { a.clone() } else { a.adjoint() };
    let (m, n) = (w.rows, w.cols);
    let col_dot = |w: &CMat, i: usize, j: usize| -> Complex64 {
        (0..m).map(|r| w.get(r, i).conj() * w.get(r, j)).sum()
    };
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = col_dot(&w, p, p).re;
                let beta = col_dot(&w, q, q).re;
                let gamma = col_dot(&w, p, q);
                if gamma.norm() <= 1e-15 * (alpha * beta).sqrt() || gamma.norm() == 0.0 {
                    continue;
                }
                rotated = true;
                let rot = Rotation::annihilating(p, q, alpha, beta, gamma);
                rot.apply_right_adjoint(&mut w.data, m, n);
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = (0..n).map(|c| col_dot(&w, c, c).re.max(0.0).sqrt()).collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

/// Numerical rank: singular values above `rel_tol · σ_max`.
pub fn rank(a: &CMat, rel_tol: f64) -> usize {
    let sv = singular_values(a);
    let top = sv.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * top).count()
}

/// Solve `A·x = b` for Hermitian positive-definite `A` by Cholesky.
///
/// A pivot at or below `n·ε·max(diag)` is reported as [`Error::Singular`].
pub fn cholesky_solve(a: &CMat, b: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = a.rows;
    assert_eq!(a.cols, n);
    assert_eq!(b.len(), n);
    let max_diag = (0..n).map(|i| a.get(i, i).re).fold(0.0, f64::max);
    let floor = (n as f64) * f64::EPSILON * max_diag;
    // Lower-triangular factor, row-major.
    let mut l = vec![ZERO; n * n];
    for j in 0..n {
        let mut d = a.get(j, j).re;
        for k in 0..j {
            d -= l[j * n + k].norm_sqr();
        }
        if !(d > floor) {
            return Err(Error::Singular { pivot: j, size: n });
        }
        let d = d.sqrt();
        l[j * n + j] = Complex64::new(d, 0.0);
        for i in j + 1..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k].conj();
            }
            l[i * n + j] = s / d;
        }
    }
    // L·y = b
    let mut y = b.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    // Lᴴ·x = y
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i].conj() * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    Ok(y)
}
