//! Polynomial eigenvalue decomposition of para-Hermitian matrices.
//!
//! Both algorithms iterate on a working copy of `R(z)` with elementary
//! para-unitary steps (a delay on one index followed by a unitary transform
//! of every lag slice) and accumulate the same steps into `H(z)`, so that
//! `A(z) = H(z)·R(z)·H̃(z)` at all times. The eigenvector matrix is
//! `Q(z) = H̃(z)`, giving `R(z) ≈ Q(z)·A(z)·Q̃(z)`.
//!
//! * SBR2 zeros the single dominant off-diagonal coefficient per iteration
//!   with a Jacobi rotation.
//! * SMD brings the column with the most off-diagonal energy at one lag to
//!   lag zero and diagonalizes the whole zero-lag slice.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, CMat, Rotation};
use crate::polymat::{omega_grid, PolyMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Sbr2,
    Smd,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algorithm::Sbr2 => "sbr2",
            Algorithm::Smd => "smd",
        })
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sbr2" => Ok(Algorithm::Sbr2),
            "smd" => Ok(Algorithm::Smd),
            other => Err(Error::invalid("algorithm", format!("unknown PEVD algorithm `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PevdParams {
    pub algorithm: Algorithm,
    /// Number of iterations `N`.
    pub max_iterations: usize,
    /// Per-iteration trim threshold `μ` applied to `Q` and `A`; zero disables.
    pub trim_threshold: f64,
    /// Stop once the located maximum falls to `stop_threshold · ‖R‖_F`.
    pub stop_threshold: f64,
}

impl Default for PevdParams {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Sbr2,
            max_iterations: 30,
            trim_threshold: 0.0,
            stop_threshold: 0.0,
        }
    }
}

impl PevdParams {
    pub fn new(algorithm: Algorithm, max_iterations: usize) -> Self {
        Self {
            algorithm,
            max_iterations,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations", "must be at least 1"));
        }
        if !(self.trim_threshold >= 0.0) {
            return Err(Error::invalid("trim_threshold", "must be non-negative"));
        }
        if !(self.stop_threshold >= 0.0) {
            return Err(Error::invalid("stop_threshold", "must be non-negative"));
        }
        Ok(())
    }
}

/// One row of the convergence trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceEntry {
    pub iteration: usize,
    pub off_diag_energy: f64,
    /// `Σ_i |a_ii[0]|²`, the quantity both algorithms increase monotonically.
    pub zero_lag_diag_energy: f64,
    /// Polynomial order (lag span) of `Q` after this iteration.
    pub q_order: usize,
    /// Polynomial order of `A` after this iteration.
    pub a_order: usize,
}

#[derive(Clone, Debug)]
pub struct PevdResult {
    /// Para-unitary eigenvector matrix.
    pub q: PolyMatrix,
    /// Diagonalized para-Hermitian matrix; its diagonal holds the eigenvalues.
    pub a: PolyMatrix,
    /// Entry 0 is the input's off-diagonal energy, then one entry per iteration.
    pub trace: Vec<TraceEntry>,
    pub iterations_run: usize,
}

impl PevdResult {
    pub fn off_diag_trace(&self) -> Vec<f64> {
        self.trace.iter().map(|t| t.off_diag_energy).collect()
    }

    /// `A` with its off-diagonal residue discarded.
    pub fn eigenvalues(&self) -> PolyMatrix {
        PolyMatrix::from_diagonal(&self.a.diagonal())
    }

    /// `Q·A·Q̃`.
    pub fn reconstruct(&self) -> PolyMatrix {
        &(&self.q * &self.a) * &self.q.parah()
    }

    /// CSV dump: `iteration,off_diag_energy,q_order,a_order`.
    pub fn trace_csv(&self) -> String {
        let mut s = String::from("iteration,off_diag_energy,q_order,a_order\n");
        for t in &self.trace {
            let _ = writeln!(s, "{},{:e},{},{}", t.iteration, t.off_diag_energy, t.q_order, t.a_order);
        }
        s
    }
}

fn zero_lag_diag_energy(m: &PolyMatrix) -> f64 {
    (0..m.rows()).map(|i| m.get(0, i, i).norm_sqr()).sum()
}

fn order(m: &PolyMatrix) -> usize {
    m.num_lags().saturating_sub(1)
}

/// Apply the elementary delay `z^{−t}` to index `k`: row `k` is delayed by
/// `t` and, when `columns` is set, column `k` is advanced by `t`.
fn delay_index(m: &PolyMatrix, k: usize, t: i64, columns: bool) -> PolyMatrix {
    if t == 0 || m.is_zero() {
        return m.clone();
    }
    let span = t.abs();
    PolyMatrix::from_fn(m.rows(), m.cols(), m.lag_min() - span, m.lag_max() + span, |tau, r, c| {
        let row_k = r == k;
        let col_k = columns && c == k;
        match (row_k, col_k) {
            (true, true) | (false, false) => m.get(tau, r, c),
            (true, false) => m.get(tau - t, r, c),
            (false, true) => m.get(tau + t, r, c),
        }
    })
}

/// Similarity `X ← V·X·Vᴴ` on every lag slice.
fn rotate_similarity(m: &mut PolyMatrix, rot: &Rotation) {
    let n = m.rows();
    for sl in m.slices_mut() {
        rot.apply_left(sl, n);
        rot.apply_right_adjoint(sl, n, n);
    }
}

fn rotate_rows(m: &mut PolyMatrix, rot: &Rotation) {
    let cols = m.cols();
    for sl in m.slices_mut() {
        rot.apply_left(sl, cols);
    }
}

/// `X ← U·X·Uᴴ` (or `U·X` when `similarity` is false) with dense unitary `U`.
fn transform_slices(m: &PolyMatrix, u: &CMat, similarity: bool) -> PolyMatrix {
    let uh = u.adjoint();
    let (rows, cols) = m.dims();
    let mut out = Vec::with_capacity(m.raw().len());
    for i in 0..m.num_lags() {
        let tau = m.lag_min() + i as i64;
        let x = m.slice_mat(tau);
        let y = if similarity { u.matmul(&x).matmul(&uh) } else { u.matmul(&x) };
        out.extend_from_slice(y.as_slice());
    }
    PolyMatrix::from_raw(rows, cols, m.lag_min(), out)
}

/// Dominant off-diagonal coefficient `(row, col, lag, |value|)`; ties go to the
/// smallest lag, then row, then column.
fn sbr2_pivot(r: &PolyMatrix) -> Option<(usize, usize, i64, f64)> {
    let n = r.rows();
    let mut best: Option<(usize, usize, i64, f64)> = None;
    for i in 0..r.num_lags() {
        let tau = r.lag_min() + i as i64;
        let sl = r.slice(tau).unwrap();
        for row in 0..n {
            for col in 0..n {
                if row == col {
                    continue;
                }
                let m = sl[row * n + col].norm();
                if best.map_or(true, |b| m > b.3) {
                    best = Some((row, col, tau, m));
                }
            }
        }
    }
    best
}

/// Column and lag with the largest off-diagonal column energy `(col, lag, ‖·‖)`.
fn smd_pivot(r: &PolyMatrix) -> Option<(usize, i64, f64)> {
    let n = r.rows();
    let mut best: Option<(usize, i64, f64)> = None;
    for i in 0..r.num_lags() {
        let tau = r.lag_min() + i as i64;
        let sl = r.slice(tau).unwrap();
        for col in 0..n {
            let e: f64 = (0..n).filter(|&row| row != col).map(|row| sl[row * n + col].norm_sqr()).sum();
            if best.map_or(true, |b| e > b.2) {
                best = Some((col, tau, e));
            }
        }
    }
    best.map(|(c, t, e)| (c, t, e.sqrt()))
}

fn validate_input(r: &PolyMatrix) -> Result<()> {
    if !r.is_square() {
        return Err(Error::NotSquare {
            rows: r.rows(),
            cols: r.cols(),
        });
    }
    if !r.is_finite() {
        return Err(Error::NonFinite);
    }
    let deviation = r.para_hermitian_defect();
    if deviation > 1e-8 {
        return Err(Error::NotParaHermitian { deviation });
    }
    Ok(())
}

/// Decompose `R(z) ≈ Q(z)·A(z)·Q̃(z)`.
pub fn decompose(r: &PolyMatrix, params: &PevdParams) -> Result<PevdResult> {
    params.validate()?;
    validate_input(r)?;
    let n = r.rows();
    let norm = r.fro_norm();
    let stop = params.stop_threshold * norm;

    let mut work = r.clone();
    let mut h = PolyMatrix::identity(n);
    let mut trace = vec![TraceEntry {
        iteration: 0,
        off_diag_energy: work.off_diag_energy()?,
        zero_lag_diag_energy: zero_lag_diag_energy(&work),
        q_order: 0,
        a_order: order(&work),
    }];
    let mut iterations_run = 0;

    for it in 1..=params.max_iterations {
        match params.algorithm {
            Algorithm::Sbr2 => {
                let Some((row, col, tau, mag)) = sbr2_pivot(&work) else { break };
                if mag <= stop {
                    break;
                }
                // Rotate on the pair (j, k) with j < k; the mirror coefficient
                // (k, j, −τ) has the same magnitude.
                let (j, k, t) = if row < col { (row, col, tau) } else { (col, row, -tau) };
                work = delay_index(&work, k, t, true);
                h = delay_index(&h, k, t, false);
                let b = work.get(0, j, k);
                let rot = Rotation::annihilating(j, k, work.get(0, j, j).re, work.get(0, k, k).re, b);
                rotate_similarity(&mut work, &rot);
                rotate_rows(&mut h, &rot);
            }
            Algorithm::Smd => {
                let Some((col, tau, mag)) = smd_pivot(&work) else { break };
                if mag <= stop {
                    break;
                }
                work = delay_index(&work, col, tau, true);
                h = delay_index(&h, col, tau, false);
                let (_, u) = hermitian_eig(&work.slice_mat(0));
                let uh = u.adjoint();
                work = transform_slices(&work, &uh, true);
                h = transform_slices(&h, &uh, false);
            }
        }
        work.canonicalize();
        h.canonicalize();
        if params.trim_threshold > 0.0 {
            work = work.trim(params.trim_threshold);
            h = h.trim(params.trim_threshold);
        }
        iterations_run = it;
        trace.push(TraceEntry {
            iteration: it,
            off_diag_energy: work.off_diag_energy()?,
            zero_lag_diag_energy: zero_lag_diag_energy(&work),
            q_order: order(&h),
            a_order: order(&work),
        });
    }

    // Order the eigenvalues by descending zero-lag power.
    let mut perm: Vec<usize> = (0..n).collect();
    perm.sort_by(|&a, &b| work.get(0, b, b).re.total_cmp(&work.get(0, a, a).re));
    if perm.iter().enumerate().any(|(i, &p)| i != p) {
        let p = CMat::from_fn(n, n, |r, c| {
            if perm[r] == c {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        work = transform_slices(&work, &p, true);
        h = transform_slices(&h, &p, false);
    }

    Ok(PevdResult {
        q: h.parah(),
        a: work,
        trace,
        iterations_run,
    })
}

/// Total violation of pointwise descending order of the eigenvalue spectra:
/// `Σ_Ω Σ_i max(0, A_{i+1}(e^{jΩ}) − A_i(e^{jΩ}))` on a uniform grid.
pub fn spectral_majorization_defect(a: &PolyMatrix, grid_size: usize) -> Result<f64> {
    let off = a.off_diag_energy()?;
    let scale = a.energy();
    if off > 1e-20 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotDiagonal { energy: off });
    }
    let diag = a.diagonal();
    let mut defect = 0.0;
    for om in omega_grid(grid_size) {
        let psd: Vec<f64> = diag.iter().map(|d| d.eval(om).re).collect();
        defect += psd.windows(2).map(|w| (w[1] - w[0]).max(0.0)).sum::<f64>();
    }
    Ok(defect)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polymat::LaurentPoly;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_g(rows: usize, cols: usize, order: usize, seed: u64) -> PolyMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        PolyMatrix::from_fn(rows, cols, 0, order as i64, |_, _, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    fn para_hermitian(rows: usize, cols: usize, order: usize, seed: u64) -> PolyMatrix {
        let g = random_g(rows, cols, order, seed);
        &g * &g.parah()
    }

    #[test]
    fn identity_is_fixed_point() {
        let res = decompose(&PolyMatrix::identity(3), &PevdParams::default()).unwrap();
        assert_eq!(res.q, PolyMatrix::identity(3));
        assert_eq!(res.a, PolyMatrix::identity(3));
        assert!(res.off_diag_trace().iter().all(|&e| e == 0.0));
        assert_eq!(res.iterations_run, 0);
    }

    #[test]
    fn ordered_diagonal_needs_no_rotation() {
        let r = PolyMatrix::from_diagonal(&[
            LaurentPoly::from_real(0, &[3.0]),
            LaurentPoly::from_real(0, &[2.0]),
            LaurentPoly::from_real(0, &[1.0]),
        ]);
        for alg in [Algorithm::Sbr2, Algorithm::Smd] {
            let res = decompose(&r, &PevdParams::new(alg, 10)).unwrap();
            assert_eq!(res.a, r);
            assert_eq!(res.q, PolyMatrix::identity(3));
        }
    }

    #[test]
    fn rejects_bad_input() {
        let p = PevdParams::default();
        assert!(matches!(decompose(&PolyMatrix::zeros(2, 3), &p), Err(Error::NotSquare { .. })));
        let g = random_g(2, 2, 2, 1);
        assert!(matches!(decompose(&g, &p), Err(Error::NotParaHermitian { .. })));
        let bad = PolyMatrix::identity(2).scale(Complex64::new(f64::NAN, 0.0));
        assert!(matches!(decompose(&bad, &p), Err(Error::NonFinite)));
        let zero_iter = PevdParams { max_iterations: 0, ..p };
        assert!(decompose(&PolyMatrix::identity(2), &zero_iter).is_err());
    }

    #[test]
    fn reconstructs_random_3x3() {
        let r = para_hermitian(3, 6, 4, 42);
        let initial = r.off_diag_energy().unwrap() / r.energy();
        for alg in [Algorithm::Sbr2, Algorithm::Smd] {
            let res = decompose(&r, &PevdParams::new(alg, 30)).unwrap();
            let err = (&r - &res.reconstruct()).fro_norm() / r.fro_norm();
            assert!(err <= 1e-8, "{alg}: reconstruction {err:e}");
            let ratio = res.a.off_diag_energy().unwrap() / r.energy();
            assert!(ratio < 0.1 * initial, "{alg}: off-diagonal ratio {ratio:e} from {initial:e}");
        }
    }

    #[test]
    fn more_iterations_diagonalize_further() {
        let r = para_hermitian(3, 6, 4, 42);
        for alg in [Algorithm::Sbr2, Algorithm::Smd] {
            let short = decompose(&r, &PevdParams::new(alg, 30)).unwrap();
            let long = decompose(&r, &PevdParams::new(alg, 200)).unwrap();
            let ratio = |x: &PevdResult| x.a.off_diag_energy().unwrap() / r.energy();
            assert!(ratio(&long) < ratio(&short));
            assert!(ratio(&long) <= 1e-3, "{alg}: {:e}", ratio(&long));
        }
    }

    #[test]
    fn smd_beats_sbr2() {
        let mut violations = 0;
        for seed in 0..10 {
            let r = para_hermitian(4, 4, 2, 500 + seed);
            let e = |alg| decompose(&r, &PevdParams::new(alg, 30)).unwrap().a.off_diag_energy().unwrap();
            if e(Algorithm::Smd) > e(Algorithm::Sbr2) {
                violations += 1;
            }
        }
        assert!(violations <= 1, "{violations}");
    }

    #[test]
    fn paraunitary_and_energy_preserving() {
        let r = para_hermitian(4, 4, 3, 7);
        for alg in [Algorithm::Sbr2, Algorithm::Smd] {
            let res = decompose(&r, &PevdParams::new(alg, 25)).unwrap();
            let qq = &res.q * &res.q.parah();
            assert!((&qq - &PolyMatrix::identity(4)).fro_norm() <= 1e-8);
            let qq2 = &res.q.parah() * &res.q;
            assert!((&qq2 - &PolyMatrix::identity(4)).fro_norm() <= 1e-8);
            let rel = (res.a.energy() - r.energy()).abs() / r.energy();
            assert!(rel <= 1e-8);
            for d in res.a.diagonal() {
                assert!(d.symmetry_defect() <= 1e-8);
            }
        }
    }

    #[test]
    fn zero_lag_diagonal_energy_is_non_decreasing() {
        for seed in 0..5 {
            let r = para_hermitian(4, 5, 3, 100 + seed);
            for alg in [Algorithm::Sbr2, Algorithm::Smd] {
                let res = decompose(&r, &PevdParams::new(alg, 30)).unwrap();
                for w in res.trace.windows(2) {
                    let (a, b) = (w[0].zero_lag_diag_energy, w[1].zero_lag_diag_energy);
                    assert!(b >= a * (1.0 - 1e-12), "{alg} seed {seed}: {a} -> {b}");
                }
                let tr = res.off_diag_trace();
                assert!(tr.last().unwrap() < &tr[0]);
            }
        }
    }

    #[test]
    fn trimming_shortens_q() {
        let r = para_hermitian(4, 4, 4, 3);
        let full = decompose(&r, &PevdParams::new(Algorithm::Sbr2, 30)).unwrap();
        let trimmed = decompose(
            &r,
            &PevdParams {
                trim_threshold: 1e-3,
                ..PevdParams::new(Algorithm::Sbr2, 30)
            },
        )
        .unwrap();
        assert!(trimmed.q.num_lags() <= full.q.num_lags());
    }

    #[test]
    fn majorization_defect_examples() {
        let d = |v: &[f64]| PolyMatrix::from_diagonal(&v.iter().map(|&x| LaurentPoly::from_real(0, &[x])).collect::<Vec<_>>());
        assert_eq!(spectral_majorization_defect(&d(&[3.0, 2.0, 1.0]), 16).unwrap(), 0.0);
        assert!((spectral_majorization_defect(&d(&[1.0, 2.0]), 16).unwrap() - 16.0).abs() < 1e-12);
        let full = para_hermitian(2, 2, 1, 5);
        assert!(matches!(spectral_majorization_defect(&full, 8), Err(Error::NotDiagonal { .. })));
    }

    #[test]
    fn sbr2_output_is_nearly_majorized() {
        let r = para_hermitian(4, 4, 2, 11);
        let res = decompose(&r, &PevdParams::new(Algorithm::Sbr2, 60)).unwrap();
        let a = res.eigenvalues();
        let grid = 64;
        let defect = spectral_majorization_defect(&a, grid).unwrap();
        let mass: f64 = omega_grid(grid)
            .map(|om| a.diagonal().iter().map(|d| d.eval(om).re).sum::<f64>())
            .sum();
        assert!(defect <= 0.05 * mass, "defect {defect} vs mass {mass}");
    }

    #[test]
    fn trace_csv_has_header_and_rows() {
        let r = para_hermitian(3, 3, 2, 9);
        let res = decompose(&r, &PevdParams::new(Algorithm::Smd, 5)).unwrap();
        let csv = res.trace_csv();
        assert_eq!(csv.lines().count(), 1 + res.trace.len());
        assert!(csv.starts_with("iteration,off_diag_energy,q_order,a_order"));
    }
}
