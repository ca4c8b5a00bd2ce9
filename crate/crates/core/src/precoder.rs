//! Pseudo-inverse precoders, stream precoding and adaptive truncation.
//!
//! The pseudo-inverse of a wide channel matrix `G` is built from the PEVD of
//! `R = G·G̃ ≈ Q·A·Q̃` as `G⁻¹ = G̃·Q·A⁻¹·Q̃`. A precoder keeps the two
//! columns of `G⁻¹` that address the centre subcarrier.

use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chanmat::BlockTable;
use crate::error::{Error, Result};
use crate::pevd::{decompose, Algorithm, PevdParams};
use crate::polyinv::{invert_diag, InversionParams};
use crate::polymat::{LaurentPoly, PolyMatrix};
use crate::tmux::{OqamFrame, TmuxConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrecoderKind {
    /// 12×2 precoder from the 6×12 banded matrix.
    Proposed,
    /// 20×2 precoder from the 10×20 matrix spanning `k − 2..=k + 2`.
    Conventional,
}

impl PrecoderKind {
    /// Subcarriers on each side of the centre covered by the channel matrix.
    pub fn span(self) -> usize {
        match self {
            PrecoderKind::Proposed => 1,
            PrecoderKind::Conventional => 2,
        }
    }

    /// Channel matrix dimensions `(rows, cols)`.
    pub fn channel_dims(self) -> (usize, usize) {
        let n = 2 * self.span() + 1;
        (2 * n, 4 * n)
    }
}

impl fmt::Display for PrecoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PrecoderKind::Proposed => "proposed",
            PrecoderKind::Conventional => "conventional",
        })
    }
}

impl std::str::FromStr for PrecoderKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "proposed" => Ok(PrecoderKind::Proposed),
            "conventional" => Ok(PrecoderKind::Conventional),
            other => Err(Error::invalid("precoder", format!("unknown precoder kind `{other}`"))),
        }
    }
}

/// Design settings a precoder was built with.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub algorithm: Algorithm,
    pub iterations: usize,
    pub trim: f64,
    pub delay: usize,
}

impl Provenance {
    pub fn new(pevd: &PevdParams, inv: &InversionParams) -> Self {
        Self {
            algorithm: pevd.algorithm,
            iterations: pevd.max_iterations,
            trim: pevd.trim_threshold,
            delay: inv.delay,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Precoder {
    pub k: usize,
    pub kind: PrecoderKind,
    /// `(4·(2·span + 1)) × 2` real-valued filter matrix.
    pub p: PolyMatrix,
    pub provenance: Provenance,
    pub truncated: bool,
}

impl Precoder {
    pub fn retained_taps(&self) -> usize {
        self.p.entry_support_total()
    }

    /// Row block of four polyphase streams addressed to subcarrier `k + offset`.
    pub fn block_for(&self, offset: i64) -> Option<PolyMatrix> {
        let span = self.kind.span() as i64;
        if offset.abs() > span {
            return None;
        }
        let b = (offset + span) as usize;
        Some(self.p.block(4 * b, 0, 4, 2))
    }
}

/// Pseudo-inverse `G̃·Q·A⁻¹·Q̃` of a wide channel matrix.
pub fn pseudo_inverse(g: &PolyMatrix, pevd: &PevdParams, inv: &InversionParams) -> Result<PolyMatrix> {
    let gt = g.parah();
    let r = g.try_mul(&gt)?;
    let dec = decompose(&r, pevd)?;
    let a_inv = invert_diag(&dec.eigenvalues(), inv)?;
    let inner = dec.q.try_mul(&a_inv)?.try_mul(&dec.q.parah())?;
    Ok(gt.try_mul(&inner)?.canonical())
}

/// The two central columns of `I_n`.
pub fn theta(n: usize) -> Result<PolyMatrix> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::invalid("n", format!("need an even size of at least 2, got {n}")));
    }
    let c = n / 2 - 1;
    Ok(PolyMatrix::identity(n).select_columns(&[c, c + 1]))
}

fn design(g: &PolyMatrix, k: usize, kind: PrecoderKind, pevd: &PevdParams, inv: &InversionParams) -> Result<Precoder> {
    let (rows, cols) = kind.channel_dims();
    if g.dims() != (rows, cols) {
        return Err(Error::DimensionMismatch {
            op: "design",
            left: g.dims(),
            right: (rows, cols),
        });
    }
    let g_inv = pseudo_inverse(g, pevd, inv)?;
    let c = rows / 2 - 1;
    Ok(Precoder {
        k,
        kind,
        p: g_inv.select_columns(&[c, c + 1]).canonical(),
        provenance: Provenance::new(pevd, inv),
        truncated: false,
    })
}

/// Precoder for subcarrier `k` from its 6×12 banded channel matrix.
pub fn design_precoder(g: &PolyMatrix, k: usize, pevd: &PevdParams, inv: &InversionParams) -> Result<Precoder> {
    design(g, k, PrecoderKind::Proposed, pevd, inv)
}

/// Baseline precoder for subcarrier `k` from its 10×20 channel matrix.
pub fn design_conventional(g: &PolyMatrix, k: usize, pevd: &PevdParams, inv: &InversionParams) -> Result<Precoder> {
    design(g, k, PrecoderKind::Conventional, pevd, inv)
}

/// Channel matrices for every subcarrier.
pub fn channel_matrices(cfg: &TmuxConfig, h: &LaurentPoly, kind: PrecoderKind) -> Result<Vec<PolyMatrix>> {
    let table = BlockTable::new(cfg, h, 1)?;
    (0..cfg.subcarriers())
        .into_par_iter()
        .map(|k| table.banded(k as i64, kind.span()))
        .collect()
}

/// Design one precoder per subcarrier in parallel.
pub fn design_all(
    cfg: &TmuxConfig,
    h: &LaurentPoly,
    kind: PrecoderKind,
    pevd: &PevdParams,
    inv: &InversionParams,
) -> Result<Vec<Precoder>> {
    design_from(&channel_matrices(cfg, h, kind)?, kind, pevd, inv)
}

/// Design one precoder per channel matrix, indexed by position.
pub fn design_from(
    mats: &[PolyMatrix],
    kind: PrecoderKind,
    pevd: &PevdParams,
    inv: &InversionParams,
) -> Result<Vec<Precoder>> {
    mats.par_iter()
        .enumerate()
        .map(|(k, g)| design(g, k, kind, pevd, inv))
        .collect()
}

/// Precoded transmit frames. Polyphase index `l` of every frame carries the
/// response to symbol `l − lead`, so receiver output `l + lead` estimates
/// symbol `l` on both branches.
#[derive(Clone, Debug, PartialEq)]
pub struct PrecodedFrames {
    pub frames: Vec<OqamFrame>,
    pub lead: usize,
}

/// Apply per-subcarrier precoders to QAM symbol streams. The real part of
/// each symbol drives the first precoder input and the imaginary part the
/// second; precoder coefficients are used through their real parts.
pub fn precode_stream(precoders: &[Precoder], symbols: &[Vec<Complex64>]) -> Result<PrecodedFrames> {
    let m = symbols.len();
    if precoders.len() != m {
        return Err(Error::MissingPrecoder(precoders.len().min(m)));
    }
    for (k, p) in precoders.iter().enumerate() {
        if p.k != k {
            return Err(Error::MissingPrecoder(k));
        }
    }
    let n = symbols.first().map_or(0, Vec::len);
    if symbols.iter().any(|s| s.len() != n) {
        return Err(Error::RaggedFrames);
    }
    let nonzero = precoders.iter().filter(|p| !p.p.is_zero());
    let lag_min = nonzero.clone().map(|p| p.p.lag_min()).min().unwrap_or(0);
    let lag_max = nonzero.map(|p| p.p.lag_max()).max().unwrap_or(0);
    let lead = (-lag_min).max(0) as usize;
    let len = n + lead + lag_max.max(0) as usize;

    let mut streams = vec![[vec![0.0; len], vec![0.0; len], vec![0.0; len], vec![0.0; len]]; m];
    let contributions: Vec<(usize, [Vec<f64>; 4])> = precoders
        .par_iter()
        .flat_map_iter(|pre| {
            let span = pre.kind.span() as i64;
            let src = &symbols[pre.k];
            (-span..=span).map(move |off| {
                let dst = (pre.k as i64 + off).rem_euclid(m as i64) as usize;
                let row0 = 4 * (off + span) as usize;
                let mut out = [vec![0.0; len], vec![0.0; len], vec![0.0; len], vec![0.0; len]];
                if !pre.p.is_zero() {
                    for tau in pre.p.lag_min()..=pre.p.lag_max() {
                        for (r, o) in out.iter_mut().enumerate() {
                            let cr = pre.p.get(tau, row0 + r, 0).re;
                            let ci = pre.p.get(tau, row0 + r, 1).re;
                            if cr == 0.0 && ci == 0.0 {
                                continue;
                            }
                            let base = lead as i64 + tau;
                            for (l, s) in src.iter().enumerate() {
                                o[(base + l as i64) as usize] += cr * s.re + ci * s.im;
                            }
                        }
                    }
                }
                (dst, out)
            })
        })
        .collect();
    for (dst, c) in contributions {
        for (acc, add) in streams[dst].iter_mut().zip(c) {
            acc.iter_mut().zip(add).for_each(|(a, b)| *a += b);
        }
    }
    Ok(PrecodedFrames {
        frames: streams.iter().map(OqamFrame::from_polyphase_streams).collect(),
        lead,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationParams {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for TruncationParams {
    fn default() -> Self {
        Self { alpha: 0.9, beta: 0.9 }
    }
}

impl TruncationParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::invalid(name, format!("must lie in (0, 1], got {v}")));
            }
        }
        Ok(())
    }
}

/// Window length grown from the peak while the energy ratio stays at or
/// below `limit`. `taps` starts at the peak and runs away from it.
fn grow(taps: &[f64], limit: f64) -> usize {
    let mut len = 1;
    let mut inner = taps[0];
    while len < taps.len() {
        let outer = inner + taps[len];
        if outer == 0.0 || inner / outer > limit {
            break;
        }
        inner = outer;
        len += 1;
    }
    len
}

/// Kept lag window `[first, last]` of one filter.
pub fn truncation_window(p: &LaurentPoly, params: &TruncationParams) -> Result<Option<(i64, i64)>> {
    params.validate()?;
    let Some(peak) = p.peak_lag() else { return Ok(None) };
    let power: Vec<f64> = (p.lag_min()..=p.lag_max()).map(|t| p.get(t).norm_sqr()).collect();
    let at = (peak - p.lag_min()) as usize;
    let forward = &power[at..];
    let backward: Vec<f64> = power[..=at].iter().rev().copied().collect();
    let la = grow(forward, params.alpha) as i64;
    let lb = grow(&backward, params.beta) as i64;
    Ok(Some((peak - lb + 1, peak + la - 1)))
}

/// Adaptive optimum-energy truncation of every precoder filter.
pub fn truncate_precoder(pre: &Precoder, params: &TruncationParams) -> Result<Precoder> {
    params.validate()?;
    if pre.p.is_zero() {
        return Err(Error::EmptyFilter);
    }
    let (rows, cols) = pre.p.dims();
    let mut windows = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            windows.push(truncation_window(&pre.p.entry(r, c), params)?);
        }
    }
    let p = PolyMatrix::from_fn(rows, cols, pre.p.lag_min(), pre.p.lag_max(), |t, r, c| {
        match windows[r * cols + c] {
            Some((lo, hi)) if (lo..=hi).contains(&t) => pre.p.get(t, r, c),
            _ => Complex64::new(0.0, 0.0),
        }
    })
    .canonical();
    Ok(Precoder {
        p,
        truncated: true,
        ..pre.clone()
    })
}

/// `‖T − X‖_F²` after shifting `X` so its largest lag slice sits at lag 0.
fn aligned_deviation(x: &PolyMatrix, target: &PolyMatrix) -> Result<f64> {
    let x = match x.peak_lag() {
        Some(t) if !x.is_zero() => x.shift(-t),
        _ => x.clone(),
    };
    let d = target.try_sub(&x)?;
    Ok(d.energy())
}

/// `‖I − G·G⁻¹‖_F²` with the product's dominant lag aligned to 0.
pub fn frobenius_error(g: &PolyMatrix, g_inv: &PolyMatrix) -> Result<f64> {
    if g_inv.dims() != (g.cols(), g.rows()) {
        return Err(Error::DimensionMismatch {
            op: "frobenius_error",
            left: g.dims(),
            right: g_inv.dims(),
        });
    }
    aligned_deviation(&g.try_mul(g_inv)?, &PolyMatrix::identity(g.rows()))
}

/// `‖Θ − G·P‖_F²` for a precoder, with the same lag alignment.
pub fn precoder_error(g: &PolyMatrix, pre: &Precoder) -> Result<f64> {
    if g.cols() != pre.p.rows() {
        return Err(Error::DimensionMismatch {
            op: "precoder_error",
            left: g.dims(),
            right: pre.p.dims(),
        });
    }
    let real = pre.p.map(|c| Complex64::new(c.re, 0.0));
    aligned_deviation(&g.try_mul(&real)?, &theta(g.rows())?)
}

pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

impl fmt::Display for Precoder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pv = &self.provenance;
        writeln!(
            f,
            "precoder k={} kind={} algorithm={} iterations={} trim={:?} delay={} truncated={}",
            self.k, self.kind, pv.algorithm, pv.iterations, pv.trim, pv.delay, self.truncated
        )?;
        write!(f, "{}", self.p)
    }
}

fn header_value<'a>(tok: Option<&'a str>, key: &str, line: usize) -> Result<&'a str> {
    tok.and_then(|t| t.strip_prefix(key))
        .and_then(|t| t.strip_prefix('='))
        .ok_or_else(|| Error::Parse {
            line,
            reason: format!("expected `{key}=<value>`"),
        })
}

fn parse_field<T: std::str::FromStr>(tok: Option<&str>, key: &str, line: usize) -> Result<T> {
    header_value(tok, key, line)?.parse().map_err(|_| Error::Parse {
        line,
        reason: format!("bad value for `{key}`"),
    })
}

impl Precoder {
    /// Parse one precoder in its [`Display`](fmt::Display) form.
    pub fn parse_lines<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>) -> Result<Self> {
        let (ln, header) = lines.next().ok_or(Error::Parse {
            line: 0,
            reason: "missing precoder header".into(),
        })?;
        let mut toks = header.split_whitespace();
        if toks.next() != Some("precoder") {
            return Err(Error::Parse {
                line: ln,
                reason: format!("bad header `{header}`"),
            });
        }
        let k = parse_field(toks.next(), "k", ln)?;
        let kind: PrecoderKind = header_value(toks.next(), "kind", ln)?.parse()?;
        let algorithm: Algorithm = header_value(toks.next(), "algorithm", ln)?.parse()?;
        let iterations = parse_field(toks.next(), "iterations", ln)?;
        let trim = parse_field(toks.next(), "trim", ln)?;
        let delay = parse_field(toks.next(), "delay", ln)?;
        let truncated = parse_field(toks.next(), "truncated", ln)?;
        let p = PolyMatrix::parse_lines(lines)?;
        let (rows, _) = kind.channel_dims();
        if p.dims() != (2 * rows, 2) {
            return Err(Error::Parse {
                line: ln,
                reason: format!("{kind} precoder must be {}x2, got {}x{}", 2 * rows, p.rows(), p.cols()),
            });
        }
        Ok(Self {
            k,
            kind,
            p,
            provenance: Provenance {
                algorithm,
                iterations,
                trim,
                delay,
            },
            truncated,
        })
    }
}

/// Text export of a precoder set, one block per subcarrier.
pub fn export_precoders(precoders: &[Precoder]) -> String {
    precoders.iter().map(|p| p.to_string()).collect()
}

pub fn import_precoders(text: &str) -> Result<Vec<Precoder>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .peekable();
    let mut out = Vec::new();
    while lines.peek().is_some() {
        out.push(Precoder::parse_lines(&mut lines)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chanmat::{build_banded, build_conventional, simulate_unified};
    use crate::channel::{cd_impulse_response, FiberConfig};
    use crate::linalg::CMat;

    fn params() -> (PevdParams, InversionParams) {
        (PevdParams::new(Algorithm::Sbr2, 30), InversionParams::with_delay(11))
    }

    fn dummy(k: usize, p: PolyMatrix) -> Precoder {
        let (pe, inv) = params();
        Precoder {
            k,
            kind: PrecoderKind::Proposed,
            p,
            provenance: Provenance::new(&pe, &inv),
            truncated: false,
        }
    }

    #[test]
    fn theta_picks_central_columns() {
        let t = theta(6).unwrap();
        assert_eq!(t.dims(), (6, 2));
        assert_eq!(t.get(0, 2, 0), Complex64::new(1.0, 0.0));
        assert_eq!(t.get(0, 3, 1), Complex64::new(1.0, 0.0));
        assert_eq!(t.energy(), 2.0);
        let t = theta(10).unwrap();
        assert_eq!(t.get(0, 4, 0), Complex64::new(1.0, 0.0));
        assert_eq!(t.get(0, 5, 1), Complex64::new(1.0, 0.0));
        assert!(theta(5).is_err());
    }

    #[test]
    fn precoder_is_central_columns_of_pseudo_inverse() {
        let cfg = TmuxConfig::phydyas(16).unwrap();
        let h = cd_impulse_response(&FiberConfig::default()).unwrap();
        let g = build_banded(&cfg, &h, 4).unwrap();
        let (pe, inv) = params();
        let full = pseudo_inverse(&g, &pe, &inv).unwrap();
        let pre = design_precoder(&g, 4, &pe, &inv).unwrap();
        assert_eq!(pre.p.dims(), (12, 2));
        let want = full.select_columns(&[2, 3]).canonical();
        assert!((&pre.p - &want).fro_norm() < 1e-14);
        assert!(design_precoder(&build_conventional(&cfg, &h, 4).unwrap(), 4, &pe, &inv).is_err());
    }

    #[test]
    fn frobenius_error_examples() {
        let a = CMat::from_fn(2, 3, |r, c| Complex64::new((r * 3 + c) as f64 + 1.0, 0.5 * r as f64));
        let g = PolyMatrix::constant(&a);
        assert_eq!(frobenius_error(&g, &PolyMatrix::zeros(3, 2)).unwrap(), 2.0);
        // Right inverse Aᴴ(AAᴴ)⁻¹ of a constant matrix.
        let aah = a.matmul(&a.adjoint());
        let det = aah.get(0, 0) * aah.get(1, 1) - aah.get(0, 1) * aah.get(1, 0);
        let inv = CMat::from_vec(
            2,
            2,
            vec![aah.get(1, 1) / det, -aah.get(0, 1) / det, -aah.get(1, 0) / det, aah.get(0, 0) / det],
        );
        let right = PolyMatrix::constant(&a.adjoint().matmul(&inv));
        assert!(frobenius_error(&g, &right).unwrap() < 1e-24);
        // A pure common delay is not an error.
        assert!(frobenius_error(&g, &right.shift(3)).unwrap() < 1e-24);
        assert!(frobenius_error(&g, &PolyMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn flat_channel_design_error_is_small() {
        let cfg = TmuxConfig::phydyas(16).unwrap();
        let (pe, inv) = params();
        let g = build_banded(&cfg, &LaurentPoly::delta(0), 3).unwrap();
        let g_inv = pseudo_inverse(&g, &pe, &inv).unwrap();
        let chi = frobenius_error(&g, &g_inv).unwrap();
        assert!(to_db(chi) <= -10.0, "{}", to_db(chi));
    }

    #[test]
    fn cd_channel_errors_are_negative_db() {
        let cfg = TmuxConfig::phydyas(16).unwrap();
        let h = cd_impulse_response(&FiberConfig::default()).unwrap();
        let (pe, inv) = params();
        let mats = channel_matrices(&cfg, &h, PrecoderKind::Proposed).unwrap();
        for g in &mats {
            let chi = frobenius_error(g, &pseudo_inverse(g, &pe, &inv).unwrap()).unwrap();
            assert!(chi < 1.0, "{chi}");
        }
    }

    #[test]
    fn conventional_dimensions() {
        let cfg = TmuxConfig::phydyas(16).unwrap();
        let (pe, inv) = params();
        let g = build_conventional(&cfg, &LaurentPoly::delta(0), 0).unwrap();
        let pre = design_conventional(&g, 0, &pe, &inv).unwrap();
        assert_eq!(pre.p.dims(), (20, 2));
        assert_eq!(pre.kind, PrecoderKind::Conventional);
        assert!(pre.block_for(2).is_some() && pre.block_for(3).is_none());
    }

    fn random_symbols(m: usize, n: usize, seed: u64) -> Vec<Vec<Complex64>> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..m)
            .map(|_| (0..n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect())
            .collect()
    }

    fn random_precoders(m: usize, seed: u64) -> Vec<Precoder> {
        let syms = random_symbols(m, 12 * 2 * 3, seed);
        (0..m)
            .map(|k| dummy(k, PolyMatrix::from_fn(12, 2, -1, 1, |t, r, c| syms[k][((t + 1) as usize * 24) + r * 2 + c])))
            .collect()
    }

    #[test]
    fn precode_zero_and_linear() {
        let m = 8;
        let pre = random_precoders(m, 1);
        let zero = precode_stream(&pre, &vec![vec![Complex64::new(0.0, 0.0); 20]; m]).unwrap();
        assert_eq!(zero.lead, 1);
        assert!(zero.frames.iter().all(|f| f.real.iter().chain(&f.imag).all(|&x| x == 0.0)));

        let x = random_symbols(m, 20, 2);
        let y = random_symbols(m, 20, 3);
        let xy: Vec<Vec<Complex64>> = x.iter().zip(&y).map(|(a, b)| a.iter().zip(b).map(|(u, v)| u + v).collect()).collect();
        let (fx, fy, fxy) = (
            precode_stream(&pre, &x).unwrap(),
            precode_stream(&pre, &y).unwrap(),
            precode_stream(&pre, &xy).unwrap(),
        );
        for k in 0..m {
            for (branch, (a, b)) in [(&fxy.frames[k].real, (&fx.frames[k].real, &fy.frames[k].real)), (&fxy.frames[k].imag, (&fx.frames[k].imag, &fy.frames[k].imag))] {
                for i in 0..branch.len() {
                    assert!((branch[i] - a[i] - b[i]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn precode_block_addressing() {
        // A precoder whose rows are all distinct impulses lets each block be
        // traced to its destination subcarrier.
        let m = 8;
        let k = 0;
        let p = PolyMatrix::from_fn(12, 2, 0, 0, |_, r, c| Complex64::new(if c == 0 { (r + 1) as f64 } else { 0.0 }, 0.0));
        let mut pre: Vec<Precoder> = (0..m).map(|i| dummy(i, PolyMatrix::zeros(12, 2))).collect();
        pre[k] = dummy(k, p);
        let mut syms = vec![vec![Complex64::new(0.0, 0.0); 1]; m];
        syms[k][0] = Complex64::new(1.0, 0.0);
        let out = precode_stream(&pre, &syms).unwrap();
        for (off, dst) in [(-1i64, m - 1), (0, 0), (1, 1)] {
            let s = out.frames[dst].polyphase_streams();
            for (r, stream) in s.iter().enumerate() {
                assert_eq!(stream[0], (4 * (off + 1) as usize + r + 1) as f64, "dst {dst} row {r}");
            }
        }
        assert!(out.frames[4].real.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn precode_rejects_missing_precoder() {
        let pre = random_precoders(4, 5);
        assert!(matches!(
            precode_stream(&pre[..3], &random_symbols(4, 5, 1)),
            Err(Error::MissingPrecoder(_))
        ));
        assert!(matches!(
            precode_stream(&pre, &[vec![Complex64::new(1.0, 0.0); 3], vec![], vec![], vec![]]),
            Err(Error::RaggedFrames)
        ));
    }

    #[test]
    fn single_subcarrier_is_recovered_through_cd() {
        let m = 16;
        let cfg = TmuxConfig::phydyas(m).unwrap();
        let h = cd_impulse_response(&FiberConfig::default()).unwrap();
        let (pe, inv) = params();
        let pre = design_all(&cfg, &h, PrecoderKind::Proposed, &pe, &inv).unwrap();
        let n = 200;
        let k = 5;
        let mut syms = vec![vec![Complex64::new(0.0, 0.0); n]; m];
        let payload = random_symbols(1, n, 9).remove(0);
        let qpsk: Vec<Complex64> = payload.iter().map(|s| Complex64::new(s.re.signum(), s.im.signum()) / 2f64.sqrt()).collect();
        syms[k] = qpsk.clone();
        let tx = precode_stream(&pre, &syms).unwrap();
        let len = tx.frames[0].len() / 2 + 4;
        let rx = simulate_unified(&cfg, &h, &tx.frames, len).unwrap();
        let got: Vec<Complex64> = (0..n).map(|l| Complex64::new(rx[k].real[l + tx.lead], rx[k].imag[l + tx.lead])).collect();
        let err: f64 = got.iter().zip(&qpsk).map(|(a, b)| (a - b).norm_sqr()).sum();
        let evm = 100.0 * (err / n as f64).sqrt();
        assert!(evm <= 5.0, "{evm}");
    }

    #[test]
    fn truncation_of_impulse_is_identity() {
        let p = LaurentPoly::delta(3);
        assert_eq!(truncation_window(&p, &TruncationParams::default()).unwrap(), Some((3, 3)));
        let pre = dummy(0, PolyMatrix::from_fn(12, 2, 3, 3, |_, r, c| Complex64::new(if r == c { 1.0 } else { 0.0 }, 0.0)));
        let t = truncate_precoder(&pre, &TruncationParams::default()).unwrap();
        assert_eq!(t.p, pre.p);
        assert!(t.truncated);
        assert_eq!(t.retained_taps(), 2);
    }

    /// Direct transcription of the window search, one ratio at a time.
    fn reference_window(p: &[f64], lag0: i64, alpha: f64, beta: f64) -> (i64, i64) {
        let e = |a: i64, b: i64| -> f64 { (a..=b).map(|t| p[(t - lag0) as usize].powi(2)).sum() };
        let hi = lag0 + p.len() as i64 - 1;
        let nmax = (0..p.len()).max_by(|&a, &b| p[a].abs().total_cmp(&p[b].abs()).then(b.cmp(&a))).unwrap() as i64 + lag0;
        let mut la = 1;
        while nmax + la <= hi && e(nmax, nmax + la - 1) / e(nmax, nmax + la) <= alpha {
            la += 1;
        }
        let mut lb = 1;
        while nmax - lb >= lag0 && e(nmax - lb + 1, nmax) / e(nmax - lb, nmax) <= beta {
            lb += 1;
        }
        (nmax - lb + 1, nmax + la - 1)
    }

    #[test]
    fn truncation_matches_reference_scan() {
        let taps: Vec<f64> = (-20..=20).map(|n: i32| 0.5f64.powi(n.abs())).collect();
        let p = LaurentPoly::from_real(-20, &taps);
        for (a, b) in [(0.9, 0.9), (0.5, 0.99), (0.99, 0.7), (0.999, 0.999)] {
            let got = truncation_window(&p, &TruncationParams { alpha: a, beta: b }).unwrap().unwrap();
            assert_eq!(got, reference_window(&taps, -20, a, b), "alpha={a} beta={b}");
        }
        assert_eq!(truncation_window(&p, &TruncationParams::default()).unwrap(), Some((-1, 1)));
        let full = truncation_window(&p, &TruncationParams { alpha: 1.0, beta: 1.0 }).unwrap();
        assert_eq!(full, Some((-20, 20)));
        assert!(truncation_window(&p, &TruncationParams { alpha: 0.0, beta: 0.5 }).is_err());
        assert!(truncate_precoder(&dummy(0, PolyMatrix::zeros(12, 2)), &TruncationParams::default()).is_err());
    }

    #[test]
    fn export_round_trip() {
        let pre = random_precoders(3, 11);
        let text = export_precoders(&pre);
        let back = import_precoders(&text).unwrap();
        assert_eq!(back, pre);
        assert!(import_precoders("precoder k=0 kind=other").is_err());
    }
}
