//! Polyphase composite channel responses and banded channel matrices.
//!
//! A composite block `G_{i,k}` (2×4, real) maps the polyphase streams
//! `[R0, R1, I0, I1]` of source subcarrier `i` onto the AFB outputs
//! `[r^R, r^I]` of destination subcarrier `k`. Subcarrier indices wrap
//! modulo `M`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::polymat::{LaurentPoly, PolyMatrix};
use crate::tmux::{branch_filters, Demodulated, OqamFrame, TmuxConfig};

/// Magnitude, relative to the block peak, below which boundary lags of a
/// composite block are dropped.
pub const SUPPORT_EPS: f64 = 1e-12;

/// `x[n]` sampled at `n = l·M − offset` for every `l` it covers.
fn decimate(x: &LaurentPoly, m: i64, offset: i64, part: fn(Complex64) -> f64) -> (i64, Vec<f64>) {
    if x.is_zero() {
        return (0, Vec::new());
    }
    let lo = (x.lag_min() + offset).div_euclid(m);
    let hi = (x.lag_max() + offset).div_euclid(m) + 1;
    (lo, (lo..=hi).map(|l| part(x.get(l * m - offset))).collect())
}

/// Drop boundary lag slices whose entries are all below `eps` × peak.
fn trim_support(g: PolyMatrix, eps: f64) -> PolyMatrix {
    let peak = g.raw().iter().map(|c| c.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return PolyMatrix::zeros(g.rows(), g.cols());
    }
    let floor = eps * peak;
    let live = |tau: i64| g.slice(tau).unwrap().iter().any(|c| c.norm() > floor);
    let lo = (g.lag_min()..=g.lag_max()).find(|&t| live(t)).unwrap();
    let hi = (g.lag_min()..=g.lag_max()).rev().find(|&t| live(t)).unwrap();
    PolyMatrix::from_fn(g.rows(), g.cols(), lo, hi, |t, r, c| g.get(t, r, c))
}

/// Composite block `G_{i,k}` from source `i` to destination `k`.
pub fn composite_block(cfg: &TmuxConfig, h: &LaurentPoly, i: i64, k: i64) -> Result<PolyMatrix> {
    let src = branch_filters(cfg, i)?;
    let dst = branch_filters(cfg, k)?;
    let m = cfg.subcarriers() as i64;
    let half = cfg.half() as i64;
    let re = |c: Complex64| c.re;
    let im = |c: Complex64| c.im;

    let through = |p: &LaurentPoly, q: &LaurentPoly| p.mul(h).mul(q);
    let rr = through(&src.p_real, &dst.q_real);
    let ri = through(&src.p_real, &dst.q_imag);
    let ir = through(&src.p_imag, &dst.q_real);
    let ii = through(&src.p_imag, &dst.q_imag);

    // Columns R0, R1, I0, I1; rows r^R, r^I.
    let entries: [(&LaurentPoly, i64, fn(Complex64) -> f64); 8] = [
        (&rr, 0, re),
        (&rr, half, re),
        (&ir, 0, re),
        (&ir, half, re),
        (&ri, 0, im),
        (&ri, half, im),
        (&ii, 0, im),
        (&ii, half, im),
    ];
    let sampled: Vec<(i64, Vec<f64>)> = entries.iter().map(|&(x, off, part)| decimate(x, m, off, part)).collect();
    let lo = sampled.iter().filter(|s| !s.1.is_empty()).map(|s| s.0).min().unwrap_or(0);
    let hi = sampled
        .iter()
        .filter(|s| !s.1.is_empty())
        .map(|s| s.0 + s.1.len() as i64 - 1)
        .max()
        .unwrap_or(-1);
    if hi < lo {
        return Ok(PolyMatrix::zeros(2, 4));
    }
    let g = PolyMatrix::from_fn(2, 4, lo, hi, |t, r, c| {
        let (start, v) = &sampled[r * 4 + c];
        let idx = t - start;
        if idx < 0 || idx >= v.len() as i64 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(v[idx as usize], 0.0)
        }
    });
    Ok(trim_support(g, SUPPORT_EPS))
}

/// Composite blocks for every destination `k` and every source within
/// `reach` subcarriers of it, computed once and shared.
#[derive(Clone, Debug)]
pub struct BlockTable {
    m: usize,
    reach: usize,
    /// `blocks[k][d + reach]` holds `G_{k+d, k}`.
    blocks: Vec<Vec<PolyMatrix>>,
}

impl BlockTable {
    pub fn new(cfg: &TmuxConfig, h: &LaurentPoly, reach: usize) -> Result<Self> {
        let m = cfg.subcarriers();
        if 2 * reach + 1 > m {
            return Err(Error::invalid("reach", format!("{reach} exceeds M = {m}")));
        }
        let blocks = (0..m)
            .into_par_iter()
            .map(|k| {
                (-(reach as i64)..=reach as i64)
                    .map(|d| composite_block(cfg, h, cfg.wrap(k as i64 + d) as i64, k as i64))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { m, reach, blocks })
    }

    pub fn subcarriers(&self) -> usize {
        self.m
    }

    pub fn reach(&self) -> usize {
        self.reach
    }

    /// `G_{i,k}` for `|i − k| ≤ reach` (modulo `M`).
    pub fn get(&self, i: i64, k: i64) -> Option<&PolyMatrix> {
        let m = self.m as i64;
        let k = k.rem_euclid(m);
        let mut d = (i - k).rem_euclid(m);
        if d > m / 2 {
            d -= m;
        }
        if d.unsigned_abs() as usize > self.reach {
            return None;
        }
        Some(&self.blocks[k as usize][(d + self.reach as i64) as usize])
    }

    /// Channel matrix over subcarriers `k − span..=k + span` with blocks
    /// farther than one subcarrier from the diagonal set to zero.
    pub fn banded(&self, k: i64, span: usize) -> Result<PolyMatrix> {
        if self.reach < 1 {
            return Err(Error::invalid("reach", "banded matrices need neighbouring blocks"));
        }
        let n = 2 * span + 1;
        let mut g = PolyMatrix::zeros(2 * n, 4 * n);
        for rb in 0..n {
            for cb in 0..n {
                if rb.abs_diff(cb) > 1 {
                    continue;
                }
                let dst = k - span as i64 + rb as i64;
                let src = k - span as i64 + cb as i64;
                let block = self.get(src, dst).expect("within reach");
                g.set_block(2 * rb, 4 * cb, block);
            }
        }
        Ok(g.canonical())
    }
}

/// The 6×12 banded channel matrix for subcarrier `k`.
pub fn build_banded(cfg: &TmuxConfig, h: &LaurentPoly, k: i64) -> Result<PolyMatrix> {
    check_center(cfg, k)?;
    BlockTable::new(cfg, h, 1)?.banded(k, 1)
}

/// The 10×20 conventional channel matrix for subcarrier `k`.
pub fn build_conventional(cfg: &TmuxConfig, h: &LaurentPoly, k: i64) -> Result<PolyMatrix> {
    check_center(cfg, k)?;
    BlockTable::new(cfg, h, 1)?.banded(k, 2)
}

fn check_center(cfg: &TmuxConfig, k: i64) -> Result<()> {
    if k < 0 || k >= cfg.subcarriers() as i64 {
        return Err(Error::SubcarrierOutOfRange {
            index: k,
            m: cfg.subcarriers(),
        });
    }
    Ok(())
}

/// Matrix-model AFB outputs `r_k[l] = Σ_i G_{i,k} ⊗ s_i[l]` for
/// `0 ≤ l < num_symbols`, summing over every source subcarrier.
pub fn simulate_unified(
    cfg: &TmuxConfig,
    h: &LaurentPoly,
    frames: &[OqamFrame],
    num_symbols: usize,
) -> Result<Vec<Demodulated>> {
    let m = cfg.subcarriers();
    if frames.len() != m {
        return Err(Error::LengthMismatch {
            left: frames.len(),
            right: m,
        });
    }
    let streams: Vec<[Vec<f64>; 4]> = frames.iter().map(OqamFrame::polyphase_streams).collect();
    (0..m)
        .into_par_iter()
        .map(|k| {
            let mut out = Demodulated {
                real: vec![0.0; num_symbols],
                imag: vec![0.0; num_symbols],
            };
            for (i, s) in streams.iter().enumerate() {
                if s.iter().all(|x| x.iter().all(|&v| v == 0.0)) {
                    continue;
                }
                let g = composite_block(cfg, h, i as i64, k as i64)?;
                for (tau, _) in (g.lag_min()..=g.lag_max()).map(|t| (t, ())) {
                    for (row, dst) in [&mut out.real, &mut out.imag].into_iter().enumerate() {
                        for (col, stream) in s.iter().enumerate() {
                            let coef = g.get(tau, row, col).re;
                            if coef == 0.0 {
                                continue;
                            }
                            for (l, y) in dst.iter_mut().enumerate() {
                                let src = l as i64 - tau;
                                if src >= 0 && (src as usize) < stream.len() {
                                    *y += coef * stream[src as usize];
                                }
                            }
                        }
                    }
                }
            }
            Ok(out)
        })
        .collect()
}
