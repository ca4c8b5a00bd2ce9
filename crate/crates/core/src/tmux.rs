//! FBMC/OQAM transmultiplexer.
//!
//! Time origin: sample `n = 0` is the first tap of the synthesis prototype
//! for half-symbol `m = 0`. Half-symbol `m` is launched at `n = m·M/2`.
//! The analysis filters are anti-causal mirrors of the synthesis filters, so
//! the real branch of QAM symbol `l` is read back at symbol index `l` and the
//! imaginary branch at `l + IMAG_DELAY_SYMBOLS`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::polymat::LaurentPoly;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const J: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Symbols by which the imaginary branch trails the real branch after the AFB.
pub const IMAG_DELAY_SYMBOLS: usize = 1;

/// Frequency-domain samples of the K = 4 PHYDYAS design.
const PHYDYAS_K4: [f64; 4] = [1.0, 0.971_959_83, FRAC_1_SQRT_2, 0.235_146_95];

/// Real unit-energy PHYDYAS prototype of length `K·M`.
///
/// Tap 0 is zero and the rest is symmetric about `K·M/2`, so
/// `u[n] = u[K·M − n]` for `1 ≤ n < K·M`.
pub fn phydyas_prototype(m: usize, overlap: usize) -> Result<Vec<f64>> {
    if overlap != 4 {
        return Err(Error::UnsupportedOverlap(overlap));
    }
    if m < 2 || !m.is_power_of_two() {
        return Err(Error::InvalidSubcarrierCount(m, 2));
    }
    let len = overlap * m;
    let mut taps: Vec<f64> = (0..len)
        .map(|n| {
            if n == 0 {
                return 0.0;
            }
            let arg = 2.0 * PI * n as f64 / len as f64;
            1.0 + 2.0
                * PHYDYAS_K4
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(k, h)| if k % 2 == 0 { 1.0 } else { -1.0 } * h * (k as f64 * arg).cos())
                    .sum::<f64>()
        })
        .collect();
    let norm = taps.iter().map(|x| x * x).sum::<f64>().sqrt();
    taps.iter_mut().for_each(|x| *x /= norm);
    Ok(taps)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TmuxConfig {
    m: usize,
    overlap: usize,
    taps: Vec<f64>,
}

impl TmuxConfig {
    /// PHYDYAS transmultiplexer with `m` subcarriers and overlap factor 4.
    pub fn phydyas(m: usize) -> Result<Self> {
        Self::new(m, 4)
    }

    pub fn new(m: usize, overlap: usize) -> Result<Self> {
        let taps = phydyas_prototype(m, overlap)?;
        Self::with_prototype(m, overlap, taps)
    }

    /// Transmultiplexer with caller-supplied prototype taps.
    pub fn with_prototype(m: usize, overlap: usize, taps: Vec<f64>) -> Result<Self> {
        // Indices wrap modulo M, and the branch filters are M-periodic in the
        // index only when 4 divides M.
        if m < 4 || !m.is_power_of_two() {
            return Err(Error::InvalidSubcarrierCount(m, 4));
        }
        if taps.is_empty() {
            return Err(Error::EmptyFilter);
        }
        if taps.len() != overlap * m {
            return Err(Error::LengthMismatch {
                left: taps.len(),
                right: overlap * m,
            });
        }
        Ok(Self { m, overlap, taps })
    }

    pub fn subcarriers(&self) -> usize {
        self.m
    }

    pub fn overlap(&self) -> usize {
        self.overlap
    }

    pub fn prototype(&self) -> &[f64] {
        &self.taps
    }

    pub fn half(&self) -> usize {
        self.m / 2
    }

    /// Map a signed subcarrier index onto `0..M`.
    pub fn wrap(&self, i: i64) -> usize {
        i.rem_euclid(self.m as i64) as usize
    }

    fn check_index(&self, i: i64) -> Result<usize> {
        let m = self.m as i64;
        if i < -m / 2 || i >= m {
            return Err(Error::SubcarrierOutOfRange { index: i, m: self.m });
        }
        Ok(self.wrap(i))
    }

    /// `e^{j2πin/M}` for wrapped index `i`.
    fn carrier(&self, i: usize, n: i64) -> Complex64 {
        let phase = (i as i64 * n).rem_euclid(self.m as i64) as f64;
        Complex64::from_polar(1.0, 2.0 * PI * phase / self.m as f64)
    }
}

/// `j^e` for any integer exponent.
pub fn j_pow(e: i64) -> Complex64 {
    match e.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => J,
        2 => Complex64::new(-1.0, 0.0),
        _ => -J,
    }
}

/// Real and imaginary OQAM branches of one subcarrier at twice the QAM rate.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OqamFrame {
    pub real: Vec<f64>,
    pub imag: Vec<f64>,
}

impl OqamFrame {
    pub fn zeros(len: usize) -> Self {
        Self {
            real: vec![0.0; len],
            imag: vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.real.len()
    }

    pub fn is_empty(&self) -> bool {
        self.real.is_empty()
    }

    /// Polyphase component `phase ∈ {0, 1}` of a branch: `s[2l + phase]`.
    pub fn polyphase(branch: &[f64], phase: usize) -> Vec<f64> {
        branch.iter().skip(phase).step_by(2).copied().collect()
    }

    /// Interleave two polyphase components back into one branch.
    pub fn interleave(even: &[f64], odd: &[f64]) -> Vec<f64> {
        let len = 2 * even.len().max(odd.len());
        (0..len)
            .map(|m| {
                let src = if m % 2 == 0 { even } else { odd };
                src.get(m / 2).copied().unwrap_or(0.0)
            })
            .collect()
    }

    /// The four polyphase streams `[R0, R1, I0, I1]`.
    pub fn polyphase_streams(&self) -> [Vec<f64>; 4] {
        [
            Self::polyphase(&self.real, 0),
            Self::polyphase(&self.real, 1),
            Self::polyphase(&self.imag, 0),
            Self::polyphase(&self.imag, 1),
        ]
    }

    pub fn from_polyphase_streams(streams: &[Vec<f64>; 4]) -> Self {
        let mut f = Self {
            real: Self::interleave(&streams[0], &streams[1]),
            imag: Self::interleave(&streams[2], &streams[3]),
        };
        let len = f.real.len().max(f.imag.len());
        f.real.resize(len, 0.0);
        f.imag.resize(len, 0.0);
        f
    }
}

pub fn oqam_stagger(symbols: &[Complex64]) -> OqamFrame {
    let mut f = OqamFrame::zeros(2 * symbols.len());
    for (l, s) in symbols.iter().enumerate() {
        f.real[2 * l] = s.re;
        f.imag[2 * l] = s.im;
    }
    f
}

/// Inverse of [`oqam_stagger`]; odd half-symbols are ignored.
pub fn oqam_destagger(frame: &OqamFrame) -> Vec<Complex64> {
    frame
        .real
        .iter()
        .zip(&frame.imag)
        .step_by(2)
        .map(|(&re, &im)| Complex64::new(re, im))
        .collect()
}

/// Serial complex samples starting at time index `start`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Signal {
    pub start: i64,
    pub samples: Vec<Complex64>,
}

impl Signal {
    pub fn new(start: i64, samples: Vec<Complex64>) -> Self {
        Self { start, samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sample at absolute index `n`, zero outside the stored window.
    pub fn get(&self, n: i64) -> Complex64 {
        let idx = n - self.start;
        if idx < 0 || idx >= self.samples.len() as i64 {
            ZERO
        } else {
            self.samples[idx as usize]
        }
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|x| x.norm_sqr()).sum()
    }

    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            0.0
        } else {
            self.energy() / self.samples.len() as f64
        }
    }

    /// Element-wise sum over the union of both windows.
    pub fn add(&self, other: &Signal) -> Signal {
        if self.is_empty() {
            return other.clone();
        }
        if other.is_empty() {
            return self.clone();
        }
        let start = self.start.min(other.start);
        let end = (self.start + self.len() as i64).max(other.start + other.len() as i64);
        Signal::new(start, (start..end).map(|n| self.get(n) + other.get(n)).collect())
    }
}

/// Synthesis and analysis filters of one subcarrier.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchFilters {
    pub p_real: LaurentPoly,
    pub p_imag: LaurentPoly,
    pub q_real: LaurentPoly,
    pub q_imag: LaurentPoly,
}

pub fn branch_filters(cfg: &TmuxConfig, i: i64) -> Result<BranchFilters> {
    let i = cfg.check_index(i)?;
    let half = cfg.half() as i64;
    let len = cfg.taps.len() as i64;
    let p: Vec<Complex64> = (0..len)
        .map(|n| cfg.taps[n as usize] * j_pow(i as i64) * cfg.carrier(i, n))
        .collect();
    let q: Vec<Complex64> = (-(len - 1)..=0)
        .map(|n| cfg.taps[(-n) as usize] * j_pow(-(i as i64)) * cfg.carrier(i, n))
        .collect();
    let p_real = LaurentPoly::new(0, p);
    let q_real = LaurentPoly::new(-(len - 1), q);
    Ok(BranchFilters {
        p_imag: p_real.shift(half).scale(J),
        q_imag: q_real.shift(half),
        p_real,
        q_real,
    })
}

/// Number of serial samples produced for frames of `frame_len` half-symbols.
pub fn signal_len(cfg: &TmuxConfig, frame_len: usize) -> usize {
    if frame_len == 0 {
        return 0;
    }
    (frame_len - 1) * cfg.half() + cfg.half() + cfg.taps.len()
}

/// Synthesis filter bank: one frame per subcarrier, indexed `0..M`.
pub fn sfb_modulate(cfg: &TmuxConfig, frames: &[OqamFrame]) -> Result<Signal> {
    if frames.len() != cfg.m {
        return Err(Error::LengthMismatch {
            left: frames.len(),
            right: cfg.m,
        });
    }
    let frame_len = frames[0].len();
    if frames.iter().any(|f| f.real.len() != frame_len || f.imag.len() != frame_len) {
        return Err(Error::RaggedFrames);
    }
    let out_len = signal_len(cfg, frame_len);
    let half = cfg.half();
    let filters = (0..cfg.m)
        .map(|i| branch_filters(cfg, i as i64))
        .collect::<Result<Vec<_>>>()?;
    let parts: Vec<Vec<Complex64>> = frames
        .par_iter()
        .zip(filters.par_iter())
        .map(|(frame, f)| {
            let mut acc = vec![ZERO; out_len];
            for (branch, filt) in [(&frame.real, &f.p_real), (&frame.imag, &f.p_imag)] {
                for (mi, &s) in branch.iter().enumerate() {
                    if s == 0.0 {
                        continue;
                    }
                    let base = (mi * half) as i64;
                    for (lag, c) in filt.iter() {
                        acc[(base + lag) as usize] += c * s;
                    }
                }
            }
            acc
        })
        .collect();
    let mut out = vec![ZERO; out_len];
    for part in parts {
        out.iter_mut().zip(part).for_each(|(x, y)| *x += y);
    }
    Ok(Signal::new(0, out))
}

/// AFB output of one subcarrier: `r^R[l]` and `r^I[l]`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Demodulated {
    pub real: Vec<f64>,
    pub imag: Vec<f64>,
}

impl Demodulated {
    /// QAM estimates `r^R[l] + j·r^I[l + imag_delay]` for `l < count`.
    pub fn to_qam(&self, imag_delay: usize, count: usize) -> Vec<Complex64> {
        (0..count)
            .map(|l| {
                let re = self.real.get(l).copied().unwrap_or(0.0);
                let im = self.imag.get(l + imag_delay).copied().unwrap_or(0.0);
                Complex64::new(re, im)
            })
            .collect()
    }
}

/// Analysis filter bank: matched filtering, decimation by `M` and real or
/// imaginary extraction, producing `num_symbols` outputs per subcarrier.
pub fn afb_demodulate(cfg: &TmuxConfig, signal: &Signal, num_symbols: usize) -> Vec<Demodulated> {
    (0..cfg.m)
        .into_par_iter()
        .map(|k| demodulate_one(cfg, signal, k, num_symbols))
        .collect()
}

/// `(y ⊗ q_k^R)[n0]` evaluated directly.
fn matched_output(cfg: &TmuxConfig, signal: &Signal, k: usize, n0: i64) -> Complex64 {
    // (y ⊗ q)[n0] = j^{−k} Σ_t y[n0 + t]·u[t]·e^{−j2πkt/M}
    let mut acc = ZERO;
    for (t, &u) in cfg.taps.iter().enumerate() {
        if u != 0.0 {
            acc += signal.get(n0 + t as i64) * u * cfg.carrier(k, -(t as i64));
        }
    }
    acc * j_pow(-(k as i64))
}

fn demodulate_one(cfg: &TmuxConfig, signal: &Signal, k: usize, num_symbols: usize) -> Demodulated {
    let m = cfg.m as i64;
    let half = cfg.half() as i64;
    let mut out = Demodulated {
        real: Vec::with_capacity(num_symbols),
        imag: Vec::with_capacity(num_symbols),
    };
    for l in 0..num_symbols as i64 {
        out.real.push(matched_output(cfg, signal, k, l * m).re);
        out.imag.push(matched_output(cfg, signal, k, l * m - half).im);
    }
    out
}

/// Symbols carried by frames of `frame_len` half-symbols once the imaginary
/// branch delay is included.
pub fn output_symbols(frame_len: usize) -> usize {
    frame_len.div_ceil(2) + IMAG_DELAY_SYMBOLS
}
