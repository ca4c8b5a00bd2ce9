//! Configurable link experiments, parameter sweeps and design timing.
//!
//! One experiment cell runs
//! map → stagger or precode → SFB → fiber → AWGN → AFB → demap → metrics.
//! Cell `c` of a sweep draws bits and noise from ChaCha8 stream `c` of the
//! configured seed, so cells are reproducible in isolation and in parallel.

use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{add_awgn_with, apply_channel, channel_taps, FiberConfig};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, MetricsReport, Qam};
use crate::pevd::{Algorithm, PevdParams};
use crate::polymat::PolyMatrix;
use crate::polyinv::InversionParams;
use crate::precoder::{
    channel_matrices, design_from, precode_stream, precoder_error, to_db, truncate_precoder, Precoder,
    PrecoderKind, TruncationParams,
};
use crate::tmux::{afb_demodulate, oqam_stagger, sfb_modulate, TmuxConfig, IMAG_DELAY_SYMBOLS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrecoderChoice {
    None,
    Proposed,
    Conventional,
}

impl PrecoderChoice {
    pub fn kind(self) -> Option<PrecoderKind> {
        match self {
            PrecoderChoice::None => None,
            PrecoderChoice::Proposed => Some(PrecoderKind::Proposed),
            PrecoderChoice::Conventional => Some(PrecoderKind::Conventional),
        }
    }
}

impl FromStr for PrecoderChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(PrecoderChoice::None),
            "proposed" => Ok(PrecoderChoice::Proposed),
            "conventional" => Ok(PrecoderChoice::Conventional),
            other => Err(Error::invalid("precoder", format!("unknown precoder `{other}`"))),
        }
    }
}

impl std::fmt::Display for PrecoderChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PrecoderChoice::None => "none",
            PrecoderChoice::Proposed => "proposed",
            PrecoderChoice::Conventional => "conventional",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TruncationMode {
    /// Untrimmed PEVD, untruncated precoder.
    None,
    /// PEVD with per-iteration trimming at `pevd.trim`.
    Mu,
    /// Untrimmed PEVD followed by adaptive α/β truncation.
    Adaptive,
}

impl FromStr for TruncationMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(TruncationMode::None),
            "mu" => Ok(TruncationMode::Mu),
            "adaptive" => Ok(TruncationMode::Adaptive),
            other => Err(Error::invalid("truncation", format!("unknown truncation mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for TruncationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TruncationMode::None => "none",
            TruncationMode::Mu => "mu",
            TruncationMode::Adaptive => "adaptive",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PevdConfig {
    pub algorithm: Algorithm,
    pub iterations: usize,
    /// Trim threshold μ, used when `truncation.mode = "mu"`.
    pub trim: f64,
}

impl Default for PevdConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Sbr2,
            iterations: 30,
            trim: 1e-3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruncationConfig {
    pub mode: TruncationMode,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        Self {
            mode: TruncationMode::None,
            alpha: 0.9,
            beta: 0.9,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InversionConfig {
    pub delay: usize,
    pub regularization: f64,
}

impl Default for InversionConfig {
    fn default() -> Self {
        let p = InversionParams::default();
        Self {
            delay: p.delay,
            regularization: p.regularization,
        }
    }
}

/// Full parameterization of one link experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkConfig {
    pub subcarriers: usize,
    pub overlap: usize,
    pub qam_order: usize,
    /// Per-sample SNR at the receiver input; `inf` disables noise.
    pub snr_db: f64,
    pub precoder: PrecoderChoice,
    /// QAM symbols per cell, spread evenly over the subcarriers.
    pub symbols_per_run: usize,
    pub seed: u64,
    pub fiber: FiberConfig,
    pub pevd: PevdConfig,
    pub inversion: InversionConfig,
    pub truncation: TruncationConfig,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            subcarriers: 16,
            overlap: 4,
            qam_order: 4,
            snr_db: 12.0,
            precoder: PrecoderChoice::Proposed,
            symbols_per_run: 20_000,
            seed: 1,
            fiber: FiberConfig::default(),
            pevd: PevdConfig::default(),
            inversion: InversionConfig::default(),
            truncation: TruncationConfig::default(),
        }
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must be positive and finite, got {v}")))
    }
}

impl LinkConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse {
            line: e
                .span()
                .map(|s| text[..s.start.min(text.len())].lines().count().max(1))
                .unwrap_or(0),
            reason: e.message().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.subcarriers;
        if m < 4 || !m.is_power_of_two() {
            return Err(Error::invalid("subcarriers", format!("must be a power of two >= 4, got {m}")));
        }
        if self.overlap != 4 {
            return Err(Error::invalid("overlap", format!("only 4 is supported, got {}", self.overlap)));
        }
        Qam::new(self.qam_order)?;
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(Error::invalid("snr_db", "must be a number or inf"));
        }
        if self.symbols_per_run == 0 {
            return Err(Error::invalid("symbols_per_run", "must be positive"));
        }
        positive("fiber.dispersion_ps_nm_km", self.fiber.dispersion_ps_nm_km)?;
        positive("fiber.wavelength_nm", self.fiber.wavelength_nm)?;
        positive("fiber.baud_gbd", self.fiber.baud_gbd)?;
        if !(self.fiber.length_km >= 0.0 && self.fiber.length_km.is_finite()) {
            return Err(Error::invalid("fiber.length_km", "must be finite and non-negative"));
        }
        if self.pevd.iterations == 0 {
            return Err(Error::invalid("pevd.iterations", "must be at least 1"));
        }
        if !(self.pevd.trim >= 0.0 && self.pevd.trim < 1.0) {
            return Err(Error::invalid("pevd.trim", "must lie in [0, 1)"));
        }
        if self.truncation.mode == TruncationMode::Mu && self.pevd.trim == 0.0 {
            return Err(Error::invalid("pevd.trim", "mode \"mu\" needs a positive trim threshold"));
        }
        if !(self.inversion.regularization >= 0.0 && self.inversion.regularization.is_finite()) {
            return Err(Error::invalid("inversion.regularization", "must be finite and non-negative"));
        }
        self.truncation_params()
            .validate()
            .map_err(|_| Error::invalid("truncation", "alpha and beta must lie in (0, 1]"))?;
        Ok(())
    }

    pub fn pevd_params(&self) -> PevdParams {
        PevdParams {
            algorithm: self.pevd.algorithm,
            max_iterations: self.pevd.iterations,
            trim_threshold: if self.truncation.mode == TruncationMode::Mu {
                self.pevd.trim
            } else {
                0.0
            },
            stop_threshold: 0.0,
        }
    }

    pub fn inversion_params(&self) -> InversionParams {
        InversionParams {
            delay: self.inversion.delay,
            regularization: self.inversion.regularization,
        }
    }

    pub fn truncation_params(&self) -> TruncationParams {
        TruncationParams {
            alpha: self.truncation.alpha,
            beta: self.truncation.beta,
        }
    }

    pub fn symbols_per_subcarrier(&self) -> usize {
        self.symbols_per_run.div_ceil(self.subcarriers)
    }
}

/// Design-side figures of a precoded cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignSummary {
    pub retained_taps: usize,
    /// `‖Θ − G·P‖²` per subcarrier, in dB.
    pub chi_db: Vec<f64>,
}

impl DesignSummary {
    pub fn median_chi_db(&self) -> f64 {
        median(&self.chi_db)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellResult {
    pub config: LinkConfig,
    pub report: MetricsReport,
    pub design: Option<DesignSummary>,
}

pub fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Precoders for every subcarrier, truncated as configured, with their
/// design summary.
pub fn design_precoders(cfg: &LinkConfig, kind: PrecoderKind) -> Result<(Vec<Precoder>, DesignSummary)> {
    cfg.validate()?;
    let tmux = TmuxConfig::new(cfg.subcarriers, cfg.overlap)?;
    let h = channel_taps(&cfg.fiber)?;
    let mats = channel_matrices(&tmux, &h, kind)?;
    let mut pre = design_from(&mats, kind, &cfg.pevd_params(), &cfg.inversion_params())?;
    if cfg.truncation.mode == TruncationMode::Adaptive {
        let t = cfg.truncation_params();
        pre = pre.iter().map(|p| truncate_precoder(p, &t)).collect::<Result<_>>()?;
    }
    let summary = summarize(&mats, &pre)?;
    Ok((pre, summary))
}

/// Design summary of precoders against their channel matrices.
pub fn summarize(mats: &[PolyMatrix], precoders: &[Precoder]) -> Result<DesignSummary> {
    if mats.len() != precoders.len() {
        return Err(Error::LengthMismatch {
            left: mats.len(),
            right: precoders.len(),
        });
    }
    let chi_db = mats
        .iter()
        .zip(precoders)
        .map(|(g, p)| precoder_error(g, p).map(to_db))
        .collect::<Result<Vec<_>>>()?;
    let retained_taps = precoders.iter().map(Precoder::retained_taps).sum();
    Ok(DesignSummary { retained_taps, chi_db })
}

/// Summary of externally supplied precoders under `cfg`'s channel.
pub fn summarize_for(cfg: &LinkConfig, precoders: &[Precoder]) -> Result<DesignSummary> {
    cfg.validate()?;
    let kind = precoders
        .first()
        .map(|p| p.kind)
        .ok_or(Error::MissingPrecoder(0))?;
    let tmux = TmuxConfig::new(cfg.subcarriers, cfg.overlap)?;
    let h = channel_taps(&cfg.fiber)?;
    summarize(&channel_matrices(&tmux, &h, kind)?, precoders)
}

/// Run one cell on RNG stream `cell`.
pub fn run_cell(cfg: &LinkConfig, cell: u64) -> Result<CellResult> {
    cfg.validate()?;
    let design = match cfg.precoder.kind() {
        Some(kind) => Some(design_precoders(cfg, kind)?),
        None => None,
    };
    run_with_precoders(cfg, cell, design)
}

/// Run one cell with precoders designed beforehand (or none).
pub fn run_with_precoders(
    cfg: &LinkConfig,
    cell: u64,
    design: Option<(Vec<Precoder>, DesignSummary)>,
) -> Result<CellResult> {
    cfg.validate()?;
    let m = cfg.subcarriers;
    let tmux = TmuxConfig::new(m, cfg.overlap)?;
    let h = channel_taps(&cfg.fiber)?;
    let qam = Qam::new(cfg.qam_order)?;
    let n = cfg.symbols_per_subcarrier();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(cell);
    let bits: Vec<u8> = (0..n * m * qam.bits_per_symbol()).map(|_| rng.random_range(0..2u8)).collect();
    let symbols = qam.map(&bits)?;
    let tx: Vec<Vec<Complex64>> = symbols.chunks_exact(n).map(<[Complex64]>::to_vec).collect();

    let (frames, lead, imag_delay) = match &design {
        Some((pre, _)) => {
            let pf = precode_stream(pre, &tx)?;
            (pf.frames, pf.lead, 0)
        }
        None => (tx.iter().map(|s| oqam_stagger(s)).collect(), 0, IMAG_DELAY_SYMBOLS),
    };

    let signal = sfb_modulate(&tmux, &frames)?;
    let received = add_awgn_with(&apply_channel(&signal, &h), cfg.snr_db, &mut rng)?;
    let demod = afb_demodulate(&tmux, &received, n + lead + imag_delay);
    let rx: Vec<Vec<Complex64>> = demod
        .iter()
        .map(|d| {
            (0..n)
                .map(|l| Complex64::new(d.real[l + lead], d.imag[l + lead + imag_delay]))
                .collect()
        })
        .collect();

    Ok(CellResult {
        config: cfg.clone(),
        report: evaluate(&qam, &rx, &tx, &bits)?,
        design: design.map(|d| d.1),
    })
}

/// Single experiment: cell 0 of the configured seed.
pub fn run_experiment(cfg: &LinkConfig) -> Result<CellResult> {
    run_cell(cfg, 0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Snr,
    FiberLength,
    Iterations,
    Delay,
    Subcarriers,
}

impl FromStr for SweepAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "snr" => Ok(SweepAxis::Snr),
            "fiber_length" => Ok(SweepAxis::FiberLength),
            "iterations" => Ok(SweepAxis::Iterations),
            "delay" => Ok(SweepAxis::Delay),
            "subcarriers" => Ok(SweepAxis::Subcarriers),
            other => Err(Error::invalid("axis", format!("unknown sweep axis `{other}`"))),
        }
    }
}

impl std::fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SweepAxis::Snr => "snr",
            SweepAxis::FiberLength => "fiber_length",
            SweepAxis::Iterations => "iterations",
            SweepAxis::Delay => "delay",
            SweepAxis::Subcarriers => "subcarriers",
        })
    }
}

fn as_count(axis: SweepAxis, v: f64) -> Result<usize> {
    if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
        Ok(v as usize)
    } else {
        Err(Error::invalid(axis.to_string(), format!("expected a non-negative integer, got {v}")))
    }
}

/// `base` with the swept parameter set to `v`.
pub fn apply_axis(base: &LinkConfig, axis: SweepAxis, v: f64) -> Result<LinkConfig> {
    let mut c = base.clone();
    match axis {
        SweepAxis::Snr => c.snr_db = v,
        SweepAxis::FiberLength => c.fiber.length_km = v,
        SweepAxis::Iterations => c.pevd.iterations = as_count(axis, v)?,
        SweepAxis::Delay => c.inversion.delay = as_count(axis, v)?,
        SweepAxis::Subcarriers => c.subcarriers = as_count(axis, v)?,
    }
    c.validate()?;
    Ok(c)
}

/// One cell per value, run in parallel and returned in value order.
pub fn sweep(base: &LinkConfig, axis: SweepAxis, values: &[f64]) -> Result<Vec<CellResult>> {
    if values.is_empty() {
        return Err(Error::invalid("values", "sweep needs at least one value"));
    }
    let cfgs = values
        .iter()
        .map(|&v| apply_axis(base, axis, v))
        .collect::<Result<Vec<_>>>()?;
    cfgs.par_iter()
        .enumerate()
        .map(|(i, c)| run_cell(c, i as u64))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchAxis {
    Subcarriers,
    Iterations,
}

impl FromStr for BenchAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "subcarriers" => Ok(BenchAxis::Subcarriers),
            "iterations" => Ok(BenchAxis::Iterations),
            other => Err(Error::invalid("axis", format!("unknown bench axis `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub axis: String,
    pub value: f64,
    pub proposed_s: f64,
    pub conventional_s: f64,
    pub ratio: f64,
}

/// Median wall-clock of `reps` precoder designs for every subcarrier.
pub fn time_design(cfg: &LinkConfig, kind: PrecoderKind, reps: usize) -> Result<f64> {
    let mut times = Vec::with_capacity(reps);
    for _ in 0..reps.max(1) {
        let t0 = Instant::now();
        design_precoders(cfg, kind)?;
        times.push(t0.elapsed().as_secs_f64());
    }
    Ok(median(&times))
}

/// Design timing per cell, proposed against conventional, median of 3.
pub fn bench_design(base: &LinkConfig, axis: BenchAxis, values: &[f64]) -> Result<Vec<BenchRow>> {
    if values.is_empty() {
        return Err(Error::invalid("values", "bench needs at least one value"));
    }
    let sweep_axis = match axis {
        BenchAxis::Subcarriers => SweepAxis::Subcarriers,
        BenchAxis::Iterations => SweepAxis::Iterations,
    };
    values
        .iter()
        .map(|&v| {
            let cfg = apply_axis(base, sweep_axis, v)?;
            let proposed_s = time_design(&cfg, PrecoderKind::Proposed, 3)?;
            let conventional_s = time_design(&cfg, PrecoderKind::Conventional, 3)?;
            Ok(BenchRow {
                axis: sweep_axis.to_string(),
                value: v,
                proposed_s,
                conventional_s,
                ratio: proposed_s / conventional_s,
            })
        })
        .collect()
}

#[derive(Serialize)]
struct CsvRow {
    cell: usize,
    subcarriers: usize,
    overlap: usize,
    qam_order: usize,
    snr_db: f64,
    precoder: String,
    symbols_per_run: usize,
    seed: u64,
    dispersion_ps_nm_km: f64,
    wavelength_nm: f64,
    length_km: f64,
    baud_gbd: f64,
    algorithm: String,
    iterations: usize,
    trim: f64,
    delay: usize,
    regularization: f64,
    truncation: String,
    alpha: f64,
    beta: f64,
    evm_percent: f64,
    worst_subcarrier_evm: f64,
    ber: f64,
    bit_count: usize,
    symbol_count: usize,
    retained_taps: Option<usize>,
    median_chi_db: Option<f64>,
}

fn comment_block(out: &mut String, cfg: &LinkConfig, notes: &[String]) {
    for n in notes {
        let _ = writeln!(out, "# {n}");
    }
    for line in cfg.to_toml().lines() {
        let _ = writeln!(out, "# {line}");
    }
}

fn write_csv<T: Serialize>(out: &mut String, rows: &[T]) {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory CSV");
    }
    out.push_str(std::str::from_utf8(&w.into_inner().expect("in-memory CSV")).expect("UTF-8 CSV"));
}

/// CSV table of experiment cells, headed by the effective configuration as
/// `#` comments.
pub fn results_csv(base: &LinkConfig, notes: &[String], cells: &[CellResult]) -> String {
    let mut out = String::new();
    comment_block(&mut out, base, notes);
    let rows: Vec<CsvRow> = cells
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let k = &c.config;
            CsvRow {
                cell: i,
                subcarriers: k.subcarriers,
                overlap: k.overlap,
                qam_order: k.qam_order,
                snr_db: k.snr_db,
                precoder: k.precoder.to_string(),
                symbols_per_run: k.symbols_per_run,
                seed: k.seed,
                dispersion_ps_nm_km: k.fiber.dispersion_ps_nm_km,
                wavelength_nm: k.fiber.wavelength_nm,
                length_km: k.fiber.length_km,
                baud_gbd: k.fiber.baud_gbd,
                algorithm: k.pevd.algorithm.to_string(),
                iterations: k.pevd.iterations,
                trim: k.pevd.trim,
                delay: k.inversion.delay,
                regularization: k.inversion.regularization,
                truncation: k.truncation.mode.to_string(),
                alpha: k.truncation.alpha,
                beta: k.truncation.beta,
                evm_percent: c.report.evm_percent,
                worst_subcarrier_evm: c.report.worst_subcarrier_evm(),
                ber: c.report.ber,
                bit_count: c.report.bit_count,
                symbol_count: c.report.symbol_count,
                retained_taps: c.design.as_ref().map(|d| d.retained_taps),
                median_chi_db: c.design.as_ref().map(DesignSummary::median_chi_db),
            }
        })
        .collect();
    write_csv(&mut out, &rows);
    out
}

pub fn bench_csv(base: &LinkConfig, rows: &[BenchRow]) -> String {
    let mut out = String::new();
    comment_block(&mut out, base, &["design timing, median of 3".to_string()]);
    write_csv(&mut out, rows);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> LinkConfig {
        LinkConfig {
            subcarriers: 8,
            symbols_per_run: 800,
            ..LinkConfig::default()
        }
    }

    #[test]
    fn toml_round_trip_and_defaults() {
        let cfg = LinkConfig::default();
        assert_eq!(LinkConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        let partial = LinkConfig::from_toml("subcarriers = 32\nsnr_db = inf\n[fiber]\nlength_km = 0.0\n").unwrap();
        assert_eq!(partial.subcarriers, 32);
        assert_eq!(partial.snr_db, f64::INFINITY);
        assert_eq!(partial.fiber.length_km, 0.0);
        assert_eq!(partial.fiber.baud_gbd, 30.0);
    }

    #[test]
    fn validation_names_the_field() {
        let cases = [
            ("subcarriers = 12", "subcarriers"),
            ("qam_order = 8", "qam_order"),
            ("symbols_per_run = 0", "symbols_per_run"),
            ("[fiber]\nbaud_gbd = -1.0", "fiber.baud_gbd"),
            ("[pevd]\niterations = 0", "pevd.iterations"),
            ("[truncation]\nalpha = 1.5", "truncation"),
            ("[inversion]\nregularization = -1.0", "inversion.regularization"),
        ];
        for (text, field) in cases {
            let err = LinkConfig::from_toml(text).unwrap_err().to_string();
            assert!(err.contains(field), "{text}: {err}");
        }
        assert!(matches!(LinkConfig::from_toml("bogus = 1"), Err(Error::Parse { .. })));
    }

    #[test]
    fn back_to_back_is_clean() {
        let cfg = LinkConfig {
            precoder: PrecoderChoice::None,
            snr_db: f64::INFINITY,
            fiber: FiberConfig::with_length_km(0.0),
            ..small()
        };
        let r = run_experiment(&cfg).unwrap();
        assert!(r.report.evm_percent <= 1.0, "{}", r.report.evm_percent);
        assert_eq!(r.report.ber, 0.0);
        assert_eq!(r.report.symbol_count, 800);
        assert!(r.design.is_none());
    }

    #[test]
    fn runs_are_reproducible() {
        let cfg = LinkConfig {
            snr_db: 10.0,
            ..small()
        };
        let a = results_csv(&cfg, &[], &[run_experiment(&cfg).unwrap()]);
        let b = results_csv(&cfg, &[], &[run_experiment(&cfg).unwrap()]);
        assert_eq!(a, b);
        let other = run_cell(&cfg, 1).unwrap();
        assert_ne!(other.report.evm_percent, run_cell(&cfg, 0).unwrap().report.evm_percent);
    }

    #[test]
    fn sweep_shape_and_order() {
        let cfg = LinkConfig {
            precoder: PrecoderChoice::None,
            fiber: FiberConfig::with_length_km(0.0),
            ..small()
        };
        assert!(sweep(&cfg, SweepAxis::Snr, &[]).is_err());
        let cells = sweep(&cfg, SweepAxis::Snr, &[4.0, 8.0, 12.0]).unwrap();
        let snrs: Vec<f64> = cells.iter().map(|c| c.config.snr_db).collect();
        assert_eq!(snrs, vec![4.0, 8.0, 12.0]);
        let csv = results_csv(&cfg, &["axis snr".into()], &cells);
        let data: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data.len(), 4);
        assert!(data[0].starts_with("cell,subcarriers"));
        assert!(apply_axis(&cfg, SweepAxis::Iterations, 2.5).is_err());
        assert!(apply_axis(&cfg, SweepAxis::Subcarriers, 12.0).is_err());
    }

    #[test]
    fn adaptive_truncation_reduces_taps() {
        let cfg = small();
        let (_, full) = design_precoders(&cfg, PrecoderKind::Proposed).unwrap();
        let cut = LinkConfig {
            truncation: TruncationConfig {
                mode: TruncationMode::Adaptive,
                ..TruncationConfig::default()
            },
            ..cfg
        };
        let (pre, trunc) = design_precoders(&cut, PrecoderKind::Proposed).unwrap();
        assert!(pre.iter().all(|p| p.truncated));
        assert!(trunc.retained_taps < full.retained_taps);
        assert_eq!(trunc.chi_db.len(), 8);
    }

    #[test]
    fn bench_has_one_row_per_value() {
        let cfg = LinkConfig {
            pevd: PevdConfig {
                iterations: 3,
                ..PevdConfig::default()
            },
            ..small()
        };
        let rows = bench_design(&cfg, BenchAxis::Iterations, &[1.0, 2.0]).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.proposed_s > 0.0 && r.conventional_s > 0.0));
        let csv = bench_csv(&cfg, &rows);
        assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 3);
    }

    #[test]
    fn median_examples() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }
}
