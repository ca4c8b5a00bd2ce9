//! Chromatic-dispersion fiber channel and AWGN.
//!
//! [`FiberConfig`] is written in engineering units (ps/nm/km, nm, km, Gbaud)
//! and converted to SI on use. The serial sample period is `1 / baud`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polymat::LaurentPoly;
use crate::tmux::Signal;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FiberConfig {
    /// Dispersion coefficient, ps/(nm·km).
    pub dispersion_ps_nm_km: f64,
    /// Carrier wavelength, nm.
    pub wavelength_nm: f64,
    /// Fiber length, km.
    pub length_km: f64,
    /// Serial sample rate, GBd.
    pub baud_gbd: f64,
}

impl Default for FiberConfig {
    fn default() -> Self {
        Self {
            dispersion_ps_nm_km: 17.0,
            wavelength_nm: 1550.0,
            length_km: 80.0,
            baud_gbd: 30.0,
        }
    }
}

impl FiberConfig {
    pub fn with_length_km(length_km: f64) -> Self {
        Self {
            length_km,
            ..Self::default()
        }
    }

    /// Dispersion in s/m².
    pub fn dispersion_si(&self) -> f64 {
        self.dispersion_ps_nm_km * 1e-12 / (1e-9 * 1e3)
    }

    pub fn wavelength_si(&self) -> f64 {
        self.wavelength_nm * 1e-9
    }

    pub fn length_si(&self) -> f64 {
        self.length_km * 1e3
    }

    /// Sample period in seconds.
    pub fn sample_period(&self) -> f64 {
        1.0 / (self.baud_gbd * 1e9)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.dispersion_ps_nm_km, self.wavelength_nm, self.length_km, self.baud_gbd]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::NonFinite);
        }
        if self.length_km < 0.0 {
            return Err(Error::invalid("length_km", "must be non-negative"));
        }
        if self.baud_gbd <= 0.0 {
            return Err(Error::invalid("baud_gbd", "must be positive"));
        }
        if self.wavelength_nm <= 0.0 {
            return Err(Error::invalid("wavelength_nm", "must be positive"));
        }
        Ok(())
    }

    /// `|D|·λ²·L / (c·T²)`.
    fn spread(&self) -> f64 {
        let t = self.sample_period();
        self.dispersion_si().abs() * self.wavelength_si().powi(2) * self.length_si() / (SPEED_OF_LIGHT * t * t)
    }

    /// `N_tap = 2·⌊|D|λ²L / (2cT²)⌋ + 1`.
    pub fn num_taps(&self) -> usize {
        2 * (self.spread() / 2.0).floor() as usize + 1
    }
}

/// CD taps on lags `−⌊N/2⌋..=⌊N/2⌋`.
pub fn cd_impulse_response(cfg: &FiberConfig) -> Result<LaurentPoly> {
    cfg.validate()?;
    if cfg.length_km == 0.0 || cfg.dispersion_ps_nm_km == 0.0 {
        return Err(Error::invalid("length_km", "zero dispersion length; use the identity channel"));
    }
    let t = cfg.sample_period();
    let a = SPEED_OF_LIGHT * t * t / (cfg.dispersion_si() * cfg.wavelength_si().powi(2) * cfg.length_si());
    let gain = (Complex64::new(0.0, a)).sqrt();
    let half = (cfg.num_taps() / 2) as i64;
    let taps = (-half..=half)
        .map(|n| gain * Complex64::from_polar(1.0, -PI * a * (n * n) as f64))
        .collect();
    Ok(LaurentPoly::new(-half, taps))
}

/// CD taps, or the identity channel when there is no dispersion.
pub fn channel_taps(cfg: &FiberConfig) -> Result<LaurentPoly> {
    cfg.validate()?;
    if cfg.length_km == 0.0 || cfg.dispersion_ps_nm_km == 0.0 {
        return Ok(LaurentPoly::delta(0));
    }
    cd_impulse_response(cfg)
}

/// Full linear convolution keeping the absolute time axis.
pub fn apply_channel(signal: &Signal, h: &LaurentPoly) -> Signal {
    if signal.is_empty() || h.is_zero() {
        return Signal::new(signal.start, Vec::new());
    }
    Signal::new(
        signal.start + h.lag_min(),
        crate::polymat::convolve(&signal.samples, h.coeffs()),
    )
}

/// Per-sample noise variance for a target SNR in dB.
pub fn noise_variance(signal: &Signal, snr_db: f64) -> Result<f64> {
    let p = signal.mean_power();
    if !(p > 0.0) {
        return Err(Error::ZeroPower);
    }
    Ok(p / 10f64.powf(snr_db / 10.0))
}

/// Add circular complex Gaussian noise of the given variance.
pub fn add_noise<R: Rng + ?Sized>(signal: &Signal, variance: f64, rng: &mut R) -> Signal {
    if variance == 0.0 {
        return signal.clone();
    }
    let normal = Normal::new(0.0, (variance / 2.0).sqrt()).expect("finite variance");
    let samples = signal
        .samples
        .iter()
        .map(|&x| x + Complex64::new(normal.sample(rng), normal.sample(rng)))
        .collect();
    Signal::new(signal.start, samples)
}

/// AWGN at `snr_db` relative to the mean signal power; `+∞` is noiseless.
pub fn add_awgn(signal: &Signal, snr_db: f64, seed: u64) -> Result<Signal> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    add_awgn_with(signal, snr_db, &mut rng)
}

pub fn add_awgn_with<R: Rng + ?Sized>(signal: &Signal, snr_db: f64, rng: &mut R) -> Result<Signal> {
    if snr_db.is_nan() {
        return Err(Error::NonFinite);
    }
    let var = noise_variance(signal, snr_db)?;
    if snr_db == f64::INFINITY {
        return Ok(signal.clone());
    }
    Ok(add_noise(signal, var, rng))
}
