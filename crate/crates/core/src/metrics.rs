//! EVM, BER and Gray-mapped square QAM.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `100·sqrt(mean|rx − ref|² / mean|ref|²)`.
pub fn evm(rx: &[Complex64], reference: &[Complex64]) -> Result<f64> {
    if rx.len() != reference.len() {
        return Err(Error::LengthMismatch {
            left: rx.len(),
            right: reference.len(),
        });
    }
    let power: f64 = reference.iter().map(|r| r.norm_sqr()).sum();
    if !(power > 0.0) {
        return Err(Error::ZeroPower);
    }
    let err: f64 = rx.iter().zip(reference).map(|(a, b)| (a - b).norm_sqr()).sum();
    Ok(100.0 * (err / power).sqrt())
}

/// Complex scalar `c` minimizing `Σ|c·rx − ref|²`; one if `rx` is all zero.
pub fn ls_gain(rx: &[Complex64], reference: &[Complex64]) -> Complex64 {
    let num: Complex64 = rx.iter().zip(reference).map(|(a, b)| a.conj() * b).sum();
    let den: f64 = rx.iter().map(|a| a.norm_sqr()).sum();
    if den > 0.0 {
        num / den
    } else {
        Complex64::new(1.0, 0.0)
    }
}

/// Bit error rate between two equal-length bit streams.
pub fn ber(rx_bits: &[u8], tx_bits: &[u8]) -> Result<f64> {
    if rx_bits.len() != tx_bits.len() {
        return Err(Error::LengthMismatch {
            left: rx_bits.len(),
            right: tx_bits.len(),
        });
    }
    if tx_bits.is_empty() {
        return Ok(0.0);
    }
    let errors = rx_bits.iter().zip(tx_bits).filter(|(a, b)| a != b).count();
    Ok(errors as f64 / tx_bits.len() as f64)
}

/// Gray-mapped square QAM with unit average power.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Qam {
    order: usize,
}

impl TryFrom<usize> for Qam {
    type Error = Error;
    fn try_from(order: usize) -> Result<Self> {
        Qam::new(order)
    }
}

impl From<Qam> for usize {
    fn from(q: Qam) -> usize {
        q.order
    }
}

impl Qam {
    pub fn new(order: usize) -> Result<Self> {
        match order {
            4 | 16 => Ok(Self { order }),
            _ => Err(Error::invalid("qam_order", format!("unsupported order {order}; use 4 or 16"))),
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.order.trailing_zeros() as usize
    }

    /// Bits per real dimension.
    fn axis_bits(&self) -> usize {
        self.bits_per_symbol() / 2
    }

    fn levels(&self) -> usize {
        1 << self.axis_bits()
    }

    fn scale(&self) -> f64 {
        // Mean power of the odd-integer grid ±1, ±3, … per complex symbol.
        let l = self.levels() as f64;
        (2.0 * (l * l - 1.0) / 3.0).sqrt()
    }

    /// Gray-coded axis bits to the amplitude `2·idx − (L − 1)`.
    fn axis_map(&self, bits: &[u8]) -> f64 {
        let gray = bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
        let mut idx = gray;
        let mut shift = gray >> 1;
        while shift > 0 {
            idx ^= shift;
            shift >>= 1;
        }
        (2 * idx) as f64 - (self.levels() - 1) as f64
    }

    fn axis_demap(&self, x: f64, out: &mut Vec<u8>) {
        let l = self.levels();
        let idx = ((x + (l - 1) as f64) / 2.0).round().clamp(0.0, (l - 1) as f64) as usize;
        let gray = idx ^ (idx >> 1);
        for b in (0..self.axis_bits()).rev() {
            out.push(((gray >> b) & 1) as u8);
        }
    }

    pub fn map(&self, bits: &[u8]) -> Result<Vec<Complex64>> {
        let k = self.bits_per_symbol();
        if bits.len() % k != 0 {
            return Err(Error::invalid(
                "bits",
                format!("length {} is not a multiple of {k}", bits.len()),
            ));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::invalid("bits", "values must be 0 or 1"));
        }
        let half = self.axis_bits();
        let s = self.scale();
        Ok(bits
            .chunks_exact(k)
            .map(|c| Complex64::new(self.axis_map(&c[..half]), self.axis_map(&c[half..])) / s)
            .collect())
    }

    /// Minimum-distance hard decision.
    pub fn demap(&self, symbols: &[Complex64]) -> Vec<u8> {
        let s = self.scale();
        let mut out = Vec::with_capacity(symbols.len() * self.bits_per_symbol());
        for z in symbols {
            self.axis_demap(z.re * s, &mut out);
            self.axis_demap(z.im * s, &mut out);
        }
        out
    }

    pub fn constellation(&self) -> Vec<Complex64> {
        let k = self.bits_per_symbol();
        let bits: Vec<u8> = (0..self.order)
            .flat_map(|v| (0..k).rev().map(move |b| ((v >> b) & 1) as u8))
            .collect();
        self.map(&bits).expect("whole symbols")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub evm_percent: f64,
    pub ber: f64,
    pub bit_count: usize,
    pub symbol_count: usize,
    pub per_subcarrier_evm: Vec<f64>,
}

impl MetricsReport {
    pub fn worst_subcarrier_evm(&self) -> f64 {
        self.per_subcarrier_evm.iter().copied().fold(0.0, f64::max)
    }
}

/// Equalize all received symbols with one complex least-squares gain, then
/// measure EVM (overall and per subcarrier) and hard-decision BER.
pub fn evaluate(qam: &Qam, rx: &[Vec<Complex64>], tx: &[Vec<Complex64>], tx_bits: &[u8]) -> Result<MetricsReport> {
    if rx.len() != tx.len() {
        return Err(Error::LengthMismatch {
            left: rx.len(),
            right: tx.len(),
        });
    }
    for (a, b) in rx.iter().zip(tx) {
        if a.len() != b.len() {
            return Err(Error::LengthMismatch {
                left: a.len(),
                right: b.len(),
            });
        }
    }
    let rx_all: Vec<Complex64> = rx.concat();
    let tx_all: Vec<Complex64> = tx.concat();
    let c = ls_gain(&rx_all, &tx_all);
    let eq: Vec<Complex64> = rx_all.iter().map(|z| z * c).collect();
    let per_subcarrier_evm = rx
        .iter()
        .zip(tx)
        .map(|(r, t)| {
            let r: Vec<Complex64> = r.iter().map(|z| z * c).collect();
            evm(&r, t)
        })
        .collect::<Result<Vec<_>>>()?;
    let rx_bits = qam.demap(&eq);
    Ok(MetricsReport {
        evm_percent: evm(&eq, &tx_all)?,
        ber: ber(&rx_bits, tx_bits)?,
        bit_count: tx_bits.len(),
        symbol_count: tx_all.len(),
        per_subcarrier_evm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn evm_examples() {
        let r = vec![c(1.0, 0.0), c(0.0, -1.0), c(-1.0, 0.0), c(0.0, 1.0)];
        assert_eq!(evm(&r, &r).unwrap(), 0.0);
        assert!((evm(&[c(0.0, 0.0); 4], &r).unwrap() - 100.0).abs() < 1e-12);
        let mut rx = r.clone();
        let e = c(0.3, -0.4);
        rx[2] += e;
        let want = 100.0 * e.norm() / (4.0f64 * 1.0).sqrt();
        assert!((evm(&rx, &r).unwrap() - want).abs() < 1e-12);
        assert!(evm(&rx[..3], &r).is_err());
        assert!(matches!(evm(&[c(1.0, 0.0)], &[c(0.0, 0.0)]), Err(Error::ZeroPower)));
    }

    #[test]
    fn evm_is_scale_free() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let r: Vec<Complex64> = (0..50).map(|_| c(rng.random(), rng.random())).collect();
        let x: Vec<Complex64> = r.iter().map(|z| z + c(rng.random::<f64>() * 0.1, 0.0)).collect();
        let k = c(-2.0, 0.7);
        let scaled = |v: &[Complex64]| v.iter().map(|z| z * k).collect::<Vec<_>>();
        assert!((evm(&scaled(&x), &scaled(&r)).unwrap() - evm(&x, &r).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn ls_gain_undoes_rotation() {
        let r = vec![c(1.0, 1.0), c(-1.0, 1.0), c(0.5, -2.0)];
        let g = Complex64::from_polar(0.3, 1.1);
        let rx: Vec<Complex64> = r.iter().map(|z| z * g).collect();
        assert!((ls_gain(&rx, &r) * g - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn ber_examples() {
        let a = vec![0u8, 1, 1, 0, 1, 0, 0, 1];
        assert_eq!(ber(&a, &a).unwrap(), 0.0);
        let inv: Vec<u8> = a.iter().map(|b| 1 - b).collect();
        assert_eq!(ber(&inv, &a).unwrap(), 1.0);
        let mut f = a.clone();
        f[1] ^= 1;
        f[6] ^= 1;
        f[7] ^= 1;
        assert_eq!(ber(&f, &a).unwrap(), 3.0 / 8.0);
        assert!(ber(&a[..3], &a).is_err());
    }

    #[test]
    fn qam4_round_trip_exhaustive() {
        let q = Qam::new(4).unwrap();
        let bits = [0u8, 0, 0, 1, 1, 0, 1, 1];
        let s = q.map(&bits).unwrap();
        assert_eq!(q.demap(&s), bits);
        for z in &s {
            assert!((z.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn qam16_constellation() {
        let q = Qam::new(16).unwrap();
        let pts = q.constellation();
        assert_eq!(pts.len(), 16);
        for i in 0..16 {
            for j in 0..i {
                assert!((pts[i] - pts[j]).norm() > 0.1);
            }
        }
        let p = pts.iter().map(|z| z.norm_sqr()).sum::<f64>() / 16.0;
        assert!((p - 1.0).abs() < 1e-12);
        let bits: Vec<u8> = (0..16u8).flat_map(|v| (0..4).rev().map(move |b| (v >> b) & 1)).collect();
        assert_eq!(q.demap(&q.map(&bits).unwrap()), bits);
    }

    #[test]
    fn gray_neighbours_differ_by_one_bit() {
        for order in [4, 16] {
            let q = Qam::new(order).unwrap();
            let k = q.bits_per_symbol();
            let pts = q.constellation();
            let d_min = 2.0 / q.scale();
            for i in 0..order {
                for j in 0..order {
                    if ((pts[i] - pts[j]).norm() - d_min).abs() < 1e-9 {
                        assert_eq!(((i ^ j) as u32).count_ones(), 1, "order {order}: {i} {j}");
                    }
                }
            }
            assert_eq!(k * order, q.demap(&pts).len());
        }
    }

    #[test]
    fn map_errors() {
        assert!(Qam::new(8).is_err());
        let q = Qam::new(16).unwrap();
        assert!(q.map(&[0, 1, 1]).is_err());
        assert!(q.map(&[0, 1, 2, 0]).is_err());
    }

    /// `Q(x) = erfc(x/√2)/2`.
    fn q_func(x: f64) -> f64 {
        0.5 * statrs::function::erf::erfc(x / 2f64.sqrt())
    }

    fn awgn_ber(snr_db: f64, seed: u64) -> f64 {
        let q = Qam::new(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bits: Vec<u8> = (0..200_000).map(|_| rng.random_range(0..2u8)).collect();
        let sigma = (10f64.powf(-snr_db / 10.0) / 2.0).sqrt();
        let n = Normal::new(0.0, sigma).unwrap();
        let rx: Vec<Complex64> = q
            .map(&bits)
            .unwrap()
            .iter()
            .map(|z| z + c(n.sample(&mut rng), n.sample(&mut rng)))
            .collect();
        ber(&q.demap(&rx), &bits).unwrap()
    }

    #[test]
    fn qam4_ber_matches_q_function() {
        // Per-bit BER of Gray 4-QAM at symbol SNR γ is Q(√γ).
        let got = awgn_ber(10.0, 1);
        let want = q_func(10f64.sqrt());
        assert!(got <= 2.0 * want && got >= want / 2.0, "{got} vs {want}");
        // At 20 dB the expected error count over 2·10⁵ bits is ~3·10⁻¹⁸.
        assert_eq!(awgn_ber(20.0, 2), 0.0);
        assert!(q_func(10.0) < 1e-20);
    }

    #[test]
    fn evaluate_removes_common_gain() {
        let q = Qam::new(4).unwrap();
        let bits: Vec<u8> = (0..32).map(|i| ((i * 7 + 3) % 5 % 2) as u8).collect();
        let tx = q.map(&bits).unwrap();
        let tx = vec![tx[..8].to_vec(), tx[8..].to_vec()];
        let g = Complex64::from_polar(0.5, -0.7);
        let rx: Vec<Vec<Complex64>> = tx.iter().map(|v| v.iter().map(|z| z * g).collect()).collect();
        let r = evaluate(&q, &rx, &tx, &bits).unwrap();
        assert!(r.evm_percent < 1e-10);
        assert_eq!(r.ber, 0.0);
        assert_eq!((r.bit_count, r.symbol_count), (32, 16));
        assert_eq!(r.per_subcarrier_evm.len(), 2);
    }
}
