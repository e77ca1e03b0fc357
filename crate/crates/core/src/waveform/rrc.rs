//! Root-raised-cosine pulse shaping.
//!
//! The FIR has `span * L + 1` taps (span counted in symbol intervals) and unit
//! energy, so a zero-stuffing interpolator followed by the matched decimator
//! samples a raised cosine with unit peak. The full-convolution methods keep
//! edge tails and report where time zero lands; [`rrc_filter`] trims them.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::TimeSignal;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RrcConfig {
    pub rolloff: f64,
    pub oversample: usize,
    /// Filter length in symbol intervals.
    pub span: usize,
}

impl Default for RrcConfig {
    fn default() -> Self {
        RrcConfig {
            rolloff: 0.2,
            oversample: 4,
            span: 32,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RrcMode {
    Interpolate,
    Decimate,
}

#[derive(Debug, Clone)]
pub struct RrcFilter {
    cfg: RrcConfig,
    taps: Vec<f64>,
}

/// Output of a full convolution: `samples[delay]` corresponds to time zero.
#[derive(Debug, Clone)]
pub struct Filtered {
    pub samples: Vec<Complex64>,
    pub delay: usize,
}

impl RrcFilter {
    pub fn new(cfg: RrcConfig) -> Result<Self> {
        if !(cfg.rolloff > 0.0 && cfg.rolloff <= 1.0) {
            return Err(invalid("rolloff", format!("{} not in (0, 1]", cfg.rolloff)));
        }
        if cfg.oversample == 0 {
            return Err(invalid("oversample", "must be at least 1"));
        }
        if cfg.span == 0 || cfg.span % 2 != 0 {
            return Err(invalid("span", "must be a positive even number of symbols"));
        }
        let l = cfg.oversample;
        let len = cfg.span * l + 1;
        let center = (len - 1) as f64 / 2.0;
        let mut taps: Vec<f64> = (0..len)
            .map(|i| rrc_pulse((i as f64 - center) / l as f64, cfg.rolloff))
            .collect();
        let energy = taps.iter().map(|h| h * h).sum::<f64>().sqrt();
        taps.iter_mut().for_each(|h| *h /= energy);
        Ok(RrcFilter { cfg, taps })
    }

    pub fn config(&self) -> RrcConfig {
        self.cfg
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Group delay of one filter pass, in high-rate samples.
    pub fn group_delay(&self) -> usize {
        (self.taps.len() - 1) / 2
    }

    /// Zero-stuff by L and filter; returns the full convolution.
    pub fn interpolate_full(&self, x: &[Complex64]) -> Filtered {
        let l = self.cfg.oversample;
        let t = self.taps.len();
        let mut y = vec![Complex64::new(0.0, 0.0); x.len() * l + t - 1];
        for (i, &xi) in x.iter().enumerate() {
            let out = &mut y[i * l..i * l + t];
            for (o, &h) in out.iter_mut().zip(&self.taps) {
                *o += xi * h;
            }
        }
        Filtered {
            samples: y,
            delay: self.group_delay(),
        }
    }

    /// Matched-filter `y` (whose time zero is at index `delay`) and keep
    /// `out_len` samples at multiples of L starting from time zero.
    pub fn decimate_from(&self, y: &[Complex64], delay: usize, out_len: usize) -> Vec<Complex64> {
        let l = self.cfg.oversample as isize;
        let t = self.taps.len() as isize;
        let gd = self.group_delay() as isize;
        (0..out_len as isize)
            .map(|i| {
                // Window of y feeding output i: indices c - (t-1) ..= c.
                let c = i * l + delay as isize + gd;
                let lo = (c - (t - 1)).max(0);
                let hi = c.min(y.len() as isize - 1);
                let mut acc = Complex64::new(0.0, 0.0);
                let mut j = lo;
                while j <= hi {
                    acc += y[j as usize] * self.taps[(c - j) as usize];
                    j += 1;
                }
                acc
            })
            .collect()
    }
}

/// Continuous-time RRC pulse at `t` symbol intervals (unnormalized).
fn rrc_pulse(t: f64, beta: f64) -> f64 {
    if t.abs() < 1e-12 {
        return 1.0 - beta + 4.0 * beta / PI;
    }
    let edge = 1.0 / (4.0 * beta);
    if (t.abs() - edge).abs() < 1e-9 {
        let a = (1.0 + 2.0 / PI) * (PI / (4.0 * beta)).sin();
        let b = (1.0 - 2.0 / PI) * (PI / (4.0 * beta)).cos();
        return beta / 2f64.sqrt() * (a + b);
    }
    let num = (PI * t * (1.0 - beta)).sin() + 4.0 * beta * t * (PI * t * (1.0 + beta)).cos();
    let den = PI * t * (1.0 - (4.0 * beta * t).powi(2));
    num / den
}

/// Delay-free interpolation or decimation by the configured factor.
///
/// Interpolation returns `len * L` samples; decimation returns `len / L`.
/// Edge tails are trimmed, so chaining the two loses the pulse halves that
/// fall outside the block. Use the `*_full` methods on [`RrcFilter`] when that
/// matters.
pub fn rrc_filter(x: &TimeSignal, filter: &RrcFilter, mode: RrcMode) -> TimeSignal {
    let l = filter.cfg.oversample;
    match mode {
        RrcMode::Interpolate => {
            let full = filter.interpolate_full(&x.samples);
            let samples = full.samples[full.delay..full.delay + x.samples.len() * l].to_vec();
            TimeSignal {
                samples,
                rate: x.rate * l as f64,
                oversample: x.oversample * l,
            }
        }
        RrcMode::Decimate => {
            let samples = filter.decimate_from(&x.samples, 0, x.samples.len() / l);
            TimeSignal {
                samples,
                rate: x.rate / l as f64,
                oversample: (x.oversample / l).max(1),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::Constellation;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn test_taps_symmetric_unit_energy() {
        let f = RrcFilter::new(RrcConfig::default()).unwrap();
        let h = f.taps();
        assert_eq!(h.len(), 129);
        for i in 0..h.len() {
            assert!((h[i] - h[h.len() - 1 - i]).abs() < 1e-12);
        }
        let e: f64 = h.iter().map(|v| v * v).sum();
        assert!((e - 1.0).abs() < 1e-12);
    }

    #[test]
    fn test_impulse_gives_centered_response() {
        let f = RrcFilter::new(RrcConfig { oversample: 1, ..RrcConfig::default() }).unwrap();
        let mut x = vec![Complex64::new(0.0, 0.0); 101];
        x[50] = Complex64::new(1.0, 0.0);
        let sig = TimeSignal::new(x, 1.0, 1);
        let y = rrc_filter(&sig, &f, RrcMode::Interpolate);
        let gd = f.group_delay();
        for k in 0..=gd {
            let a = y.samples[50 - k].re;
            let b = y.samples[50 + k].re;
            assert!((a - b).abs() < 1e-12);
            assert!((a - f.taps()[gd + k]).abs() < 1e-12);
        }
    }

    #[test]
    fn test_unit_rate_preserves_white_energy() {
        let f = RrcFilter::new(RrcConfig { oversample: 1, ..RrcConfig::default() }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x: Vec<Complex64> = (0..200_000)
            .map(|_| Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
            .collect();
        let ein: f64 = x.iter().map(|v| v.norm_sqr()).sum();
        let y = rrc_filter(&TimeSignal::new(x, 1.0, 1), &f, RrcMode::Interpolate);
        let eout: f64 = y.samples.iter().map(|v| v.norm_sqr()).sum();
        assert!((eout / ein - 1.0).abs() < 0.005, "ratio {}", eout / ein);
    }

    #[test]
    fn test_tx_rx_roundtrip_below_minus_40_db() {
        let f = RrcFilter::new(RrcConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x: Vec<Complex64> = (0..4096).map(|_| Constellation::Qpsk.random(&mut rng, 1.0)).collect();
        let up = f.interpolate_full(&x);
        let back = f.decimate_from(&up.samples, up.delay, x.len());
        let err: f64 = x.iter().zip(&back).map(|(a, b)| (a - b).norm_sqr()).sum();
        let sig: f64 = x.iter().map(|a| a.norm_sqr()).sum();
        let db = 10.0 * (err / sig).log10();
        assert!(db < -40.0, "roundtrip error {db:.1} dB");
    }

    #[test]
    fn test_rejects_bad_config() {
        assert!(RrcFilter::new(RrcConfig { rolloff: 0.0, ..RrcConfig::default() }).is_err());
        assert!(RrcFilter::new(RrcConfig { rolloff: 1.5, ..RrcConfig::default() }).is_err());
        assert!(RrcFilter::new(RrcConfig { oversample: 0, ..RrcConfig::default() }).is_err());
    }
}
