use ndarray::Array2;
use num_complex::Complex64;
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};

use crate::fft;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RdmKind {
    Ratio,
    Ccc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RdmOrigin {
    Cos,
    Vcp,
}

impl RdmKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RdmKind::Ratio => "ratio",
            RdmKind::Ccc => "ccc",
        }
    }
}

impl RdmOrigin {
    pub fn as_str(self) -> &'static str {
        match self {
            RdmOrigin::Cos => "cos",
            RdmOrigin::Vcp => "vcp",
        }
    }
}

/// Range-Doppler map, `values[[k, l]]` with Doppler bin `k` and delay bin
/// `l`. Both axes are cyclic; Doppler bins at or above `ndopp/2` stand for
/// negative frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct Rdm {
    pub values: Array2<Complex64>,
    /// Seconds per delay bin.
    pub delay_bin_s: f64,
    /// Hz per Doppler bin.
    pub doppler_bin_hz: f64,
    pub kind: RdmKind,
    pub origin: RdmOrigin,
}

impl Rdm {
    pub fn ndopp(&self) -> usize {
        self.values.nrows()
    }

    pub fn ndelay(&self) -> usize {
        self.values.ncols()
    }

    pub fn power(&self, k: usize, l: usize) -> f64 {
        self.values[[k, l]].norm_sqr()
    }

    pub fn power_map(&self) -> Array2<f64> {
        self.values.mapv(|v| v.norm_sqr())
    }

    /// Signed Doppler bin for row `k`.
    pub fn signed_doppler(&self, k: usize) -> isize {
        let n = self.ndopp() as isize;
        let k = k as isize;
        if k >= (n + 1) / 2 {
            k - n
        } else {
            k
        }
    }

    /// Nearest (cyclic) bin for a delay in seconds and Doppler in Hz.
    pub fn nearest_bin(&self, tau: f64, nu: f64) -> (usize, usize) {
        let wrap = |x: f64, n: usize| -> usize { (x.round() as i64).rem_euclid(n as i64) as usize };
        (
            wrap(nu / self.doppler_bin_hz, self.ndopp()),
            wrap(tau / self.delay_bin_s, self.ndelay()),
        )
    }

    /// Fractional bin position (Doppler, delay) before rounding.
    pub fn bin_position(&self, tau: f64, nu: f64) -> (f64, f64) {
        (nu / self.doppler_bin_hz, tau / self.delay_bin_s)
    }
}

/// `V[k, l] = sum_n sum_m Y[n, m] F_M(-ml) F_N(nk)`: unitary IDFT over the
/// subcarrier axis and unitary DFT over the symbol axis.
pub fn delay_doppler_transform(mut y: Array2<Complex64>) -> Array2<Complex64> {
    fft::along_rows(&mut y, FftDirection::Inverse);
    fft::along_cols(&mut y, FftDirection::Forward);
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn test_transform_matches_double_sum() {
        let (n, m) = (8, 16);
        let y = Array2::from_shape_fn((n, m), |(i, j)| Complex64::new((i * 3 + j) as f64 * 0.1, (j as f64).sin()));
        let fast = delay_doppler_transform(y.clone());
        let norm = 1.0 / ((n * m) as f64).sqrt();
        let mut max_err: f64 = 0.0;
        let mut max_val: f64 = 0.0;
        for k in 0..n {
            for l in 0..m {
                let mut acc = Complex64::new(0.0, 0.0);
                for nn in 0..n {
                    for mm in 0..m {
                        let ph = 2.0 * PI * ((mm * l) as f64 / m as f64 - (nn * k) as f64 / n as f64);
                        acc += y[[nn, mm]] * Complex64::from_polar(norm, ph);
                    }
                }
                max_err = max_err.max((acc - fast[[k, l]]).norm());
                max_val = max_val.max(acc.norm());
            }
        }
        assert!(max_err / max_val < 1e-10);
    }

    #[test]
    fn test_signed_doppler_and_nearest_bin() {
        let rdm = Rdm {
            values: Array2::zeros((10, 20)),
            delay_bin_s: 1.0,
            doppler_bin_hz: 2.0,
            kind: RdmKind::Ratio,
            origin: RdmOrigin::Vcp,
        };
        assert_eq!(rdm.signed_doppler(4), 4);
        assert_eq!(rdm.signed_doppler(5), -5);
        assert_eq!(rdm.signed_doppler(9), -1);
        assert_eq!(rdm.nearest_bin(3.4, -2.2), (9, 3));
    }
}
