//! Classical OFDM sensing: strip the CP of every symbol, remove the data in
//! the frequency domain and take the 2-D transform.
//!
//! Only the per-symbol-CP waveforms are supported; a target whose delay
//! exceeds the CP breaks the model and simply shows up as a weaker, smeared
//! peak.

use std::f64::consts::PI;

use ndarray::{Array2, Zip};
use num_complex::Complex64;
use rustfft::FftDirection;

use crate::error::{Error, Result};
use crate::fft;
use crate::rdm::{delay_doppler_transform, Rdm, RdmKind, RdmOrigin};
use crate::waveform::{strip_cp, FreqTimeGrid, SystemParams, TimeSignal, Waveform};

/// Per-symbol frequency samples `X_n[m]`, shape `(N, M)`.
pub fn cos_demod(rx: &TimeSignal, params: &SystemParams) -> Result<FreqTimeGrid> {
    if params.waveform == Waveform::RcpOtfs {
        return Err(Error::Unsupported {
            op: "cos_demod",
            what: "RCP-OTFS (no per-symbol CP)".into(),
        });
    }
    let mut x = strip_cp(rx, params)?;
    fft::along_rows(&mut x, FftDirection::Forward);
    Ok(x)
}

fn axes(params: &SystemParams, kind: RdmKind, values: Array2<Complex64>) -> Rdm {
    let ts = params.ts();
    Rdm {
        values,
        delay_bin_s: ts,
        doppler_bin_hz: 1.0 / (((params.m + params.q) * params.n) as f64 * ts),
        kind,
        origin: RdmOrigin::Cos,
    }
}

fn check(x: &FreqTimeGrid, s: &FreqTimeGrid) -> Result<()> {
    if x.dim() != s.dim() {
        return Err(Error::ShapeMismatch {
            expected: s.dim(),
            actual: x.dim(),
        });
    }
    Ok(())
}

/// Pointwise division by the known symbols, then the 2-D transform.
pub fn rdm_ratio_cos(x: &FreqTimeGrid, s: &FreqTimeGrid, params: &SystemParams) -> Result<Rdm> {
    check(x, s)?;
    if let Some(((n, m), _)) = s.indexed_iter().find(|(_, v)| v.norm_sqr() == 0.0) {
        return Err(Error::Domain(format!("reference symbol S[{m}, {n}] is zero")));
    }
    let mut y = Array2::zeros(x.dim());
    Zip::from(&mut y).and(x).and(s).for_each(|o, a, b| *o = a / b);
    Ok(axes(params, RdmKind::Ratio, delay_doppler_transform(y)))
}

/// Pointwise multiplication by the conjugate symbols, then the 2-D transform.
pub fn rdm_ccc_cos(x: &FreqTimeGrid, s: &FreqTimeGrid, params: &SystemParams) -> Result<Rdm> {
    check(x, s)?;
    let mut y = Array2::zeros(x.dim());
    Zip::from(&mut y).and(x).and(s).for_each(|o, a, b| *o = a * b.conj());
    Ok(axes(params, RdmKind::Ccc, delay_doppler_transform(y)))
}

/// `(1/sqrt(x)) sin(pi y) / sin(pi y / x) e^{j pi (x-1) y / x}`, with the
/// limit `sqrt(x)` (times the phase) where `y` is a multiple of `x`.
pub fn sinc_kernel(x: usize, y: f64) -> Complex64 {
    let xf = x as f64;
    let phase = Complex64::from_polar(1.0, PI * (xf - 1.0) * y / xf);
    let den = (PI * y / xf).sin();
    if den.abs() < 1e-12 {
        // y = j x: ratio of sines tends to x cos(pi j x) / cos(pi j).
        let j = (y / xf).round();
        let sign = (PI * j * xf).cos() / (PI * j).cos();
        return phase * (sign * xf.sqrt());
    }
    phase * ((PI * y).sin() / den / xf.sqrt())
}

/// Known-symbol grid for a transmitted block (same as demodulating it).
pub fn cos_reference(tx: &TimeSignal, params: &SystemParams) -> Result<FreqTimeGrid> {
    cos_demod(tx, params)
}
