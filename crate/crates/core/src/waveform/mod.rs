//! Transmit-side signal generation.
//!
//! ```text
//!  d (N x M, [k, l])  --map_dd_to_ft-->  S (N x M, [n, m])
//!                     --ft_to_time--->   s (N x M, [n, l])   row n = symbol n
//!                     --add_cp/add_rcp-> s~[i]  (critical rate, length I)
//! ```
//!
//! Every grid is stored symbol-major: row index is the Doppler bin `k` or
//! symbol `n`, column index is the delay bin `l` or subcarrier `m`. Entry
//! `(k, l)` of a data grid therefore sits at row-major position `kM + l`.

mod constellation;
pub mod rrc;

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fft;

pub use constellation::Constellation;
pub use rrc::{rrc_filter, RrcConfig, RrcFilter, RrcMode};

/// Speed of light (m/s).
pub const C0: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Waveform {
    CpOtfs,
    RcpOtfs,
    Ofdm,
    DftSOfdm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Carrier frequency (Hz).
    pub fc: f64,
    /// Bandwidth (Hz); the critical sample interval is `1/B`.
    #[serde(rename = "B")]
    pub bandwidth: f64,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "Q")]
    pub q: usize,
    pub waveform: Waveform,
    pub constellation: Constellation,
    pub sigma_d2: f64,
}

impl SystemParams {
    /// Table II system: 60.48 GHz, 1.825 GHz, M=512, Q=128, N=143, 64-QAM CP-OTFS.
    pub fn table2() -> Self {
        SystemParams {
            fc: 60.48e9,
            bandwidth: 1.825e9,
            m: 512,
            n: 143,
            q: 128,
            waveform: Waveform::CpOtfs,
            constellation: Constellation::Qam64,
            sigma_d2: 1.0,
        }
    }

    pub fn ts(&self) -> f64 {
        1.0 / self.bandwidth
    }

    /// Block length `I` at the critical rate.
    pub fn total_samples(&self) -> usize {
        match self.waveform {
            Waveform::RcpOtfs => self.m * self.n + self.q,
            _ => self.n * (self.m + self.q),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(invalid("M/N", "grid dimensions must be positive"));
        }
        match self.waveform {
            Waveform::RcpOtfs if self.q >= self.m * self.n => {
                return Err(invalid("Q", format!("Q={} must be below MN={}", self.q, self.m * self.n)))
            }
            Waveform::RcpOtfs => {}
            _ if self.q >= self.m => {
                return Err(invalid("Q", format!("Q={} must be below M={}", self.q, self.m)))
            }
            _ => {}
        }
        if !(self.bandwidth > 0.0) {
            return Err(invalid("B", "bandwidth must be positive"));
        }
        if !(self.fc > 0.0) {
            return Err(invalid("fc", "carrier frequency must be positive"));
        }
        if !(self.sigma_d2 > 0.0) {
            return Err(invalid("sigma_d2", "symbol power must be positive"));
        }
        Ok(())
    }
}

/// Data symbols, shape `(N, M)` with entry `[k, l] = d_{kM+l}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataGrid {
    pub d: Array2<Complex64>,
}

impl DataGrid {
    pub fn random<R: Rng + ?Sized>(params: &SystemParams, rng: &mut R) -> Self {
        let d = Array2::from_shape_simple_fn((params.n, params.m), || {
            params.constellation.random(rng, params.sigma_d2)
        });
        DataGrid { d }
    }

    /// Flat symbol `d_{kM+l}`.
    pub fn symbol(&self, idx: usize) -> Complex64 {
        let m = self.d.ncols();
        self.d[[idx / m, idx % m]]
    }
}

/// Frequency-time grid, shape `(N, M)` with entry `[n, m] = S[m, n]`.
pub type FreqTimeGrid = Array2<Complex64>;

/// Per-symbol time columns, shape `(N, M)` with row `n` = `s[., n]`.
pub type ColumnSignal = Array2<Complex64>;

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSignal {
    pub samples: Vec<Complex64>,
    /// Samples per second.
    pub rate: f64,
    /// Integer rate multiple relative to the bandwidth.
    pub oversample: usize,
}

impl TimeSignal {
    pub fn new(samples: Vec<Complex64>, rate: f64, oversample: usize) -> Self {
        TimeSignal {
            samples,
            rate,
            oversample,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|v| v.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }
}

fn check_shape(a: &Array2<Complex64>, params: &SystemParams) -> Result<()> {
    let expected = (params.n, params.m);
    if a.dim() != expected {
        return Err(Error::ShapeMismatch {
            expected,
            actual: a.dim(),
        });
    }
    Ok(())
}

/// Delay-Doppler symbols to the frequency-time grid `S[m, n]`.
///
/// OTFS applies a unitary DFT over delay and a unitary IDFT over Doppler.
/// DFT-s-OFDM keeps only the delay DFT (symbol `n` spreads `d_{nM..nM+M}`);
/// OFDM maps `S[m, n] = d_{nM+m}` directly.
pub fn map_dd_to_ft(grid: &DataGrid, params: &SystemParams) -> Result<FreqTimeGrid> {
    check_shape(&grid.d, params)?;
    let mut s = grid.d.clone();
    match params.waveform {
        Waveform::CpOtfs | Waveform::RcpOtfs => {
            fft::along_rows(&mut s, FftDirection::Forward);
            fft::along_cols(&mut s, FftDirection::Inverse);
        }
        Waveform::DftSOfdm => fft::along_rows(&mut s, FftDirection::Forward),
        Waveform::Ofdm => {}
    }
    Ok(s)
}

/// Per-symbol unitary IDFT over subcarriers.
pub fn ft_to_time(s: &FreqTimeGrid, params: &SystemParams) -> Result<ColumnSignal> {
    check_shape(s, params)?;
    let mut cols = s.clone();
    fft::along_rows(&mut cols, FftDirection::Inverse);
    Ok(cols)
}

/// Per-symbol CP: symbol `n` becomes `[last Q of column n | column n]`.
pub fn add_cp(cols: &ColumnSignal, params: &SystemParams) -> Result<TimeSignal> {
    check_shape(cols, params)?;
    let (m, q) = (params.m, params.q);
    if q >= m {
        return Err(invalid("Q", format!("CP length {q} must be below M={m}")));
    }
    let mut out = Vec::with_capacity(params.n * (m + q));
    for row in cols.rows() {
        let row = row.as_slice().expect("standard layout");
        out.extend_from_slice(&row[m - q..]);
        out.extend_from_slice(row);
    }
    Ok(TimeSignal::new(out, params.bandwidth, 1))
}

/// Single block-level CP: `[last Q samples of column N-1 | all columns]`.
pub fn add_rcp(cols: &ColumnSignal, params: &SystemParams) -> Result<TimeSignal> {
    check_shape(cols, params)?;
    let total = params.m * params.n;
    if params.q >= total {
        return Err(invalid("Q", format!("CP length {} must be below MN={total}", params.q)));
    }
    let flat = cols.as_slice().expect("standard layout");
    let mut out = Vec::with_capacity(total + params.q);
    out.extend_from_slice(&flat[total - params.q..]);
    out.extend_from_slice(flat);
    Ok(TimeSignal::new(out, params.bandwidth, 1))
}

/// Critically sampled transmit block `s~[i]`.
pub fn modulate(grid: &DataGrid, params: &SystemParams) -> Result<TimeSignal> {
    params.validate()?;
    let s = map_dd_to_ft(grid, params)?;
    let cols = ft_to_time(&s, params)?;
    match params.waveform {
        Waveform::RcpOtfs => add_rcp(&cols, params),
        _ => add_cp(&cols, params),
    }
}

/// Strip the CP(s) and return the per-symbol columns.
pub fn strip_cp(x: &TimeSignal, params: &SystemParams) -> Result<ColumnSignal> {
    let expected = params.total_samples();
    if x.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            actual: x.len(),
        });
    }
    let (m, n, q) = (params.m, params.n, params.q);
    let body: Vec<Complex64> = match params.waveform {
        Waveform::RcpOtfs => x.samples[q..].to_vec(),
        _ => x
            .samples
            .chunks(m + q)
            .flat_map(|sym| sym[q..].iter().copied())
            .collect(),
    };
    Ok(Array2::from_shape_vec((n, m), body).expect("length checked"))
}

/// Inverse of [`modulate`] for a noiseless block.
pub fn demodulate(x: &TimeSignal, params: &SystemParams) -> Result<DataGrid> {
    let mut s = strip_cp(x, params)?;
    fft::along_rows(&mut s, FftDirection::Forward);
    match params.waveform {
        Waveform::CpOtfs | Waveform::RcpOtfs => {
            fft::along_cols(&mut s, FftDirection::Forward);
            fft::along_rows(&mut s, FftDirection::Inverse);
        }
        Waveform::DftSOfdm => fft::along_rows(&mut s, FftDirection::Inverse),
        Waveform::Ofdm => {}
    }
    Ok(DataGrid { d: s })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn params(m: usize, n: usize, q: usize, waveform: Waveform) -> SystemParams {
        SystemParams {
            m,
            n,
            q,
            waveform,
            ..SystemParams::table2()
        }
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Direct double-sum evaluation of the delay-Doppler to frequency-time map.
    fn oracle_dd_to_ft(d: &Array2<Complex64>) -> Array2<Complex64> {
        let (n, m) = d.dim();
        let norm = 1.0 / ((m * n) as f64).sqrt();
        Array2::from_shape_fn((n, m), |(nn, mm)| {
            let mut acc = c(0.0, 0.0);
            for k in 0..n {
                for l in 0..m {
                    let ph = 2.0 * PI * ((nn * k) as f64 / n as f64 - (mm * l) as f64 / m as f64);
                    acc += d[[k, l]] * Complex64::from_polar(1.0, ph);
                }
            }
            acc * norm
        })
    }

    #[test]
    fn test_ofdm_mapping_is_identity() {
        let p = params(4, 3, 1, Waveform::Ofdm);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = DataGrid::random(&p, &mut rng);
        assert_eq!(map_dd_to_ft(&g, &p).unwrap(), g.d);
    }

    #[test]
    fn test_single_point_grid() {
        let p = params(1, 1, 0, Waveform::CpOtfs);
        let g = DataGrid { d: Array2::from_elem((1, 1), c(1.0, 0.0)) };
        let s = map_dd_to_ft(&g, &p).unwrap();
        assert!((s[[0, 0]] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn test_two_by_two_impulse_spreads_evenly() {
        let p = params(2, 2, 0, Waveform::CpOtfs);
        let mut d = Array2::zeros((2, 2));
        d[[0, 0]] = c(1.0, 0.0);
        let s = map_dd_to_ft(&DataGrid { d }, &p).unwrap();
        for v in s.iter() {
            assert!((v - c(0.5, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn test_otfs_mapping_matches_double_sum() {
        let p = params(6, 5, 2, Waveform::CpOtfs);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = DataGrid::random(&p, &mut rng);
        let fast = map_dd_to_ft(&g, &p).unwrap();
        let slow = oracle_dd_to_ft(&g.d);
        let err = (&fast - &slow).iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(err < 1e-12, "err {err}");
    }

    #[test]
    fn test_otfs_time_columns_are_doppler_idft() {
        let p = params(8, 6, 2, Waveform::CpOtfs);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = DataGrid::random(&p, &mut rng);
        let cols = ft_to_time(&map_dd_to_ft(&g, &p).unwrap(), &p).unwrap();
        for l in 0..p.m {
            let expect = fft::idft(&g.d.column(l).to_vec());
            for n in 0..p.n {
                assert!((cols[[n, l]] - expect[n]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn test_four_point_idft_example() {
        let p = params(4, 1, 0, Waveform::Ofdm);
        let s = Array2::from_elem((1, 4), c(0.5, 0.0));
        let cols = ft_to_time(&s, &p).unwrap();
        let expect = [1.0, 0.0, 0.0, 0.0];
        for (v, e) in cols.iter().zip(expect) {
            assert!((v - c(e, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn test_parseval() {
        let p = params(16, 8, 4, Waveform::CpOtfs);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = DataGrid::random(&p, &mut rng);
        let s = map_dd_to_ft(&g, &p).unwrap();
        let cols = ft_to_time(&s, &p).unwrap();
        let es: f64 = s.iter().map(|v| v.norm_sqr()).sum();
        let ec: f64 = cols.iter().map(|v| v.norm_sqr()).sum();
        let ed: f64 = g.d.iter().map(|v| v.norm_sqr()).sum();
        assert!((es / ed - 1.0).abs() < 1e-12);
        assert!((ec / ed - 1.0).abs() < 1e-12);
    }

    #[test]
    fn test_add_cp_examples() {
        let p = params(4, 1, 2, Waveform::CpOtfs);
        let cols = Array2::from_shape_vec((1, 4), vec![c(1., 0.), c(2., 0.), c(3., 0.), c(4., 0.)]).unwrap();
        let out = add_cp(&cols, &p).unwrap();
        let re: Vec<f64> = out.samples.iter().map(|v| v.re).collect();
        assert_eq!(re, vec![3., 4., 1., 2., 3., 4.]);

        let p0 = params(4, 1, 0, Waveform::CpOtfs);
        assert_eq!(add_cp(&cols, &p0).unwrap().samples, cols.iter().copied().collect::<Vec<_>>());

        let p2 = params(3, 2, 1, Waveform::CpOtfs);
        assert_eq!(add_cp(&Array2::zeros((2, 3)), &p2).unwrap().len(), 8);

        let bad = params(4, 1, 4, Waveform::CpOtfs);
        assert!(add_cp(&cols, &bad).is_err());
    }

    #[test]
    fn test_add_rcp_examples() {
        let p = params(2, 2, 1, Waveform::RcpOtfs);
        let cols = Array2::from_shape_vec((2, 2), vec![c(1., 0.), c(2., 0.), c(3., 0.), c(4., 0.)]).unwrap();
        let re: Vec<f64> = add_rcp(&cols, &p).unwrap().samples.iter().map(|v| v.re).collect();
        assert_eq!(re, vec![4., 1., 2., 3., 4.]);
        let p0 = params(2, 2, 0, Waveform::RcpOtfs);
        assert_eq!(add_rcp(&cols, &p0).unwrap().len(), 4);
        let big = params(512, 143, 128, Waveform::RcpOtfs);
        assert_eq!(add_rcp(&Array2::zeros((143, 512)), &big).unwrap().len(), 73_344);
        let bad = params(2, 2, 4, Waveform::RcpOtfs);
        assert!(add_rcp(&cols, &bad).is_err());
    }

    #[test]
    fn test_cp_property() {
        let p = params(16, 4, 5, Waveform::CpOtfs);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = modulate(&DataGrid::random(&p, &mut rng), &p).unwrap();
        let sym = p.m + p.q;
        for n in 0..p.n {
            for j in 0..p.q {
                assert_eq!(x.samples[n * sym + j], x.samples[n * sym + p.m + j]);
            }
        }
    }

    #[test]
    fn test_modulate_demodulate_roundtrip_all_waveforms() {
        for w in [Waveform::CpOtfs, Waveform::RcpOtfs, Waveform::Ofdm, Waveform::DftSOfdm] {
            let p = params(32, 8, 8, w);
            let mut rng = ChaCha8Rng::seed_from_u64(6);
            let g = DataGrid::random(&p, &mut rng);
            let x = modulate(&g, &p).unwrap();
            assert_eq!(x.len(), p.total_samples());
            let back = demodulate(&x, &p).unwrap();
            let err: f64 = (&back.d - &g.d).iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            let norm: f64 = g.d.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            assert!(err / norm < 1e-10, "{w:?}: {}", err / norm);
        }
    }

    #[test]
    fn test_table2_block_length() {
        assert_eq!(SystemParams::table2().total_samples(), 91_520);
    }

    #[test]
    fn test_dimension_mismatch_is_error() {
        let p = params(4, 4, 1, Waveform::CpOtfs);
        let g = DataGrid { d: Array2::zeros((3, 4)) };
        assert!(matches!(map_dd_to_ft(&g, &p), Err(Error::ShapeMismatch { .. })));
    }
}
