//! Sub-block sensing with a virtual cyclic prefix.
//!
//! ```text
//!  x[i]:  |<------ M~ ------>|<- Q~ ->|
//!         |   sub-block n    | tail   |          row n starts at n(M~ - Q-)
//!                  |<------ M~ ------>|<- Q~ ->|  row n+1 overlaps by Q-
//!
//!  VCP:   row[j] += x[n(M~ - Q-) + M~ + j]   for j < Q~
//! ```
//!
//! Adding the tail onto the head turns the linear convolution with any echo
//! delayed by at most Q~ samples into a cyclic one, so dividing (or
//! conjugate-multiplying) by the DFT of the matching transmit segment strips
//! the data, at the cost of the interference the tail drags in.

use ndarray::{s, Array2, Zip};
use num_complex::Complex64;
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};

use crate::analysis::a_critical;
use crate::error::{invalid, Error, Result};
use crate::fft;
use crate::rdm::{delay_doppler_transform, Rdm, RdmKind, RdmOrigin};
use crate::waveform::{SystemParams, TimeSignal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentationParams {
    /// Sub-block length M~.
    pub m_tilde: usize,
    /// Virtual CP length Q~.
    pub q_tilde: usize,
    /// Overlap between consecutive sub-blocks Q-.
    pub q_bar: usize,
}

impl SegmentationParams {
    pub fn new(m_tilde: usize, q_tilde: usize, q_bar: usize) -> Self {
        SegmentationParams {
            m_tilde,
            q_tilde,
            q_bar,
        }
    }

    /// Sub-block hop `M~ - Q-`.
    pub fn hop(&self) -> usize {
        self.m_tilde - self.q_bar
    }

    /// Structural checks that do not depend on the block length.
    pub fn validate(&self) -> Result<()> {
        if self.q_tilde < 1 {
            return Err(invalid("q_tilde", "VCP length must be at least 1"));
        }
        if self.m_tilde <= self.q_tilde + self.q_bar {
            return Err(invalid(
                "m_tilde",
                format!(
                    "M~={} must exceed Q~+Q-={}",
                    self.m_tilde,
                    self.q_tilde + self.q_bar
                ),
            ));
        }
        if 2 * (self.q_bar + self.q_tilde) > self.m_tilde {
            log::warn!(
                "overlap Q-={} exceeds the recommended M~/2 - Q~ = {}",
                self.q_bar,
                self.m_tilde as f64 / 2.0 - self.q_tilde as f64
            );
        }
        Ok(())
    }

    /// Number of sub-blocks `floor((I - Q~ - Q-) / (M~ - Q-))` in a block of
    /// `total` samples.
    pub fn n_tilde(&self, total: usize) -> Result<usize> {
        self.validate()?;
        let need = self.q_tilde + self.q_bar;
        if total < need {
            return Err(invalid("I", format!("block of {total} samples is shorter than Q~+Q-")));
        }
        let n = (total - need) / self.hop();
        if n < 1 {
            return Err(invalid(
                "I",
                format!("block of {total} samples holds no sub-block of M~={}", self.m_tilde),
            ));
        }
        Ok(n)
    }

    /// Samples needed for `n` sub-blocks plus the last VCP tail.
    fn required(&self, n: usize) -> usize {
        (n - 1) * self.hop() + self.m_tilde + self.q_tilde
    }
}

/// Sub-block rows, shape `(N~, M~)`; row `n` starts at `n (M~ - Q-)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubBlockSet {
    pub rows: Array2<Complex64>,
    pub vcp_applied: bool,
}

pub fn segment(x: &TimeSignal, seg: &SegmentationParams) -> Result<SubBlockSet> {
    segment_samples(&x.samples, seg)
}

pub(crate) fn segment_samples(x: &[Complex64], seg: &SegmentationParams) -> Result<SubBlockSet> {
    let n = seg.n_tilde(x.len())?;
    let need = seg.required(n);
    if x.len() < need {
        return Err(Error::LengthMismatch {
            expected: need,
            actual: x.len(),
        });
    }
    let hop = seg.hop();
    let rows = Array2::from_shape_fn((n, seg.m_tilde), |(r, l)| x[r * hop + l]);
    Ok(SubBlockSet {
        rows,
        vcp_applied: false,
    })
}

/// Add the `Q~` samples following each sub-block onto its head.
pub fn add_vcp(blocks: &SubBlockSet, x: &TimeSignal, seg: &SegmentationParams) -> Result<SubBlockSet> {
    add_vcp_samples(blocks, &x.samples, seg)
}

pub(crate) fn add_vcp_samples(blocks: &SubBlockSet, x: &[Complex64], seg: &SegmentationParams) -> Result<SubBlockSet> {
    if blocks.vcp_applied {
        return Err(Error::Domain("virtual CP already applied".into()));
    }
    let (n, m) = blocks.rows.dim();
    if m != seg.m_tilde {
        return Err(Error::ShapeMismatch {
            expected: (n, seg.m_tilde),
            actual: (n, m),
        });
    }
    let need = seg.required(n);
    if x.len() < need {
        return Err(Error::LengthMismatch {
            expected: need,
            actual: x.len(),
        });
    }
    let mut rows = blocks.rows.clone();
    let hop = seg.hop();
    for (r, mut row) in rows.outer_iter_mut().enumerate() {
        let tail = &x[r * hop + seg.m_tilde..r * hop + seg.m_tilde + seg.q_tilde];
        row.slice_mut(s![..seg.q_tilde])
            .iter_mut()
            .zip(tail)
            .for_each(|(h, t)| *h += t);
    }
    Ok(SubBlockSet {
        rows,
        vcp_applied: true,
    })
}

/// Unitary `M~`-point DFT of every row.
pub fn subblock_dft(blocks: &SubBlockSet) -> Array2<Complex64> {
    let mut x = blocks.rows.clone();
    fft::along_rows(&mut x, FftDirection::Forward);
    x
}

/// Transmit segments `s_n[l]` and their spectra `S_n[m]`.
#[derive(Debug, Clone)]
pub struct Reference {
    pub time: SubBlockSet,
    pub freq: Array2<Complex64>,
}

pub fn reference_segments(tx: &TimeSignal, seg: &SegmentationParams) -> Result<Reference> {
    let time = segment(tx, seg)?;
    let freq = subblock_dft(&time);
    Ok(Reference { time, freq })
}

/// Scaling constant for the guarded ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RatioScale {
    /// `a_c` for the block's `sigma_d2` and length.
    Auto,
    Fixed(f64),
}

impl RatioScale {
    pub fn resolve(self, params: &SystemParams) -> Result<f64> {
        match self {
            RatioScale::Auto => a_critical(params.sigma_d2, params.total_samples()),
            RatioScale::Fixed(a) if a > 0.0 => Ok(a),
            RatioScale::Fixed(a) => Err(invalid("a", format!("scale {a} must be positive"))),
        }
    }
}

fn axes(seg: &SegmentationParams, ts: f64, kind: RdmKind, values: Array2<Complex64>) -> Rdm {
    let n = values.nrows();
    Rdm {
        values,
        delay_bin_s: ts,
        doppler_bin_hz: 1.0 / ((seg.hop() * n) as f64 * ts),
        kind,
        origin: RdmOrigin::Vcp,
    }
}

fn check(x: &Array2<Complex64>, s: &Array2<Complex64>) -> Result<()> {
    if x.dim() != s.dim() {
        return Err(Error::ShapeMismatch {
            expected: s.dim(),
            actual: x.dim(),
        });
    }
    Ok(())
}

/// Guarded ratio RDM: terms with `|a S_n[m]| < 1` are dropped, the rest
/// contribute `X / (a S)`.
pub fn rdm_ratio_vcp(x: &Array2<Complex64>, s: &Array2<Complex64>, a: f64, seg: &SegmentationParams, ts: f64) -> Result<Rdm> {
    check(x, s)?;
    if !(a > 0.0) {
        return Err(invalid("a", format!("scale {a} must be positive")));
    }
    let mut y = Array2::zeros(x.dim());
    Zip::from(&mut y).and(x).and(s).for_each(|o, xv, sv| {
        let d = sv * a;
        if d.norm_sqr() >= 1.0 {
            *o = xv / d;
        }
    });
    Ok(axes(seg, ts, RdmKind::Ratio, delay_doppler_transform(y)))
}

/// Fraction of ratio terms masked out for a given scale.
pub fn masked_fraction(s: &Array2<Complex64>, a: f64) -> f64 {
    let masked = s.iter().filter(|v| (*v * a).norm_sqr() < 1.0).count();
    masked as f64 / s.len() as f64
}

pub fn rdm_ccc_vcp(x: &Array2<Complex64>, s: &Array2<Complex64>, seg: &SegmentationParams, ts: f64) -> Result<Rdm> {
    check(x, s)?;
    let mut y = Array2::zeros(x.dim());
    Zip::from(&mut y).and(x).and(s).for_each(|o, xv, sv| *o = xv * sv.conj());
    Ok(axes(seg, ts, RdmKind::Ccc, delay_doppler_transform(y)))
}

/// Segmentation, VCP and reference spectra bound to one transmit block.
#[derive(Debug, Clone)]
pub struct VcpSensor {
    pub seg: SegmentationParams,
    pub reference: Reference,
    ts: f64,
}

impl VcpSensor {
    pub fn new(tx: &TimeSignal, seg: SegmentationParams, params: &SystemParams) -> Result<Self> {
        let reference = reference_segments(tx, &seg)?;
        Ok(VcpSensor {
            seg,
            reference,
            ts: params.ts(),
        })
    }

    pub fn n_tilde(&self) -> usize {
        self.reference.freq.nrows()
    }

    /// Steps 1-3: segment, add the VCP and transform.
    pub fn spectra(&self, rx: &[Complex64]) -> Result<Array2<Complex64>> {
        let blocks = segment_samples(rx, &self.seg)?;
        let blocks = add_vcp_samples(&blocks, rx, &self.seg)?;
        Ok(subblock_dft(&blocks))
    }

    pub fn ratio(&self, x: &Array2<Complex64>, a: f64) -> Result<Rdm> {
        rdm_ratio_vcp(x, &self.reference.freq, a, &self.seg, self.ts)
    }

    pub fn ccc(&self, x: &Array2<Complex64>) -> Result<Rdm> {
        rdm_ccc_vcp(x, &self.reference.freq, &self.seg, self.ts)
    }
}
