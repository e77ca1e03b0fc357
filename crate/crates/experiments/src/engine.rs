//! Monte Carlo engine.
//!
//! Every trial draws one transmit block and one unit-power noise vector and
//! reuses them across all sweep points, front ends and noise levels (common
//! random numbers). Target draws restart from the same stream at every
//! point. RDMs are linear in the received block, so the clean and noise
//! parts are transformed once and combined per `gamma0`.

use anyhow::{bail, Context, Result};
use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use vcpsense::analysis::{empirical_sinr_at, empirical::target_bins, SinrOptions};
use vcpsense::channel::{draw_targets, echo_noiseless, unit_noise, ScenarioSpec};
use vcpsense::detector::{cfar_detect, match_bins, CfarParams};
use vcpsense::rdm::{Rdm, RdmKind};
use vcpsense::rng::{Stream, Streams};
use vcpsense::sensing_cos::{cos_demod, rdm_ccc_cos, rdm_ratio_cos};
use vcpsense::sensing_vcp::{RatioScale, SegmentationParams, VcpSensor};
use vcpsense::waveform::{modulate, DataGrid, RrcConfig, RrcFilter, SystemParams, TimeSignal};

pub const KINDS: [RdmKind; 2] = [RdmKind::Ratio, RdmKind::Ccc];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FrontendKind {
    Cos,
    Vcp(SegmentationParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frontend {
    pub label: String,
    pub kind: FrontendKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub sweep_value: f64,
    /// Extra curve tag for points that form separate curves.
    pub tag: String,
    pub scenario: ScenarioSpec,
    pub frontends: Vec<Frontend>,
    pub gamma0_db: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    /// Linear empirical SINR.
    Sinr,
    Pd,
    Pfa,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    pub sinr: Option<SinrOptions>,
    pub cfar: Option<CfarParams>,
    /// False-alarm probabilities at which CFAR is run; empty means the
    /// `pf` of `cfar` only.
    pub pf_list: Vec<f64>,
    pub match_tol: (usize, usize),
}

impl Measure {
    fn pfs(&self) -> Vec<f64> {
        match (&self.cfar, self.pf_list.is_empty()) {
            (None, _) => Vec::new(),
            (Some(c), true) => vec![c.pf],
            (Some(_), false) => self.pf_list.clone(),
        }
    }
}

/// Identifies one per-trial scalar.
#[derive(Debug, Clone, PartialEq)]
pub struct Slot {
    pub point: usize,
    pub gamma: usize,
    pub frontend: usize,
    pub kind: RdmKind,
    pub pf: Option<usize>,
    pub metric: Metric,
}

#[derive(Debug, Clone)]
pub struct Plan {
    pub params: SystemParams,
    pub points: Vec<Point>,
    pub measure: Measure,
    pub rrc: RrcConfig,
}

/// Per-trial values, one row per trial, columns following [`Plan::slots`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub slots: Vec<Slot>,
    pub values: Vec<Vec<f64>>,
}

impl Plan {
    pub fn slots(&self) -> Vec<Slot> {
        let pfs = self.measure.pfs();
        let mut out = Vec::new();
        for (pi, p) in self.points.iter().enumerate() {
            for gi in 0..p.gamma0_db.len() {
                for fi in 0..p.frontends.len() {
                    for kind in KINDS {
                        let base = Slot {
                            point: pi,
                            gamma: gi,
                            frontend: fi,
                            kind,
                            pf: None,
                            metric: Metric::Sinr,
                        };
                        if self.measure.sinr.is_some() {
                            out.push(base.clone());
                        }
                        for k in 0..pfs.len() {
                            for metric in [Metric::Pd, Metric::Pfa] {
                                out.push(Slot {
                                    pf: Some(k),
                                    metric,
                                    ..base.clone()
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.points.is_empty() {
            bail!("plan has no sweep points");
        }
        for p in &self.points {
            if p.frontends.is_empty() || p.gamma0_db.is_empty() {
                bail!("sweep point {} has no front ends or no gamma0 values", p.sweep_value);
            }
            for f in &p.frontends {
                if let FrontendKind::Vcp(seg) = f.kind {
                    seg.n_tilde(self.params.total_samples())
                        .with_context(|| format!("front end {}", f.label))?;
                }
            }
        }
        for pf in self.measure.pfs() {
            if !(pf > 0.0 && pf < 1.0) {
                bail!("pf {pf} outside (0, 1)");
            }
        }
        Ok(())
    }

    /// Run `trials` trials in parallel; row `t` always holds trial `t`.
    pub fn run(&self, trials: usize, seed: u64) -> Result<RunOutput> {
        self.validate()?;
        let filter = RrcFilter::new(self.rrc)?;
        let streams = Streams::new(seed);
        let values = (0..trials)
            .into_par_iter()
            .map(|t| self.trial(t as u64, &streams, &filter))
            .collect::<Result<Vec<_>>>()?;
        Ok(RunOutput {
            slots: self.slots(),
            values,
        })
    }

    fn trial(&self, t: u64, streams: &Streams, filter: &RrcFilter) -> Result<Vec<f64>> {
        let params = &self.params;
        let tx = modulate(&DataGrid::random(params, &mut streams.rng(t, Stream::Data)), params)?;
        let noise = unit_noise(tx.len(), &mut streams.rng(t, Stream::Noise));
        let pfs = self.measure.pfs();
        let mut out = Vec::new();
        for point in &self.points {
            let targets = draw_targets(&point.scenario, &mut streams.rng(t, Stream::Targets))?;
            let clean = echo_noiseless(&tx, &targets, params, filter)?;
            let mut lins = Vec::with_capacity(point.frontends.len());
            for fe in &point.frontends {
                lins.push(linear_rdms(fe, &tx, &clean, &noise, params)?);
            }
            for &g_db in &point.gamma0_db {
                let sw = (params.sigma_d2 / 10f64.powf(g_db / 10.0)).sqrt();
                for lin in &lins {
                    let bins = target_bins(&lin[0].0, &targets, params);
                    for (ki, _) in KINDS.iter().enumerate() {
                        let (clean_rdm, noise_vals) = &lin[ki];
                        let rdm = combine(clean_rdm, noise_vals, sw);
                        if let Some(opts) = &self.measure.sinr {
                            out.push(empirical_sinr_at(&rdm, &bins, opts)?.sinr);
                        }
                        for &pf in &pfs {
                            let cfar = CfarParams {
                                pf,
                                ..self.measure.cfar.expect("pfs imply cfar")
                            };
                            let dets = cfar_detect(&rdm, &cfar)?;
                            let m = match_bins(&dets, &bins, rdm.values.dim(), self.measure.match_tol);
                            out.push(m.pd());
                            out.push(m.false_alarms as f64 / rdm.values.len() as f64);
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

pub fn combine(clean: &Rdm, noise: &Array2<Complex64>, sw: f64) -> Rdm {
    let mut r = clean.clone();
    r.values.zip_mut_with(noise, |c, n| *c += n * sw);
    r
}

/// `(clean RDM, unit-noise RDM values)` for the ratio and CCC maps.
pub fn linear_rdms(
    fe: &Frontend,
    tx: &TimeSignal,
    clean: &[Complex64],
    noise: &[Complex64],
    params: &SystemParams,
) -> Result<[(Rdm, Array2<Complex64>); 2]> {
    let wrap = |x: &[Complex64]| TimeSignal::new(x.to_vec(), tx.rate, tx.oversample);
    Ok(match fe.kind {
        FrontendKind::Cos => {
            let s = cos_demod(tx, params)?;
            let xc = cos_demod(&wrap(clean), params)?;
            let xn = cos_demod(&wrap(noise), params)?;
            [
                (rdm_ratio_cos(&xc, &s, params)?, rdm_ratio_cos(&xn, &s, params)?.values),
                (rdm_ccc_cos(&xc, &s, params)?, rdm_ccc_cos(&xn, &s, params)?.values),
            ]
        }
        FrontendKind::Vcp(seg) => {
            let sensor = VcpSensor::new(tx, seg, params)?;
            let a = RatioScale::Auto.resolve(params)?;
            let xc = sensor.spectra(clean)?;
            let xn = sensor.spectra(noise)?;
            [
                (sensor.ratio(&xc, a)?, sensor.ratio(&xn, a)?.values),
                (sensor.ccc(&xc)?, sensor.ccc(&xn)?.values),
            ]
        }
    })
}

/// Mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

pub fn summarize(x: &[f64]) -> Summary {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let stderr = if n > 1 {
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    Summary { mean, stderr, n }
}

/// Summary of a linear quantity expressed in dB (delta-method error).
pub fn summarize_db(x: &[f64]) -> Summary {
    let s = summarize(x);
    Summary {
        mean: 10.0 * s.mean.log10(),
        stderr: 10.0 / std::f64::consts::LN_10 * s.stderr / s.mean.abs(),
        n: s.n,
    }
}

impl RunOutput {
    pub fn column(&self, i: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[i]).collect()
    }

    /// Index of the slot matching all given fields.
    pub fn find(&self, point: usize, gamma: usize, frontend: usize, kind: RdmKind, pf: Option<usize>, metric: Metric) -> Option<usize> {
        self.slots.iter().position(|s| {
            s.point == point && s.gamma == gamma && s.frontend == frontend && s.kind == kind && s.pf == pf && s.metric == metric
        })
    }
}
