//! Monte Carlo checks of the sub-block statistics and of the RDM
//! distributions.
//!
//! Both validators inject integer-delay targets at the critical rate
//! ([`echo_critical`]) so the comparison with theory is not blurred by the
//! RRC path. Target magnitudes are fixed at `sqrt(sigma_P2 / P)` with a
//! uniform phase.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::empirical::target_bins;
use super::theory::{a_critical, b_penalty};
use crate::channel::{echo_critical, unit_noise, Target, TargetSet};
use crate::error::{invalid, Error, Result};
use crate::rdm::Rdm;
use crate::rng::{Stream, Streams};
use crate::sensing_cos::sinc_kernel;
use crate::sensing_vcp::{add_vcp_samples, segment_samples, subblock_dft, SegmentationParams, VcpSensor};
use crate::waveform::{modulate, DataGrid, SystemParams, TimeSignal};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative, for variances.
    pub variance: f64,
    /// Absolute, for correlation magnitudes.
    pub correlation: f64,
    /// Absolute, for excess kurtosis.
    pub kurtosis: f64,
    /// Relative, for the CCC peak magnitude.
    pub peak: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            variance: 0.10,
            correlation: 0.02,
            kurtosis: 0.3,
            peak: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatCheck {
    pub name: String,
    pub empirical: f64,
    pub theory: f64,
    pub tolerance: f64,
    /// Whether `tolerance` is relative to `theory`.
    pub relative: bool,
    pub samples: usize,
    pub passed: bool,
}

impl StatCheck {
    fn new(name: impl Into<String>, empirical: f64, theory: f64, tolerance: f64, relative: bool, samples: usize) -> Self {
        let err = if relative {
            (empirical / theory - 1.0).abs()
        } else {
            (empirical - theory).abs()
        };
        StatCheck {
            name: name.into(),
            empirical,
            theory,
            tolerance,
            relative,
            samples,
            passed: err <= tolerance,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub checks: Vec<StatCheck>,
}

impl StatReport {
    pub fn get(&self, name: &str) -> Option<&StatCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Configuration shared by both validators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatSetup {
    pub params: SystemParams,
    pub seg: SegmentationParams,
    /// `sigma_d2 / sigma_w2` (linear).
    pub gamma0: f64,
    /// Total target power.
    pub sigma_p2: f64,
    pub n_targets: usize,
    /// Largest Doppler bin (VCP grid) drawn for a target.
    pub max_doppler_bin: usize,
    /// Kernel lags `m1 - m2` checked for the interference term.
    pub z_lags: Vec<usize>,
    pub tolerances: Tolerances,
}

impl StatSetup {
    fn sigma_w2(&self) -> f64 {
        self.params.sigma_d2 / self.gamma0
    }

    /// Target power actually injected.
    fn power(&self) -> f64 {
        if self.n_targets == 0 {
            0.0
        } else {
            self.sigma_p2
        }
    }

    fn validate(&self, trials: usize) -> Result<usize> {
        self.params.validate()?;
        if trials < 2 {
            return Err(invalid("trials", "at least two trials are needed"));
        }
        if !(self.gamma0 > 0.0 && self.gamma0.is_finite()) {
            return Err(invalid("gamma0", "must be positive and finite"));
        }
        if self.n_targets > 0 && !(self.sigma_p2 > 0.0) {
            return Err(invalid("sigma_p2", "must be positive"));
        }
        let n = self.seg.n_tilde(self.params.total_samples())?;
        if n < 2 {
            return Err(invalid("I", "need at least two sub-blocks"));
        }
        Ok(n)
    }
}

/// Split VCP'd noiseless sub-blocks into the ideal cyclically shifted
/// signal and the interference `z_n[l]`, both in the time domain with shape
/// `(N~, M~)`.
pub fn decompose_subblock(
    rx_noiseless: &[Complex64],
    tx: &TimeSignal,
    targets: &TargetSet,
    seg: &SegmentationParams,
    params: &SystemParams,
) -> Result<(Array2<Complex64>, Array2<Complex64>)> {
    if rx_noiseless.len() != tx.len() {
        return Err(Error::LengthMismatch {
            expected: tx.len(),
            actual: rx_noiseless.len(),
        });
    }
    let blocks = segment_samples(rx_noiseless, seg)?;
    let y = add_vcp_samples(&blocks, rx_noiseless, seg)?.rows;
    let (nt, mt) = y.dim();
    let hop = seg.hop();
    let mut ideal = Array2::zeros((nt, mt));
    for (p, t) in targets.targets.iter().enumerate() {
        let ds = t.delay_samples(params);
        let d = ds.round();
        if (ds - d).abs() > 1e-6 || d < 0.0 {
            return Err(Error::Domain(format!("target {p} delay {ds} is not a whole sample count")));
        }
        let d = d as usize;
        if d > seg.q_tilde {
            return Err(Error::DelayOutOfBlock {
                index: p,
                delay_samples: ds,
                block_len: seg.q_tilde,
            });
        }
        let a = t.alpha_tilde(params);
        let step = 2.0 * PI * t.doppler_norm(params);
        for n in 0..nt {
            for l in 0..mt {
                let src = n * hop + (l + mt - d) % mt;
                let ph = Complex64::from_polar(1.0, step * (n * hop + l) as f64);
                ideal[[n, l]] += a * tx.samples[src] * ph;
            }
        }
    }
    let z = &y - &ideal;
    Ok((ideal, z))
}

/// Sample excess kurtosis `m4 / m2^2 - 3` about the sample mean.
pub fn excess_kurtosis(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let (mut m2, mut m4) = (0.0, 0.0);
    for v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m4 += d2 * d2;
    }
    m2 /= n;
    m4 /= n;
    m4 / (m2 * m2) - 3.0
}

/// Per-column complex lag-one correlation across consecutive rows,
/// accumulated over trials.
struct RowCorr {
    sum: Vec<Complex64>,
    count: usize,
}

impl RowCorr {
    fn new(m: usize) -> Self {
        RowCorr {
            sum: vec![Complex64::new(0.0, 0.0); m],
            count: 0,
        }
    }

    fn add(&mut self, x: &Array2<Complex64>) {
        for n in 0..x.nrows() - 1 {
            for (m, acc) in self.sum.iter_mut().enumerate() {
                *acc += x[[n, m]] * x[[n + 1, m]].conj();
            }
        }
        self.count += x.nrows() - 1;
    }

    /// `|E[x_n x_{n+1}^*]| / unit` estimated per column, debiased and
    /// averaged over columns. The lag-one phase depends on the column, so
    /// columns are not pooled. `var` is the per-cell power of `x`.
    fn estimate(&self, unit: f64, var: f64) -> f64 {
        let k = self.count as f64;
        let m = self.sum.len() as f64;
        let bias = (var / unit).powi(2) / k;
        let mean_sq = self
            .sum
            .iter()
            .map(|s| (s / (k * unit)).norm_sqr() - bias)
            .sum::<f64>()
            / m;
        mean_sq.max(0.0).sqrt()
    }

    /// Number of lag-one products accumulated.
    fn products(&self) -> usize {
        self.count * self.sum.len()
    }

    /// Normalized correlation magnitude.
    fn magnitude(&self, var: f64) -> f64 {
        self.estimate(var, var)
    }
}

struct Trial {
    tx: TimeSignal,
    targets: TargetSet,
    clean: Vec<Complex64>,
    noise: Vec<Complex64>,
}

fn draw_trial(setup: &StatSetup, n_tilde: usize, streams: &Streams, trial: u64) -> Result<Trial> {
    let params = &setup.params;
    let mut rng = streams.rng(trial, Stream::Data);
    let tx = modulate(&DataGrid::random(params, &mut rng), params)?;
    let mut rng = streams.rng(trial, Stream::Targets);
    let amp = (setup.sigma_p2 / setup.n_targets.max(1) as f64).sqrt();
    let span = (setup.seg.hop() * n_tilde) as f64;
    let targets = (0..setup.n_targets)
        .map(|_| {
            let d = rng.gen_range(0..=setup.seg.q_tilde) as f64;
            let k = rng.gen_range(-(setup.max_doppler_bin as i64)..=setup.max_doppler_bin as i64) as f64;
            let alpha = Complex64::from_polar(amp, rng.gen_range(0.0..2.0 * PI));
            Target::from_bins(amp * amp, d, k / span, alpha, params)
        })
        .collect();
    let targets = TargetSet::new(targets);
    let clean = echo_critical(&tx, &targets, params)?;
    let sw = setup.sigma_w2().sqrt();
    let mut rng = streams.rng(trial, Stream::Noise);
    let noise = unit_noise(tx.len(), &mut rng).into_iter().map(|w| w * sw).collect();
    Ok(Trial {
        tx,
        targets,
        clean,
        noise,
    })
}

fn vcp_spectra(x: &[Complex64], seg: &SegmentationParams) -> Result<Array2<Complex64>> {
    let b = segment_samples(x, seg)?;
    Ok(subblock_dft(&add_vcp_samples(&b, x, seg)?))
}

/// Variances (Lemma 1), lag-one correlations (Lemma 2) and the interference
/// correlation kernel (Lemma 3) over `trials` independent blocks.
pub fn validate_lemmas(setup: &StatSetup, trials: usize, seed: u64) -> Result<StatReport> {
    let n_tilde = setup.validate(trials)?;
    let seg = setup.seg;
    let mt = seg.m_tilde;
    let streams = Streams::new(seed);
    let (mut ps, mut pw, mut pz) = (0.0, 0.0, 0.0);
    let mut cs = RowCorr::new(mt);
    let mut cw = RowCorr::new(mt);
    let mut kz = vec![Complex64::new(0.0, 0.0); setup.z_lags.len()];
    let mut cells = 0usize;
    for t in 0..trials {
        let tr = draw_trial(setup, n_tilde, &streams, t as u64)?;
        let sref = subblock_dft(&segment_samples(&tr.tx.samples, &seg)?);
        let w = vcp_spectra(&tr.noise, &seg)?;
        let (_, z_time) = decompose_subblock(&tr.clean, &tr.tx, &tr.targets, &seg, &setup.params)?;
        let z = subblock_dft(&crate::sensing_vcp::SubBlockSet {
            rows: z_time,
            vcp_applied: true,
        });
        ps += sref.iter().map(|v| v.norm_sqr()).sum::<f64>();
        pw += w.iter().map(|v| v.norm_sqr()).sum::<f64>();
        pz += z.iter().map(|v| v.norm_sqr()).sum::<f64>();
        cs.add(&sref);
        cw.add(&w);
        for (acc, &lag) in kz.iter_mut().zip(&setup.z_lags) {
            for row in z.outer_iter() {
                for m in 0..mt {
                    *acc += row[m] * row[(m + lag) % mt].conj();
                }
            }
        }
        cells += sref.len();
    }
    let c = cells as f64;
    let (vs, vw, vz) = (ps / c, pw / c, pz / c);
    let tol = setup.tolerances;
    let sd2 = setup.params.sigma_d2;
    let sw2 = setup.sigma_w2();
    let (m, q, qb) = (mt as f64, seg.q_tilde as f64, seg.q_bar as f64);
    let mut checks = vec![
        StatCheck::new("var_s", vs, sd2, tol.variance, true, cells),
        StatCheck::new("var_w", vw, (1.0 + q / m) * sw2, tol.variance, true, cells),
        StatCheck::new("corr_s", cs.magnitude(vs), qb / m, tol.correlation, false, cs.products()),
        StatCheck::new("corr_w", cw.magnitude(vw), (q + qb) / m, tol.correlation, false, cw.products()),
        StatCheck::new("corr_w_normalized", cw.magnitude(vw), (q + qb) / (m + q), tol.correlation, false, cw.products()),
        StatCheck::new("cov_w_over_noise", cw.estimate(sw2, vw), (q + qb) / m, tol.correlation, false, cw.products()),
    ];
    if setup.n_targets == 0 {
        return Ok(StatReport { checks });
    }
    checks.push(StatCheck::new("var_z", vz, q * sd2 * setup.power() / m, tol.variance, true, cells));
    for (acc, &lag) in kz.iter().zip(&setup.z_lags) {
        let est = (acc / (c * vz)).norm_sqr() - 1.0 / c;
        let theory = sinc_kernel(seg.q_tilde, lag as f64 * q / m).norm() / q.sqrt();
        checks.push(StatCheck::new(
            format!("kernel_z_lag{lag}"),
            est.max(0.0).sqrt(),
            theory,
            tol.correlation,
            false,
            cells,
        ));
    }
    Ok(StatReport { checks })
}

/// Off-target cell statistics of both sub-block RDMs: excess kurtosis,
/// per-cell variance and the CCC peak magnitude.
pub fn validate_propositions(setup: &StatSetup, trials: usize, seed: u64) -> Result<StatReport> {
    let n_tilde = setup.validate(trials)?;
    let seg = setup.seg;
    let params = &setup.params;
    let streams = Streams::new(seed);
    let a = a_critical(params.sigma_d2, params.total_samples())?;
    let mut ratio_re = Vec::new();
    let mut ratio_im = Vec::new();
    let mut ccc_re = Vec::new();
    let mut ccc_im = Vec::new();
    let (mut peak_sum, mut peaks) = (0.0, 0usize);
    for t in 0..trials {
        let tr = draw_trial(setup, n_tilde, &streams, t as u64)?;
        let rx: Vec<Complex64> = tr.clean.iter().zip(&tr.noise).map(|(c, w)| c + w).collect();
        let sensor = VcpSensor::new(&tr.tx, seg, params)?;
        let x = sensor.spectra(&rx)?;
        let ratio = sensor.ratio(&x, a)?;
        let ccc = sensor.ccc(&x)?;
        collect_off_target(&ratio, &tr.targets, params, &mut ratio_re, &mut ratio_im);
        collect_off_target(&ccc, &tr.targets, params, &mut ccc_re, &mut ccc_im);
        for (tgt, (k, l)) in tr.targets.targets.iter().zip(target_bins(&ccc, &tr.targets, params)) {
            peak_sum += ccc.values[[k, l]].norm() / tgt.alpha.norm();
            peaks += 1;
        }
    }
    let tol = setup.tolerances;
    let (m, q) = (seg.m_tilde as f64, seg.q_tilde as f64);
    let sd2 = params.sigma_d2;
    let var_z = q * sd2 * setup.power() / m;
    let var_w = (1.0 + q / m) * setup.sigma_w2();
    let cells_per = (seg.m_tilde * n_tilde) as f64;
    let b = b_penalty(1.0 / cells_per)?;
    let ratio_theory = (var_z + var_w) * b / (a * a * sd2);
    let ccc_theory = sd2 * (var_z + var_w) + setup.power() * sd2 * sd2;
    let var = |re: &[f64], im: &[f64]| re.iter().chain(im).map(|v| v * v).sum::<f64>() / re.len() as f64;
    let n = ratio_re.len();
    let mut checks = vec![
        StatCheck::new("kurtosis_ratio_re", excess_kurtosis(&ratio_re), 0.0, tol.kurtosis, false, n),
        StatCheck::new("kurtosis_ratio_im", excess_kurtosis(&ratio_im), 0.0, tol.kurtosis, false, n),
        StatCheck::new("kurtosis_ccc_re", excess_kurtosis(&ccc_re), 0.0, tol.kurtosis, false, n),
        StatCheck::new("kurtosis_ccc_im", excess_kurtosis(&ccc_im), 0.0, tol.kurtosis, false, n),
        StatCheck::new("var_ratio", var(&ratio_re, &ratio_im), ratio_theory, tol.variance, true, n),
        StatCheck::new("var_ccc", var(&ccc_re, &ccc_im), ccc_theory, tol.variance, true, n),
    ];
    if peaks > 0 {
        checks.push(StatCheck::new(
            "peak_ccc",
            peak_sum / peaks as f64,
            sd2 * cells_per.sqrt(),
            tol.peak,
            true,
            peaks,
        ));
    }
    Ok(StatReport { checks })
}

fn collect_off_target(rdm: &Rdm, targets: &TargetSet, params: &SystemParams, re: &mut Vec<f64>, im: &mut Vec<f64>) {
    let bins = target_bins(rdm, targets, params);
    let (nk, nl) = rdm.values.dim();
    let near = |a: usize, b: usize, n: usize| {
        let d = a.abs_diff(b);
        d.min(n - d) <= 3
    };
    for ((k, l), v) in rdm.values.indexed_iter() {
        if bins.iter().any(|&(bk, bl)| near(k, bk, nk) && near(l, bl, nl)) {
            continue;
        }
        re.push(v.re);
        im.push(v.im);
    }
}
