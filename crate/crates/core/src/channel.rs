//! Multi-target echo synthesis.
//!
//! The echo is built on the oversampled RRC path: the critically sampled
//! block is interpolated by L, every target is delayed by a whole number of
//! high-rate samples (resolution `Ts/L`) and rotated by its Doppler ramp, the
//! sum is matched-filtered and decimated back to the critical rate, and AWGN
//! is added last. Positive velocity means an approaching target and a
//! positive Doppler shift.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::waveform::{RrcFilter, SystemParams, TimeSignal, C0};

/// Maximum target velocity used by the built-in scenarios (m/s).
pub const VMAX_MPS: f64 = 139.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target {
    /// Mean scattering power (linear).
    pub sigma_p2: f64,
    /// Range (m).
    pub range: f64,
    /// Radial velocity (m/s), positive when approaching.
    pub velocity: f64,
    /// Scattering coefficient before the `e^{-j2 pi nu tau}` rotation.
    pub alpha: Complex64,
}

impl Target {
    /// Target whose delay and normalized Doppler are given directly in
    /// critical-rate samples and cycles per sample.
    pub fn from_bins(sigma_p2: f64, delay_samples: f64, doppler_norm: f64, alpha: Complex64, params: &SystemParams) -> Self {
        Target {
            sigma_p2,
            range: delay_samples * C0 / (2.0 * params.bandwidth),
            velocity: doppler_norm * params.bandwidth * C0 / (2.0 * params.fc),
            alpha,
        }
    }

    pub fn tau(&self) -> f64 {
        2.0 * self.range / C0
    }

    pub fn nu(&self, params: &SystemParams) -> f64 {
        2.0 * self.velocity * params.fc / C0
    }

    pub fn delay_samples(&self, params: &SystemParams) -> f64 {
        self.tau() * params.bandwidth
    }

    pub fn doppler_norm(&self, params: &SystemParams) -> f64 {
        self.nu(params) * params.ts()
    }

    /// Coefficient including the delay-Doppler phase term.
    pub fn alpha_tilde(&self, params: &SystemParams) -> Complex64 {
        self.alpha * Complex64::from_polar(1.0, -2.0 * PI * self.nu(params) * self.tau())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TargetSet {
    pub targets: Vec<Target>,
}

impl TargetSet {
    pub fn new(targets: Vec<Target>) -> Self {
        TargetSet { targets }
    }

    pub fn sigma_p2_total(&self) -> f64 {
        self.targets.iter().map(|t| t.sigma_p2).sum()
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn union(&self, other: &TargetSet) -> TargetSet {
        let mut targets = self.targets.clone();
        targets.extend_from_slice(&other.targets);
        TargetSet { targets }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sigma_w2: f64,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_w2 >= 0.0) {
            return Err(invalid("sigma_w2", "noise power must be non-negative"));
        }
        Ok(())
    }
}

/// One explicitly configured target. Unset velocity is drawn from
/// U[-139, 139] m/s; unset alpha is drawn as CN(0, power).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub power_db: f64,
    pub range_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity_mps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScenarioSpec {
    /// Three targets at [0, -10, -20] dB, r ~ U[0, 10] m, v ~ U[-139, 139] m/s.
    Table2,
    /// Ten targets, ranges evenly spaced over [0, max_range_m], powers
    /// 0 dB, -20 dB x4, -30 dB x5.
    Detection10 {
        #[serde(default = "default_max_range")]
        max_range_m: f64,
    },
    Explicit { targets: Vec<TargetSpec> },
}

fn default_max_range() -> f64 {
    10.0
}

impl ScenarioSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioSpec::Table2 => "table2",
            ScenarioSpec::Detection10 { .. } => "detection10",
            ScenarioSpec::Explicit { .. } => "explicit",
        }
    }

    /// Per-target powers in dB, in draw order.
    pub fn powers_db(&self) -> Vec<f64> {
        match self {
            ScenarioSpec::Table2 => vec![0.0, -10.0, -20.0],
            ScenarioSpec::Detection10 { .. } => {
                let mut p = vec![0.0];
                p.extend([-20.0; 4]);
                p.extend([-30.0; 5]);
                p
            }
            ScenarioSpec::Explicit { targets } => targets.iter().map(|t| t.power_db).collect(),
        }
    }
}

fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn cn<R: Rng + ?Sized>(rng: &mut R, power: f64) -> Complex64 {
    let s = (power / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * s, im * s)
}

pub fn draw_targets<R: Rng + ?Sized>(scenario: &ScenarioSpec, rng: &mut R) -> Result<TargetSet> {
    let vel = Uniform::new_inclusive(-VMAX_MPS, VMAX_MPS);
    let powers = scenario.powers_db();
    let ranges: Vec<f64> = match scenario {
        ScenarioSpec::Table2 => {
            let r = Uniform::new_inclusive(0.0, 10.0);
            (0..powers.len()).map(|_| r.sample(rng)).collect()
        }
        ScenarioSpec::Detection10 { max_range_m } => {
            if !(*max_range_m >= 0.0) {
                return Err(invalid("max_range_m", "must be non-negative"));
            }
            (0..10).map(|i| max_range_m * i as f64 / 9.0).collect()
        }
        ScenarioSpec::Explicit { targets } => targets.iter().map(|t| t.range_m).collect(),
    };
    let mut out = Vec::with_capacity(powers.len());
    for (p, (&power_db, &range)) in powers.iter().zip(&ranges).enumerate() {
        if !(range >= 0.0) {
            return Err(invalid("range_m", format!("target {p} has negative range {range}")));
        }
        let sigma_p2 = db_to_lin(power_db);
        let spec = match scenario {
            ScenarioSpec::Explicit { targets } => Some(targets[p]),
            _ => None,
        };
        let velocity = match spec.and_then(|s| s.velocity_mps) {
            Some(v) => v,
            None => vel.sample(rng),
        };
        let alpha = match spec.and_then(|s| s.alpha) {
            Some([re, im]) => Complex64::new(re, im),
            None => cn(rng, sigma_p2),
        };
        out.push(Target {
            sigma_p2,
            range,
            velocity,
            alpha,
        });
    }
    Ok(TargetSet::new(out))
}

/// Noiseless echo through the oversampled RRC path, length `tx.len()`.
pub fn echo_noiseless(tx: &TimeSignal, targets: &TargetSet, params: &SystemParams, filter: &RrcFilter) -> Result<Vec<Complex64>> {
    let l = filter.config().oversample;
    let len = tx.len();
    let up = filter.interpolate_full(&tx.samples);
    let mut acc = vec![Complex64::new(0.0, 0.0); up.samples.len()];
    for (p, t) in targets.targets.iter().enumerate() {
        let delay_samples = t.delay_samples(params);
        let shift = (delay_samples * l as f64).round();
        if !(shift >= 0.0) || shift as usize >= len * l {
            return Err(Error::DelayOutOfBlock {
                index: p,
                delay_samples,
                block_len: len,
            });
        }
        let shift = shift as usize;
        let a = t.alpha_tilde(params);
        let step = 2.0 * PI * t.doppler_norm(params) / l as f64;
        for i in shift..acc.len() {
            let time = i as f64 - up.delay as f64;
            acc[i] += a * up.samples[i - shift] * Complex64::from_polar(1.0, step * time);
        }
    }
    Ok(filter.decimate_from(&acc, up.delay, len))
}

/// Received block: RRC-path echo plus CN(0, sigma_w2) noise.
pub fn generate_echo<R: Rng + ?Sized>(
    tx: &TimeSignal,
    targets: &TargetSet,
    noise: &NoiseSpec,
    params: &SystemParams,
    filter: &RrcFilter,
    rng: &mut R,
) -> Result<TimeSignal> {
    noise.validate()?;
    let mut x = echo_noiseless(tx, targets, params, filter)?;
    add_noise(&mut x, noise.sigma_w2, rng);
    Ok(TimeSignal::new(x, tx.rate, tx.oversample))
}

pub fn add_noise<R: Rng + ?Sized>(x: &mut [Complex64], sigma_w2: f64, rng: &mut R) {
    if sigma_w2 == 0.0 {
        return;
    }
    for v in x.iter_mut() {
        *v += cn(rng, sigma_w2);
    }
}

/// Unit-power CN(0, 1) vector.
pub fn unit_noise<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<Complex64> {
    (0..len).map(|_| cn(rng, 1.0)).collect()
}

/// Echo synthesized directly at the critical rate, bypassing the RRC path.
/// Every target delay must be a whole number of samples.
pub fn echo_critical(tx: &TimeSignal, targets: &TargetSet, params: &SystemParams) -> Result<Vec<Complex64>> {
    let len = tx.len();
    let mut x = vec![Complex64::new(0.0, 0.0); len];
    for (p, t) in targets.targets.iter().enumerate() {
        let ds = t.delay_samples(params);
        let d = ds.round();
        if (ds - d).abs() > 1e-6 {
            return Err(Error::Domain(format!("target {p} delay {ds} is not an integer number of samples")));
        }
        if !(d >= 0.0) || d as usize >= len {
            return Err(Error::DelayOutOfBlock {
                index: p,
                delay_samples: ds,
                block_len: len,
            });
        }
        let d = d as usize;
        let a = t.alpha_tilde(params);
        let step = 2.0 * PI * t.doppler_norm(params);
        for i in d..len {
            x[i] += a * tx.samples[i - d] * Complex64::from_polar(1.0, step * i as f64);
        }
    }
    Ok(x)
}
