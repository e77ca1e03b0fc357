use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rdm::RdmKind;
use crate::sensing_vcp::SegmentationParams;
use crate::waveform::C0;

/// Heavy-tail penalty of the guarded Gaussian ratio,
/// `b(eps) = 2 ln(2(1-eps) / (e sqrt(eps(2-eps))))`.
pub fn b_penalty(epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    let arg = 2.0 * (1.0 - epsilon) / (std::f64::consts::E * (epsilon * (2.0 - epsilon)).sqrt());
    Ok(2.0 * arg.ln())
}

/// Same penalty written as `2 (ln(2(1-eps) / sqrt(eps(2-eps))) - 1)`.
pub fn b_penalty_expanded(epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    let arg = 2.0 * (1.0 - epsilon) / (epsilon * (2.0 - epsilon)).sqrt();
    Ok(2.0 * (arg.ln() - 1.0))
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain(format!("epsilon {epsilon} outside (0, 1)")));
    }
    Ok(())
}

/// Scale at which `P(|a S| < 1) = 1/I` for `S ~ CN(0, sigma_d2)`:
/// `a_c = 1 / (sigma_d sqrt(ln(I / (I - 1))))`.
pub fn a_critical(sigma_d2: f64, total: usize) -> Result<f64> {
    if total < 2 {
        return Err(Error::Domain(format!("block length {total} must be at least 2")));
    }
    if !(sigma_d2 > 0.0) {
        return Err(Error::Domain(format!("sigma_d2 {sigma_d2} must be positive")));
    }
    let i = total as f64;
    // ln(I/(I-1)) = -ln(1 - 1/I), evaluated without cancellation.
    let l = -(-1.0 / i).ln_1p();
    Ok(1.0 / (sigma_d2.sqrt() * l.sqrt()))
}

/// Which framework a SINR evaluation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "framework", rename_all = "lowercase")]
pub enum Layout {
    Vcp {
        total: usize,
        seg: SegmentationParams,
    },
    Cos {
        m: usize,
        n: usize,
        q: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinrInputs {
    /// `sigma_d2 / sigma_w2` (linear).
    pub gamma0: f64,
    /// Total target power (linear).
    pub sigma_p2: f64,
    /// Tail probability for `b`; defaults to one over the RDM size.
    pub epsilon: Option<f64>,
    pub layout: Layout,
}

struct VcpDims {
    total: f64,
    m: f64,
    q: f64,
    qb: f64,
    cells: f64,
    b: f64,
}

impl SinrInputs {
    fn check(&self) -> Result<()> {
        if !(self.gamma0 > 0.0 && self.gamma0.is_finite()) {
            return Err(invalid("gamma0", format!("{} must be positive and finite", self.gamma0)));
        }
        if !(self.sigma_p2 > 0.0) {
            return Err(invalid("sigma_p2", format!("{} must be positive", self.sigma_p2)));
        }
        Ok(())
    }

    fn vcp(&self) -> Result<VcpDims> {
        self.check()?;
        let Layout::Vcp { total, seg } = self.layout else {
            return Err(Error::Unsupported {
                op: "VCP SINR",
                what: "a COS layout".into(),
            });
        };
        let n_tilde = seg.n_tilde(total)?;
        let cells = (seg.m_tilde * n_tilde) as f64;
        let b = b_penalty(self.epsilon.unwrap_or(1.0 / cells))?;
        Ok(VcpDims {
            total: total as f64,
            m: seg.m_tilde as f64,
            q: seg.q_tilde as f64,
            qb: seg.q_bar as f64,
            cells,
            b,
        })
    }

    /// `(M N, b)` for the COS layout.
    fn cos(&self) -> Result<(f64, f64)> {
        self.check()?;
        let Layout::Cos { m, n, .. } = self.layout else {
            return Err(Error::Unsupported {
                op: "COS SINR",
                what: "a VCP layout".into(),
            });
        };
        let cells = (m * n) as f64;
        let b = b_penalty(self.epsilon.unwrap_or(1.0 / cells))?;
        Ok((cells, b))
    }

    fn snr(&self) -> f64 {
        self.gamma0 * self.sigma_p2
    }
}

/// Ratio-RDM SINR of the sub-block framework.
pub fn sinr_ratio_vcp(inp: &SinrInputs) -> Result<f64> {
    let d = inp.vcp()?;
    let r = d.q / d.m;
    Ok(d.cells / ((r + (1.0 + r) / inp.snr()) * d.b))
}

/// CCC-RDM SINR of the sub-block framework.
pub fn sinr_ccc_vcp(inp: &SinrInputs) -> Result<f64> {
    let d = inp.vcp()?;
    let r = d.q / d.m;
    Ok((d.cells + 1.0) / (r + (1.0 + r) / inp.snr() + 1.0))
}

/// Low-SNR approximation of [`sinr_ratio_vcp`] with the unfloored sub-block
/// count `(I - Q~ - Q-) / (M~ - Q-)`.
pub fn sinr_ratio_vcp_low(inp: &SinrInputs) -> Result<f64> {
    let d = inp.vcp()?;
    let n = (d.total - d.q - d.qb) / (d.m - d.qb);
    Ok(d.m * n * inp.snr() / ((1.0 + d.q / d.m) * d.b))
}

/// High-SNR ceiling of [`sinr_ratio_vcp`]: `I / ((1 - Q-/M~)(Q~/M~) b)`.
pub fn sinr_ratio_vcp_high(inp: &SinrInputs) -> Result<f64> {
    let d = inp.vcp()?;
    Ok(d.total / ((1.0 - d.qb / d.m) * (d.q / d.m) * d.b))
}

/// High-SNR ceiling of [`sinr_ccc_vcp`]: `I / ((1 - Q-/M~)(1 + Q~/M~))`.
pub fn sinr_ccc_vcp_saturation(inp: &SinrInputs) -> Result<f64> {
    let d = inp.vcp()?;
    Ok(d.total / ((1.0 - d.qb / d.m) * (1.0 + d.q / d.m)))
}

/// COS SINR for either RDM kind.
pub fn sinr_cos(inp: &SinrInputs, kind: RdmKind) -> Result<f64> {
    let (cells, b) = inp.cos()?;
    let snr = inp.snr();
    Ok(match kind {
        RdmKind::Ratio => cells * snr / b,
        RdmKind::Ccc => (cells + 1.0) * snr / (1.0 + snr),
    })
}

/// `gamma0` above which the sub-block ratio RDM falls below the COS one:
/// `(1 + Q/M) / ((1 - Q-/M~)(Q~/M~) sigma_P2)`.
pub fn ratio_crossover_gamma0(m: usize, q: usize, seg: &SegmentationParams, sigma_p2: f64) -> f64 {
    let (m, q) = (m as f64, q as f64);
    let (mt, qt, qb) = (seg.m_tilde as f64, seg.q_tilde as f64, seg.q_bar as f64);
    (1.0 + q / m) / ((1.0 - qb / mt) * (qt / mt) * sigma_p2)
}

/// Smallest VCP length covering round trips out to `r_max` metres (at least 1).
pub fn qtilde_from_range(r_max: f64, bandwidth: f64) -> usize {
    let samples = 2.0 * r_max * bandwidth / C0;
    (samples.ceil() as usize).max(1)
}

/// Largest sub-block length that keeps `v_max` inside the unambiguous
/// Doppler span: `floor(1 / (2 nu_max Ts)) + Q-` with `nu_max = 2 v_max fc / c`.
pub fn mtilde_from_vmax(v_max: f64, fc: f64, ts: f64, q_bar: usize) -> usize {
    let nu = 2.0 * v_max * fc / C0;
    (1.0 / (2.0 * nu * ts)).floor() as usize + q_bar
}

pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Closed-form and measured SINR for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinrReport {
    pub label: String,
    pub theoretical: f64,
    pub theoretical_db: f64,
    pub empirical: f64,
    pub empirical_db: f64,
    pub inputs: SinrInputs,
}

impl SinrReport {
    pub fn new(label: impl Into<String>, theoretical: f64, empirical: f64, inputs: SinrInputs) -> Self {
        SinrReport {
            label: label.into(),
            theoretical,
            theoretical_db: to_db(theoretical),
            empirical,
            empirical_db: to_db(empirical),
            inputs,
        }
    }
}
