//! Two-dimensional cell-averaging CFAR over an RDM.
//!
//! Both axes wrap, so every cell sees the same reference window:
//!
//! ```text
//!   +-----------------------+   reference ring: (2(nr+ng)+1)^2 box
//!   |   +---------------+   |   minus the (2ng+1)^2 guard box
//!   |   |     guard     |   |
//!   |   |       *       |   |   * = cell under test
//!   |   +---------------+   |
//!   +-----------------------+
//! ```

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::channel::TargetSet;
use crate::error::{invalid, Error, Result};
use crate::rdm::Rdm;
use crate::waveform::SystemParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CfarParams {
    pub pf: f64,
    pub ng_k: usize,
    pub ng_l: usize,
    pub nr_k: usize,
    pub nr_l: usize,
}

impl Default for CfarParams {
    fn default() -> Self {
        CfarParams {
            pf: 1e-3,
            ng_k: 3,
            ng_l: 3,
            nr_k: 2,
            nr_l: 5,
        }
    }
}

impl CfarParams {
    /// Full window extent (Doppler, delay).
    pub fn window(&self) -> (usize, usize) {
        (2 * (self.nr_k + self.ng_k) + 1, 2 * (self.nr_l + self.ng_l) + 1)
    }

    /// Number of reference cells `|Omega|`.
    pub fn omega(&self) -> usize {
        let (wk, wl) = self.window();
        wk * wl - (2 * self.ng_k + 1) * (2 * self.ng_l + 1)
    }

    /// Threshold multiplier `|Omega| (pf^{-1/|Omega|} - 1)`.
    pub fn beta(&self) -> f64 {
        let n = self.omega() as f64;
        // pf^{-1/n} - 1 = expm1(-ln(pf) / n)
        n * (-self.pf.ln() / n).exp_m1()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pf > 0.0 && self.pf < 1.0) {
            return Err(invalid("pf", format!("{} outside (0, 1)", self.pf)));
        }
        if self.omega() == 0 {
            return Err(invalid("nr_k/nr_l", "reference window is empty"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub k_star: usize,
    pub l_star: usize,
    pub power: f64,
    pub threshold: f64,
    /// Delay estimate `l* Ts` (s).
    pub tau_hat: f64,
    /// Doppler estimate (Hz); bins in the upper half map to negative values.
    pub nu_hat: f64,
}

/// Cyclic box sums of `p` via a prefix-sum table over the tiled map.
struct BoxSum {
    table: Array2<f64>,
    dims: (usize, usize),
}

impl BoxSum {
    fn new(p: &Array2<f64>) -> Self {
        let (nk, nl) = p.dim();
        // Two periods per axis cover every wrapped window.
        let mut table = Array2::zeros((2 * nk + 1, 2 * nl + 1));
        for i in 0..2 * nk {
            let mut row = 0.0;
            for j in 0..2 * nl {
                row += p[[i % nk, j % nl]];
                table[[i + 1, j + 1]] = table[[i, j + 1]] + row;
            }
        }
        BoxSum { table, dims: (nk, nl) }
    }

    /// Sum over rows `k-h..=k+h` and columns `l-w..=l+w`, cyclically.
    fn around(&self, k: usize, l: usize, h: usize, w: usize) -> f64 {
        let (nk, nl) = self.dims;
        let k0 = (k + nk - h % nk) % nk;
        let l0 = (l + nl - w % nl) % nl;
        let (k1, l1) = (k0 + 2 * h + 1, l0 + 2 * w + 1);
        let t = &self.table;
        t[[k1, l1]] - t[[k0, l1]] - t[[k1, l0]] + t[[k0, l0]]
    }
}

/// Every cell whose power reaches `beta` times the mean of its reference
/// ring is reported.
pub fn cfar_detect(rdm: &Rdm, params: &CfarParams) -> Result<Vec<Detection>> {
    params.validate()?;
    let (nk, nl) = rdm.values.dim();
    let (wk, wl) = params.window();
    if wk > nk || wl > nl {
        return Err(Error::Domain(format!(
            "CFAR window {wk}x{wl} does not fit a {nk}x{nl} RDM"
        )));
    }
    let p = rdm.power_map();
    let sums = BoxSum::new(&p);
    let beta = params.beta();
    let omega = params.omega() as f64;
    let (gk, gl) = (params.ng_k, params.ng_l);
    let (ok, ol) = (params.nr_k + gk, params.nr_l + gl);
    let mut out = Vec::new();
    for k in 0..nk {
        for l in 0..nl {
            let ring = sums.around(k, l, ok, ol) - sums.around(k, l, gk, gl);
            let threshold = beta * ring / omega;
            let power = p[[k, l]];
            if power >= threshold && power > 0.0 {
                out.push(Detection {
                    k_star: k,
                    l_star: l,
                    power,
                    threshold,
                    tau_hat: l as f64 * rdm.delay_bin_s,
                    nu_hat: rdm.signed_doppler(k) as f64 * rdm.doppler_bin_hz,
                });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub detected: usize,
    pub targets: usize,
    pub false_alarms: usize,
}

impl MatchResult {
    /// Fraction of targets detected; zero when there are no targets.
    pub fn pd(&self) -> f64 {
        if self.targets == 0 {
            0.0
        } else {
            self.detected as f64 / self.targets as f64
        }
    }
}

/// Score detections against the true targets' nearest bins with a cyclic
/// tolerance box of `tol = (dk, dl)` bins.
pub fn match_detections(
    dets: &[Detection],
    truth: &TargetSet,
    rdm: &Rdm,
    params: &SystemParams,
    tol: (usize, usize),
) -> MatchResult {
    let bins = crate::analysis::empirical::target_bins(rdm, truth, params);
    match_bins(dets, &bins, rdm.values.dim(), tol)
}

/// [`match_detections`] with the target bins given directly.
pub fn match_bins(dets: &[Detection], bins: &[(usize, usize)], dims: (usize, usize), tol: (usize, usize)) -> MatchResult {
    let near = |a: usize, b: usize, n: usize, t: usize| {
        let d = a.abs_diff(b);
        d.min(n - d) <= t
    };
    let hit = |d: &Detection, &(k, l): &(usize, usize)| near(d.k_star, k, dims.0, tol.0) && near(d.l_star, l, dims.1, tol.1);
    let detected = bins.iter().filter(|b| dets.iter().any(|d| hit(d, b))).count();
    let false_alarms = dets.iter().filter(|d| !bins.iter().any(|b| hit(d, b))).count();
    MatchResult {
        detected,
        targets: bins.len(),
        false_alarms,
    }
}
