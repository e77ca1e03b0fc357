use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::channel::TargetSet;
use crate::error::{Error, Result};
use crate::rdm::Rdm;
use crate::waveform::SystemParams;

/// How the target power is read off the RDM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "estimator", rename_all = "kebab-case")]
pub enum SignalEstimate {
    /// `sum_p |V|^2` at each target's nearest bin, floor included.
    NearestBin,
    /// Energy in the union of `(2h+1) x (2h+1)` boxes around the nearest
    /// bins, minus a local floor for every box cell. Recovers the power of
    /// off-grid targets whose mainlobe straddles bins. The local floor is the
    /// mean over the cell's own Doppler row within `floor_span` delay bins,
    /// outside the exclusion boxes, so coloured noise is not counted as
    /// signal. Falls back to the row mean, then the global mean.
    Mainlobe {
        half_width: usize,
        #[serde(default = "default_floor_span")]
        floor_span: usize,
    },
}

fn default_floor_span() -> usize {
    16
}

impl SignalEstimate {
    pub fn mainlobe(half_width: usize) -> Self {
        SignalEstimate::Mainlobe {
            half_width,
            floor_span: default_floor_span(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinrOptions {
    /// Half-widths (Doppler, delay) of the box excluded around every target
    /// when averaging the interference-plus-noise floor.
    pub exclusion: (usize, usize),
    pub estimate: SignalEstimate,
}

impl Default for SinrOptions {
    fn default() -> Self {
        SinrOptions {
            exclusion: (3, 3),
            estimate: SignalEstimate::NearestBin,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrMeasurement {
    pub signal: f64,
    /// Mean IN power per cell.
    pub floor: f64,
    /// `signal / floor`; `+inf` when the floor is exactly zero.
    pub sinr: f64,
}

/// Cyclic boolean mask of boxes around the given bins.
fn box_mask(dims: (usize, usize), bins: &[(usize, usize)], half: (usize, usize)) -> Array2<bool> {
    let (nk, nl) = dims;
    let mut mask = Array2::from_elem(dims, false);
    let hk = half.0.min(nk / 2);
    let hl = half.1.min(nl / 2);
    for &(k, l) in bins {
        for dk in 0..=2 * hk {
            let kk = (k + nk + dk - hk) % nk;
            for dl in 0..=2 * hl {
                let ll = (l + nl + dl - hl) % nl;
                mask[[kk, ll]] = true;
            }
        }
    }
    mask
}

/// Nearest RDM bins of every target.
pub fn target_bins(rdm: &Rdm, truth: &TargetSet, params: &SystemParams) -> Vec<(usize, usize)> {
    truth
        .targets
        .iter()
        .map(|t| rdm.nearest_bin(t.tau(), t.nu(params)))
        .collect()
}

pub fn empirical_sinr(rdm: &Rdm, truth: &TargetSet, params: &SystemParams, opts: &SinrOptions) -> Result<SinrMeasurement> {
    if truth.is_empty() {
        return Err(Error::Domain("empirical SINR needs at least one target".into()));
    }
    empirical_sinr_at(rdm, &target_bins(rdm, truth, params), opts)
}

/// [`empirical_sinr`] with the target bins given directly.
pub fn empirical_sinr_at(rdm: &Rdm, bins: &[(usize, usize)], opts: &SinrOptions) -> Result<SinrMeasurement> {
    if bins.is_empty() {
        return Err(Error::Domain("empirical SINR needs at least one target".into()));
    }
    let power = rdm.power_map();
    let excl = box_mask(power.dim(), bins, opts.exclusion);
    let (mut sum, mut count) = (0.0, 0usize);
    for (p, &e) in power.iter().zip(excl.iter()) {
        if !e {
            sum += p;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::Domain("exclusion boxes cover the whole RDM".into()));
    }
    let floor = sum / count as f64;
    let signal = match opts.estimate {
        SignalEstimate::NearestBin => bins.iter().map(|&(k, l)| power[[k, l]]).sum(),
        SignalEstimate::Mainlobe { half_width, floor_span } => {
            let nl = power.ncols();
            let span = floor_span.min((nl - 1) / 2);
            let row_mean = |k: usize, cols: &mut dyn Iterator<Item = usize>| {
                let (s, n) = cols
                    .filter(|&l| !excl[[k, l]])
                    .fold((0.0, 0usize), |(s, n), l| (s + power[[k, l]], n + 1));
                (n > 0).then(|| s / n as f64)
            };
            let lobe = box_mask(power.dim(), bins, (half_width, half_width));
            let mut signal = 0.0;
            for ((k, l), &p) in power.indexed_iter() {
                if !lobe[[k, l]] {
                    continue;
                }
                let local = row_mean(k, &mut (0..=2 * span).map(|d| (l + nl + d - span) % nl))
                    .or_else(|| row_mean(k, &mut (0..nl)))
                    .unwrap_or(floor);
                signal += p - local;
            }
            signal
        }
    };
    let sinr = if floor == 0.0 {
        if signal > 0.0 {
            f64::INFINITY
        } else {
            f64::NAN
        }
    } else {
        signal / floor
    };
    Ok(SinrMeasurement { signal, floor, sinr })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdm::{RdmKind, RdmOrigin};
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn rdm(values: Array2<Complex64>) -> Rdm {
        Rdm {
            values,
            delay_bin_s: 1.0,
            doppler_bin_hz: 1.0,
            kind: RdmKind::Ratio,
            origin: RdmOrigin::Vcp,
        }
    }

    fn noise(dims: (usize, usize), rng: &mut ChaCha8Rng) -> Array2<Complex64> {
        Array2::from_shape_simple_fn(dims, || {
            Complex64::new(StandardNormal.sample(&mut *rng), StandardNormal.sample(&mut *rng))
        })
    }

    /// Straightforward reference: explicit cyclic distances per cell.
    fn brute(values: &Array2<Complex64>, bins: &[(usize, usize)], ex: (usize, usize)) -> f64 {
        let (nk, nl) = values.dim();
        let cyc = |a: usize, b: usize, n: usize| {
            let d = (a as isize - b as isize).rem_euclid(n as isize) as usize;
            d.min(n - d)
        };
        let mut floor = Vec::new();
        for k in 0..nk {
            for l in 0..nl {
                let near = bins.iter().any(|&(bk, bl)| cyc(k, bk, nk) <= ex.0 && cyc(l, bl, nl) <= ex.1);
                if !near {
                    floor.push(values[[k, l]].norm_sqr());
                }
            }
        }
        let f = floor.iter().sum::<f64>() / floor.len() as f64;
        let s: f64 = bins.iter().map(|&(k, l)| values[[k, l]].norm_sqr()).sum();
        s / f
    }

    #[test]
    fn test_matches_brute_force_on_toy_maps() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for trial in 0..20 {
            let v = noise((20, 16), &mut rng);
            let bins = vec![(trial % 20, (3 * trial) % 16), (19, 0)];
            let got = empirical_sinr_at(&rdm(v.clone()), &bins, &SinrOptions::default()).unwrap();
            assert_eq!(got.sinr, brute(&v, &bins, (3, 3)));
        }
    }

    #[test]
    fn test_noiseless_on_grid_target_is_infinite() {
        let mut v = Array2::zeros((8, 8));
        v[[2, 3]] = Complex64::new(8.0, 0.0);
        let m = empirical_sinr_at(&rdm(v), &[(2, 3)], &SinrOptions::default()).unwrap();
        assert_eq!(m.sinr, f64::INFINITY);
    }

    #[test]
    fn test_phantom_target_in_noise_is_unity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mean: f64 = (0..400)
            .map(|_| {
                empirical_sinr_at(&rdm(noise((16, 32), &mut rng)), &[(5, 9)], &SinrOptions::default())
                    .unwrap()
                    .sinr
            })
            .sum::<f64>()
            / 400.0;
        assert!((10.0 * mean.log10()).abs() < 1.0, "mean {mean}");
    }

    #[test]
    fn test_mainlobe_recovers_split_energy() {
        let mut v = Array2::zeros((16, 16));
        v[[4, 4]] = Complex64::new(2.0, 0.0);
        v[[4, 5]] = Complex64::new(2.0, 0.0);
        v[[10, 10]] = Complex64::new(0.1, 0.0);
        let opts = SinrOptions {
            estimate: SignalEstimate::mainlobe(1),
            ..SinrOptions::default()
        };
        let m = empirical_sinr_at(&rdm(v), &[(4, 4)], &opts).unwrap();
        let floor = 0.01 / (256.0 - 49.0);
        assert!((m.floor - floor).abs() < 1e-15);
        assert!((m.signal - 8.0).abs() < 1e-12);
    }

    #[test]
    fn test_mainlobe_subtracts_local_floor() {
        let mut v = Array2::from_elem((16, 16), Complex64::new(1.0, 0.0));
        for k in 3..6 {
            for l in 0..16 {
                v[[k, l]] = Complex64::new(2f64.sqrt(), 0.0);
            }
        }
        v[[4, 4]] = Complex64::new(3.0, 0.0);
        let opts = SinrOptions {
            estimate: SignalEstimate::mainlobe(1),
            ..SinrOptions::default()
        };
        let m = empirical_sinr_at(&rdm(v), &[(4, 4)], &opts).unwrap();
        assert!((m.signal - 7.0).abs() < 1e-12, "{}", m.signal);
        assert!((m.floor - 234.0 / 207.0).abs() < 1e-12);
    }

    #[test]
    fn test_exclusion_covering_everything_is_error() {
        let v = Array2::zeros((4, 4));
        assert!(empirical_sinr_at(&rdm(v), &[(0, 0)], &SinrOptions::default()).is_err());
    }
}
