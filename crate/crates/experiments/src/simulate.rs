//! Single-trial simulation of a configuration: the RDMs of every front end
//! and kind at every `gamma0`.

use anyhow::Result;
use vcpsense::analysis::empirical::target_bins;
use vcpsense::analysis::{empirical_sinr_at, SinrMeasurement};
use vcpsense::channel::{draw_targets, echo_noiseless, unit_noise};
use vcpsense::rdm::{Rdm, RdmKind};
use vcpsense::rng::{Stream, Streams};
use vcpsense::waveform::{modulate, DataGrid, RrcConfig, RrcFilter};

use crate::config::{ExperimentConfig, SegmentationEntry};
use crate::engine::{combine, linear_rdms, Frontend, FrontendKind, KINDS};

pub struct Snapshot {
    pub frontend: String,
    pub kind: RdmKind,
    pub gamma0_db: f64,
    pub rdm: Rdm,
    pub sinr: SinrMeasurement,
}

impl Snapshot {
    /// File stem used by the CLI when dumping the map.
    pub fn stem(&self) -> String {
        format!("rdm_{}_{}_g{}", self.frontend, self.kind.as_str(), self.gamma0_db)
    }
}

pub fn frontends(cfg: &ExperimentConfig) -> Vec<Frontend> {
    cfg.segmentation
        .iter()
        .map(|s| Frontend {
            label: s.label(),
            kind: match s {
                SegmentationEntry::FollowComm(_) => FrontendKind::Cos,
                SegmentationEntry::Explicit(seg) => FrontendKind::Vcp(*seg),
            },
        })
        .collect()
}

/// Run trial `trial` of `cfg`.
pub fn simulate(cfg: &ExperimentConfig, trial: u64) -> Result<Vec<Snapshot>> {
    cfg.validate()?;
    let params = &cfg.system;
    let filter = RrcFilter::new(RrcConfig::default())?;
    let streams = Streams::new(cfg.seed);
    let tx = modulate(&DataGrid::random(params, &mut streams.rng(trial, Stream::Data)), params)?;
    let noise = unit_noise(tx.len(), &mut streams.rng(trial, Stream::Noise));
    let targets = draw_targets(&cfg.scenario, &mut streams.rng(trial, Stream::Targets))?;
    let clean = echo_noiseless(&tx, &targets, params, &filter)?;
    let mut out = Vec::new();
    for fe in frontends(cfg) {
        let lin = linear_rdms(&fe, &tx, &clean, &noise, params)?;
        let bins = target_bins(&lin[0].0, &targets, params);
        for g in cfg.noise.gamma0_db(params.sigma_d2) {
            let sw = (params.sigma_d2 / 10f64.powf(g / 10.0)).sqrt();
            for (ki, kind) in KINDS.iter().enumerate() {
                let rdm = combine(&lin[ki].0, &lin[ki].1, sw);
                let sinr = empirical_sinr_at(&rdm, &bins, &cfg.sinr)?;
                out.push(Snapshot {
                    frontend: fe.label.clone(),
                    kind: *kind,
                    gamma0_db: g,
                    rdm,
                    sinr,
                });
            }
        }
    }
    Ok(out)
}
