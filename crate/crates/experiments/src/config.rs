//! TOML experiment configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};
use vcpsense::analysis::{SignalEstimate, SinrOptions};
use vcpsense::channel::ScenarioSpec;
use vcpsense::detector::CfarParams;
use vcpsense::sensing_vcp::SegmentationParams;
use vcpsense::waveform::SystemParams;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("cannot serialize config: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FollowComm {
    #[serde(rename = "follow-comm")]
    FollowComm,
}

/// One sensing front end: classical per-symbol processing, or the
/// sub-block framework with an explicit segmentation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SegmentationEntry {
    FollowComm(FollowComm),
    Explicit(SegmentationParams),
}

impl SegmentationEntry {
    pub fn label(&self) -> String {
        match self {
            SegmentationEntry::FollowComm(_) => "cos".into(),
            SegmentationEntry::Explicit(s) => format!("vcp{}", s.m_tilde),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NoiseSetting {
    /// `gamma0 = sigma_d2 / sigma_w2` values in dB.
    Sweep { gamma0_db: Vec<f64> },
    Fixed { sigma_w2: f64 },
}

impl NoiseSetting {
    /// Resolve to a list of `gamma0` values in dB.
    pub fn gamma0_db(&self, sigma_d2: f64) -> Vec<f64> {
        match self {
            NoiseSetting::Sweep { gamma0_db } => gamma0_db.clone(),
            NoiseSetting::Fixed { sigma_w2 } => vec![10.0 * (sigma_d2 / sigma_w2).log10()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub trials: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// Scales `N` (and trial counts of presets) relative to the full system.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    pub system: SystemParams,
    pub segmentation: Vec<SegmentationEntry>,
    pub scenario: ScenarioSpec,
    pub noise: NoiseSetting,
    pub cfar: CfarParams,
    #[serde(default = "default_sinr")]
    pub sinr: SinrOptions,
}

/// Noise-corrected 3x3 mainlobe energy; see [`SignalEstimate::Mainlobe`].
pub fn default_sinr() -> SinrOptions {
    SinrOptions {
        exclusion: (3, 3),
        estimate: SignalEstimate::mainlobe(1),
    }
}

impl ExperimentConfig {
    /// Desk-scale defaults: Table II system with N = 16, classical plus one
    /// sub-block front end, Table II targets at gamma0 = 20 dB.
    pub fn desk_default() -> Self {
        ExperimentConfig {
            seed: 1,
            trials: 50,
            preset: None,
            scale: None,
            system: SystemParams {
                n: 16,
                ..SystemParams::table2()
            },
            segmentation: vec![
                SegmentationEntry::FollowComm(FollowComm::FollowComm),
                SegmentationEntry::Explicit(SegmentationParams::new(600, 128, 150)),
            ],
            scenario: ScenarioSpec::Table2,
            noise: NoiseSetting::Sweep { gamma0_db: vec![20.0] },
            cfar: CfarParams::default(),
            sinr: default_sinr(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.trials < 1 {
            return bad("trials must be at least 1".into());
        }
        if let Some(s) = self.scale {
            if !(s > 0.0 && s.is_finite()) {
                return bad(format!("scale {s} must be positive and finite"));
            }
        }
        self.system.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.cfar.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        for seg in &self.segmentation {
            if let SegmentationEntry::Explicit(s) = seg {
                s.n_tilde(self.system.total_samples())
                    .map_err(|e| ConfigError::Invalid(e.to_string()))?;
            }
        }
        match &self.noise {
            NoiseSetting::Sweep { gamma0_db } => {
                if gamma0_db.is_empty() || gamma0_db.iter().any(|g| !g.is_finite()) {
                    return bad("gamma0_db must be a non-empty list of finite values".into());
                }
            }
            NoiseSetting::Fixed { sigma_w2 } => {
                if !(*sigma_w2 > 0.0 && sigma_w2.is_finite()) {
                    return bad(format!("sigma_w2 {sigma_w2} must be positive and finite"));
                }
            }
        }
        Ok(())
    }

    /// Parse TOML, logging a warning for every field that is not recognised.
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let (cfg, unknown) = parse_with_unknown(text)?;
        for path in unknown {
            log::warn!("ignoring unknown config field `{path}`");
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string_pretty(self)?)
    }
}

/// Parse and also return the paths of ignored fields.
pub fn parse_with_unknown(text: &str) -> Result<(ExperimentConfig, Vec<String>), ConfigError> {
    let de = toml::Deserializer::new(text);
    let mut unknown = Vec::new();
    let cfg: ExperimentConfig = serde_ignored::deserialize(de, |path| unknown.push(path.to_string()))?;
    cfg.validate()?;
    Ok((cfg, unknown))
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ExperimentConfig::from_toml_str(&text)
}

pub fn save_config(cfg: &ExperimentConfig, path: &Path) -> Result<(), ConfigError> {
    std::fs::write(path, cfg.to_toml_string()?).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })
}
