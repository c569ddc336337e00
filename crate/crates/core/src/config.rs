//! Experiment configuration files: strict JSON, one experiment per file.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::Backend;
use crate::error::{Error, Result};
use crate::experiments::{dense_grid, DeviceConfig, DqsConfig, VqeConfig};
use crate::gates::AnsatzVariant;
use crate::operators::Spin;
use crate::optimize::NelderMeadOptions;
use crate::presets::{self, Preset, StepRule};
use crate::target::RabiSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Level and transition tables of the hardware.
    Spectrum,
    /// Variational ground-state search over a coupling sweep.
    Vqe,
    /// Trotterized time evolution with fidelity accounting.
    Dqs,
    /// Exact dynamics at several boson truncations.
    Truncation,
    /// Each gate of a Trotter step (and the ansatz) scheduled and run alone.
    GatesCheck,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::Spectrum,
        ExperimentKind::Vqe,
        ExperimentKind::Dqs,
        ExperimentKind::Truncation,
        ExperimentKind::GatesCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Spectrum => "spectrum",
            ExperimentKind::Vqe => "vqe",
            ExperimentKind::Dqs => "dqs",
            ExperimentKind::Truncation => "truncation",
            ExperimentKind::GatesCheck => "gates-check",
        }
    }
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown experiment kind `{s}` (expected spectrum, vqe, dqs, truncation or gates-check)"
                ))
            })
    }
}

fn no_dephasing() -> Vec<Option<f64>> {
    vec![None]
}

fn one_step() -> StepRule {
    StepRule::Constant(1)
}

fn default_d_ref() -> usize {
    30
}

/// Everything one experiment run needs. Fields a kind does not use are
/// accepted and ignored so a single file can drive several kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Preset the config was derived from; informational only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub device: DeviceConfig,
    pub rabi: RabiSpec,
    #[serde(default)]
    pub backend: Backend,
    /// Coherence times in µs; `null` runs without dephasing.
    #[serde(default = "no_dephasing")]
    pub t2_us: Vec<Option<f64>>,
    /// Simulated times, units of 1/Omega.
    #[serde(default = "presets::default_time_grid")]
    pub times: Vec<f64>,
    #[serde(default = "one_step")]
    pub steps: StepRule,
    #[serde(default)]
    pub g_grid: Vec<f64>,
    #[serde(default)]
    pub optimizer: NelderMeadOptions,
    #[serde(default)]
    pub shots: Option<u64>,
    #[serde(default)]
    pub variant: AnsatzVariant,
    #[serde(default)]
    pub truncations: Vec<usize>,
    #[serde(default = "default_d_ref")]
    pub d_ref: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_preset(kind: ExperimentKind, preset: &Preset) -> Self {
        let times = if kind == ExperimentKind::Truncation {
            dense_grid(10.0, 0.05)
        } else {
            presets::default_time_grid()
        };
        let t2_us = match kind {
            ExperimentKind::Spectrum | ExperimentKind::Truncation | ExperimentKind::GatesCheck => no_dephasing(),
            ExperimentKind::Vqe | ExperimentKind::Dqs => preset.t2_us.clone(),
        };
        ExperimentConfig {
            kind,
            preset: Some(preset.name.to_string()),
            device: DeviceConfig::new(preset.hardware.clone()),
            rabi: preset.rabi,
            backend: Backend::default(),
            t2_us,
            times,
            steps: preset.steps,
            g_grid: preset.g_grid.clone(),
            optimizer: NelderMeadOptions::default(),
            shots: None,
            variant: AnsatzVariant::default(),
            truncations: preset.truncations.clone(),
            d_ref: preset.d_ref,
            seed: 0,
            out_dir: None,
        }
    }

    /// Parses and validates a config document.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the compact JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn validate(&self) -> Result<()> {
        self.device.hardware.validate()?;
        self.device.policy.validate()?;
        self.rabi.validate()?;
        self.steps.validate()?;
        self.optimizer.validate()?;
        if self.t2_us.is_empty() {
            return Err(Error::Config("t2_us must list at least one value (null for none)".into()));
        }
        if self.t2_us.iter().flatten().any(|t| !(*t > 0.0) || !t.is_finite()) {
            return Err(Error::Config("T2 values must be positive".into()));
        }
        if self.times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
            return Err(Error::Config("times must be finite and non-negative".into()));
        }
        if self.shots == Some(0) {
            return Err(Error::Config("shot count must be positive".into()));
        }
        match self.kind {
            ExperimentKind::Spectrum => {}
            ExperimentKind::Vqe => {
                if self.g_grid.is_empty() {
                    return Err(Error::Config("vqe needs a non-empty g_grid (--g)".into()));
                }
                if self.g_grid.iter().any(|g| !(*g >= 0.0) || !g.is_finite()) {
                    return Err(Error::Config("g_grid values must be >= 0".into()));
                }
                if self.device.hardware.s2 != Spin::HALF {
                    return Err(Error::Config("vqe needs a spin-1/2 atom carrier (s2 = 1/2)".into()));
                }
            }
            ExperimentKind::Dqs | ExperimentKind::GatesCheck => {
                if self.times.is_empty() {
                    return Err(Error::Config("time grid is empty".into()));
                }
            }
            ExperimentKind::Truncation => {
                if self.times.is_empty() {
                    return Err(Error::Config("time grid is empty".into()));
                }
                if self.truncations.is_empty() {
                    return Err(Error::Config("truncation study needs at least one truncation".into()));
                }
                if let Some(&d) = self.truncations.iter().find(|&&d| d < 2 || d >= self.d_ref) {
                    return Err(Error::Config(format!(
                        "truncation {d} must lie in 2..{} (below d_ref)",
                        self.d_ref
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn vqe_config(&self, t2_us: Option<f64>) -> VqeConfig {
        VqeConfig {
            device: self.device.clone(),
            rabi: self.rabi,
            g_grid: self.g_grid.clone(),
            backend: self.backend,
            t2_us,
            optimizer: self.optimizer,
            shots: self.shots,
            variant: self.variant,
            seed: self.seed,
        }
    }

    pub fn dqs_config(&self) -> DqsConfig {
        DqsConfig {
            device: self.device.clone(),
            rabi: self.rabi,
            times: self.times.clone(),
            steps: self.steps,
            backend: self.backend,
            t2_us: self.t2_us.clone(),
        }
    }
}
