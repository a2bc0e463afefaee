//! Experiment configuration: a TOML file with one section per subsystem,
//! dotted-key command-line overrides, and strict unknown-key rejection.
//!
//! The defaults are the desk-scale reference profile: a 32-element
//! half-wavelength ULA over [-180°, 0°], a 64-bin grid, pseudo-inverse
//! codebook, 10 dB operating SNR, Gaussian mobility with σ_φ² = 0.75 deg²,
//! γ = 0.03, and 500-slot episodes.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::BaselineConfig;
use crate::codebook::{AngularGrid, CodebookMode};
use crate::geometry::ArrayConfig;
use crate::mobility::{Boundary, MobilityModel};
use crate::policy::SelectionScope;
use crate::sim::Algorithm;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    /// Number of grid bins Δ (power of two; the codebook has log₂Δ levels).
    pub n_bins: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { n_bins: 64 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CodebookSection {
    pub mode: CodebookMode,
}

impl Default for CodebookSection {
    fn default() -> Self {
        Self {
            mode: CodebookMode::PseudoInverse,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelSection {
    /// Operating SNR in dB; the noise variance is 10^(-snr_db/10).
    pub snr_db: f64,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self { snr_db: 10.0 }
    }
}

/// Which increment process drives the AoA.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MobilityKind {
    Predictable,
    Gaussian,
    BernoulliJump,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MobilitySection {
    pub model: MobilityKind,
    /// Predictable: velocity in bins per slot (V = ν·δ).
    pub nu: f64,
    /// Gaussian: increment variance in deg².
    pub sigma_phi_sq: f64,
    /// Bernoulli: jump size in whole bins (the 5° reference jump rounds to
    /// β = 2 bins at δ = 2.8125°).
    pub beta: i64,
    /// Bernoulli: per-slot jump probability.
    pub p: f64,
    /// Trajectory behavior at the range edges.
    pub boundary: Boundary,
}

impl Default for MobilitySection {
    fn default() -> Self {
        Self {
            model: MobilityKind::Gaussian,
            nu: 0.1,
            sigma_phi_sq: 0.75,
            beta: 2,
            p: 0.01,
            boundary: Boundary::Wrap,
        }
    }
}

impl MobilitySection {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::Config {
                field: "mobility.p".into(),
                message: format!("must be in [0, 1], got {}", self.p),
            });
        }
        if self.sigma_phi_sq < 0.0 {
            return Err(Error::Config {
                field: "mobility.sigma_phi_sq".into(),
                message: format!("must be ≥ 0, got {}", self.sigma_phi_sq),
            });
        }
        self.model().validate()
    }

    pub fn model(&self) -> MobilityModel {
        match self.model {
            MobilityKind::Predictable => MobilityModel::Predictable { nu: self.nu },
            MobilityKind::Gaussian => MobilityModel::Gaussian {
                sigma_phi_sq: self.sigma_phi_sq,
            },
            MobilityKind::BernoulliJump => MobilityModel::BernoulliJump {
                beta: self.beta,
                p: self.p,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolicySection {
    /// Exploration/exploitation weight γ in the action rule.
    pub gamma: f64,
    /// Grid size of the offline mutual-information table.
    pub mi_table_points: usize,
    /// Beam-selection scope (all levels, or the two-level descent ablation).
    pub selection: SelectionScope,
}

impl Default for PolicySection {
    fn default() -> Self {
        Self {
            gamma: 0.03,
            mi_table_points: 101,
            selection: SelectionScope::AllLevels,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    /// Episode length T in beamforming slots.
    pub horizon: usize,
    /// Monte Carlo episode count.
    pub episodes: usize,
    /// Base seed; episode i uses RNG streams (2i, 2i+1) of this seed.
    pub seed: u64,
    pub algorithm: Algorithm,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            horizon: 500,
            episodes: 100,
            seed: 7,
            algorithm: Algorithm::Proposed,
        }
    }
}

/// Full experiment description, one TOML section per field.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub array: ArrayConfig,
    pub grid: GridSection,
    pub codebook: CodebookSection,
    pub channel: ChannelSection,
    pub mobility: MobilitySection,
    pub policy: PolicySection,
    pub baseline: BaselineConfig,
    pub run: RunSection,
}

impl ExperimentConfig {
    /// Noise variance σ² implied by the operating SNR (P_T = 1).
    pub fn sigma_sq(&self) -> f64 {
        10f64.powf(-self.channel.snr_db / 10.0)
    }

    pub fn angular_grid(&self) -> Result<AngularGrid> {
        AngularGrid::for_array(&self.array, self.grid.n_bins)
    }

    pub fn validate(&self) -> Result<()> {
        self.array.validate()?;
        self.angular_grid()?.validate()?;
        self.mobility.validate()?;
        self.baseline.validate()?;
        if self.run.horizon < 1 {
            return Err(Error::Config {
                field: "run.horizon".into(),
                message: "must be at least 1".into(),
            });
        }
        if self.run.episodes < 1 {
            return Err(Error::Config {
                field: "run.episodes".into(),
                message: "must be at least 1".into(),
            });
        }
        if self.policy.gamma < 0.0 {
            return Err(Error::Config {
                field: "policy.gamma".into(),
                message: format!("must be ≥ 0, got {}", self.policy.gamma),
            });
        }
        if self.policy.mi_table_points < 11 {
            return Err(Error::Config {
                field: "policy.mi_table_points".into(),
                message: "need at least 11 grid points".into(),
            });
        }
        Ok(())
    }

    /// Load a TOML config file (strict keys), apply `key.path=value`
    /// overrides, validate.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut doc: toml::Value = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::Config {
                    field: "config".into(),
                    message: format!("cannot read {}: {e}", p.display()),
                })?;
                toml::from_str(&text).map_err(|e| Error::Config {
                    field: "config".into(),
                    message: format!("{}: {e}", p.display()),
                })?
            }
            None => toml::Value::Table(Default::default()),
        };
        for ov in overrides {
            apply_override(&mut doc, ov)?;
        }
        let cfg: ExperimentConfig = doc.try_into().map_err(|e| Error::Config {
            field: "config".into(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Serialize the fully resolved configuration (for reproducibility
    /// headers in every output file).
    pub fn resolved_toml(&self) -> String {
        toml::to_string_pretty(self).unwrap_or_default()
    }
}

/// Apply one `section.key=value` override onto a parsed TOML document.
fn apply_override(doc: &mut toml::Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment.split_once('=').ok_or_else(|| Error::Config {
        field: assignment.into(),
        message: "override must look like section.key=value".into(),
    })?;
    let segments: Vec<&str> = path.split('.').collect();
    if segments.is_empty() || segments.iter().any(|s| s.is_empty()) {
        return Err(Error::Config {
            field: path.into(),
            message: "empty key segment".into(),
        });
    }
    let mut node = doc;
    for seg in &segments[..segments.len() - 1] {
        let table = node.as_table_mut().ok_or_else(|| Error::Config {
            field: path.into(),
            message: format!("`{seg}` is not a table"),
        })?;
        node = table
            .entry(seg.to_string())
            .or_insert(toml::Value::Table(Default::default()));
    }
    let table = node.as_table_mut().ok_or_else(|| Error::Config {
        field: path.into(),
        message: "parent is not a table".into(),
    })?;
    table.insert(segments[segments.len() - 1].to_string(), parse_scalar(raw));
    Ok(())
}

/// Interpret an override value as bool, integer, float, or string.
fn parse_scalar(raw: &str) -> toml::Value {
    if let Ok(b) = raw.parse::<bool>() {
        return toml::Value::Boolean(b);
    }
    if let Ok(i) = raw.parse::<i64>() {
        return toml::Value::Integer(i);
    }
    if let Ok(f) = raw.parse::<f64>() {
        return toml::Value::Float(f);
    }
    toml::Value::String(raw.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_reference_profile() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.array.n_antennas, 32);
        assert_eq!(cfg.grid.n_bins, 64);
        assert_eq!(cfg.channel.snr_db, 10.0);
        assert!((cfg.sigma_sq() - 0.1).abs() < 1e-15);
        assert_eq!(cfg.mobility.model, MobilityKind::Gaussian);
        assert_eq!(cfg.policy.gamma, 0.03);
        assert_eq!(cfg.run.horizon, 500);
    }

    #[test]
    fn overrides_reach_nested_fields() {
        let cfg = ExperimentConfig::load(
            None,
            &[
                "policy.gamma=0.005".into(),
                "channel.snr_db=20".into(),
                "mobility.model=bernoulli-jump".into(),
                "run.episodes=3".into(),
                "baseline.exhaustive_perfect=false".into(),
                "policy.selection=two-level".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.policy.gamma, 0.005);
        assert_eq!(cfg.channel.snr_db, 20.0);
        assert_eq!(cfg.mobility.model, MobilityKind::BernoulliJump);
        assert_eq!(cfg.run.episodes, 3);
        assert!(!cfg.baseline.exhaustive_perfect);
        assert_eq!(cfg.policy.selection, SelectionScope::TwoLevel);
    }

    #[test]
    fn unknown_key_is_rejected_by_name() {
        let err = ExperimentConfig::load(None, &["policy.gama=0.5".into()]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("gama"), "message should name the key: {msg}");
    }

    #[test]
    fn missing_file_error_names_the_path() {
        let err =
            ExperimentConfig::load(Some(Path::new("/nonexistent/exp.toml")), &[]).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/exp.toml"));
    }

    #[test]
    fn toml_round_trip_preserves_config() {
        let mut cfg = ExperimentConfig::default();
        cfg.policy.gamma = 0.3;
        cfg.mobility.model = MobilityKind::Predictable;
        cfg.run.algorithm = Algorithm::ScanWide;
        let text = cfg.resolved_toml();
        let back: ExperimentConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(ExperimentConfig::load(None, &["run.horizon=0".into()]).is_err());
        assert!(ExperimentConfig::load(None, &["policy.gamma=-1".into()]).is_err());
        assert!(ExperimentConfig::load(None, &["mobility.p=1.5".into()]).is_err());
        assert!(ExperimentConfig::load(None, &["baseline.p_min=0".into()]).is_err());
    }
}
