//! Pipeline configuration: every tunable in one JSON document.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::expert::{ExpertFilterSpec, ExpertKind, PlannerParams};
use crate::metrics::MetricConfig;
use crate::reactive::{RolloutMode, SimConfig};
use crate::vocab::{GridSpec, PerturbThresholds, VocabConfig};

/// Fixed ego-to-camera transform plus opaque intrinsics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraSpec {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    #[serde(default)]
    pub intrinsics: serde_json::Value,
}

fn default_cameras() -> Vec<CameraSpec> {
    let intrinsics = serde_json::json!({"fx": 1545.0, "fy": 1545.0, "cx": 960.0, "cy": 560.0, "width": 1920, "height": 1120});
    [("cam_f0", 1.5, 0.0, 0.0), ("cam_l0", 1.2, 0.9, 0.96), ("cam_r0", 1.2, -0.9, -0.96)]
        .into_iter()
        .map(|(id, x, y, theta)| CameraSpec { id: id.into(), x, y, theta, intrinsics: intrinsics.clone() })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub master_seed: u64,
    pub rounds: usize,
    /// Candidates drawn per scenario and round; `None` splits the cleared
    /// set into five equal draws.
    pub per_round: Option<usize>,
    pub expert: ExpertKind,
    pub mode: RolloutMode,
    pub perturbation: PerturbThresholds,
    pub grid: GridSpec,
    pub vocab: VocabConfig,
    pub sim: SimConfig,
    pub metrics: MetricConfig,
    pub planner: PlannerParams,
    pub filter: ExpertFilterSpec,
    /// Per-component weights of the recovery matching distance.
    pub recovery_scales: [f64; 6],
    pub cameras: Vec<CameraSpec>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            master_seed: 0,
            rounds: 5,
            per_round: None,
            expert: ExpertKind::Planner,
            mode: RolloutMode::Reactive,
            perturbation: PerturbThresholds::default(),
            grid: GridSpec::default(),
            vocab: VocabConfig::default(),
            sim: SimConfig::default(),
            metrics: MetricConfig::default(),
            planner: PlannerParams::default(),
            filter: ExpertFilterSpec::default(),
            recovery_scales: [1.0; 6],
            cameras: default_cameras(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::Config("rounds must be at least 1".into()));
        }
        if self.per_round == Some(0) {
            return Err(Error::Config("per_round must be at least 1".into()));
        }
        if self.mode == RolloutMode::LogReplayEgo {
            return Err(Error::Config("generation mode must be reactive or nonreactive".into()));
        }
        if self.vocab.k == 0 || self.vocab.samples < self.vocab.k {
            return Err(Error::Config(format!("vocabulary needs 0 < k <= samples, got k={} samples={}", self.vocab.k, self.vocab.samples)));
        }
        if self.recovery_scales.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(Error::Config("recovery scales must be nonnegative".into()));
        }
        if self.cameras.is_empty() {
            return Err(Error::Config("camera rig is empty".into()));
        }
        self.perturbation.validate()?;
        self.grid.validate()?;
        self.sim.vehicle.validate().map_err(Error::Config)?;
        self.sim.lqr.validate().map_err(Error::Config)?;
        self.sim.traffic.validate().map_err(Error::Config)?;
        self.metrics.validate()?;
        self.planner.validate()?;
        self.filter.validate()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Error::Parse { path: path.into(), message: e.to_string() })?;
        let cfg: PipelineConfig =
            serde_json::from_value(value).map_err(|e| Error::Schema { path: path.into(), message: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical form: compact JSON with object keys sorted.
    pub fn canonical_json(&self) -> Result<String> {
        // `Value` maps are ordered by key
        Ok(serde_json::to_string(&serde_json::to_value(self)?)?)
    }

    /// Hex SHA-256 of the canonical form.
    pub fn hash(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.canonical_json()?.as_bytes())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        PipelineConfig::default().validate().unwrap();
    }

    #[test]
    fn hash_ignores_key_order() {
        let a: PipelineConfig = serde_json::from_str(r#"{"rounds": 3, "master_seed": 9}"#).unwrap();
        let b: PipelineConfig = serde_json::from_str(r#"{"master_seed": 9, "rounds": 3}"#).unwrap();
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        assert_ne!(a.hash().unwrap(), PipelineConfig::default().hash().unwrap());
        assert_eq!(a.hash().unwrap().len(), 64);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"roundz": 3}"#).is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        let cfg = PipelineConfig { rounds: 0, ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = PipelineConfig { mode: RolloutMode::LogReplayEgo, ..Default::default() };
        assert!(cfg.validate().is_err());
        let mut cfg = PipelineConfig::default();
        cfg.filter.ep_min = 1.5;
        assert!(cfg.validate().is_err());
    }
}
