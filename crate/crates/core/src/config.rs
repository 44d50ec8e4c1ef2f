//! Run configuration. Everything a run needs is in one TOML file; missing
//! fields take the reference-study defaults (thumb 5 deg, fingers 3 deg,
//! voxel 0.05, the seven standard weight cases).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::design::{NormalizationMode, SensitivitySource, Weights};
use crate::error::{Error, Result};
use crate::metrics::EvalContext;
use crate::model::{HandModel, ModelConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Voxel edge length for the sweep and the pair search.
    pub voxel_size: f64,
    pub thumb_step_deg: f64,
    pub finger_step_deg: f64,
    /// Resolution-study ladder, coarse to fine.
    pub study_resolutions_deg: Vec<f64>,
    pub study_voxel_sizes: Vec<f64>,
    pub out_dir: PathBuf,
    /// Record cache location; defaults to `<out_dir>/records.jsonl`.
    pub cache_path: Option<PathBuf>,
    /// Worker threads; 0 uses all cores.
    pub jobs: usize,
    pub normalization: NormalizationMode,
    pub z3_source: SensitivitySource,
    /// Raw weight vectors (c1, c2, c3); rescaled onto the simplex on use.
    pub cases: Vec<[f64; 3]>,
    pub model: ModelConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            voxel_size: 0.05,
            thumb_step_deg: 5.0,
            finger_step_deg: 3.0,
            study_resolutions_deg: vec![30.0, 15.0, 10.0, 5.0, 3.0, 2.0],
            study_voxel_sizes: vec![0.05, 0.025],
            out_dir: PathBuf::from("out"),
            cache_path: None,
            jobs: 0,
            normalization: NormalizationMode::default(),
            z3_source: SensitivitySource::default(),
            cases: vec![
                [0.33, 0.33, 0.33],
                [0.8, 0.1, 0.1],
                [0.1, 0.8, 0.1],
                [0.1, 0.1, 0.8],
                [0.4, 0.4, 0.2],
                [0.4, 0.2, 0.4],
                [0.2, 0.4, 0.4],
            ],
            model: ModelConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("bad config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.voxel_size.is_finite() && self.voxel_size > 0.0) {
            return Err(Error::Config(format!(
                "voxel_size must be positive, got {}",
                self.voxel_size
            )));
        }
        for (name, v) in [
            ("thumb_step_deg", self.thumb_step_deg),
            ("finger_step_deg", self.finger_step_deg),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        for v in &self.study_resolutions_deg {
            if !(v.is_finite() && *v > 0.0) {
                return Err(Error::Config(format!("study resolution {v} must be positive")));
            }
        }
        for v in &self.study_voxel_sizes {
            if !(v.is_finite() && *v > 0.0) {
                return Err(Error::Config(format!("study voxel size {v} must be positive")));
            }
        }
        if self.cases.is_empty() {
            return Err(Error::Config("at least one weight case is required".into()));
        }
        self.weight_cases()?;
        let _ = self.hand_model()?;
        Ok(())
    }

    /// The configured cases on the simplex (each rescaled to sum to 1).
    pub fn weight_cases(&self) -> Result<Vec<Weights>> {
        self.cases
            .iter()
            .map(|c| Weights::normalized(c[0], c[1], c[2]))
            .collect()
    }

    pub fn hand_model(&self) -> Result<HandModel> {
        HandModel::from_config(&self.model)
    }

    pub fn eval_context(&self) -> Result<EvalContext> {
        EvalContext::new(
            self.hand_model()?,
            self.thumb_step_deg,
            self.finger_step_deg,
            self.voxel_size,
        )
    }

    pub fn cache_path(&self) -> PathBuf {
        self.cache_path
            .clone()
            .unwrap_or_else(|| self.out_dir.join("records.jsonl"))
    }

    /// CI-speed preset: 15 deg thumb, 9 deg fingers, voxel 0.05.
    pub fn apply_coarse(&mut self) {
        self.thumb_step_deg = 15.0;
        self.finger_step_deg = 9.0;
        self.voxel_size = 0.05;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_match_the_study_settings() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.voxel_size, 0.05);
        assert_eq!(cfg.thumb_step_deg, 5.0);
        assert_eq!(cfg.finger_step_deg, 3.0);
        assert_eq!(cfg.cases.len(), 7);
        // The equal-weight case lands back on the simplex after rescaling.
        let w = cfg.weight_cases().unwrap()[0];
        assert!((w.c1() + w.c2() + w.c3() - 1.0).abs() < 1e-12);
        assert!((w.c1() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn toml_round_trip_and_overrides() {
        let text = r#"
            voxel_size = 0.025
            thumb_step_deg = 10.0
            jobs = 2
            cases = [[0.5, 0.25, 0.25]]
            normalization = "max-combined"
            z3_source = "thumb"
            [model]
            finger_lateral = [0.2, 0.0, -0.2, -0.4]
        "#;
        let cfg = RunConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.voxel_size, 0.025);
        assert_eq!(cfg.thumb_step_deg, 10.0);
        assert_eq!(cfg.finger_step_deg, 3.0);
        assert_eq!(cfg.jobs, 2);
        assert_eq!(cfg.cases.len(), 1);
        assert_eq!(cfg.normalization, NormalizationMode::MaxCombined);
        assert_eq!(cfg.z3_source, SensitivitySource::Thumb);
        let model = cfg.hand_model().unwrap();
        assert_eq!(model.finger_bases[0].translation.y, 0.2);

        let back = toml::to_string(&cfg).unwrap();
        let again = RunConfig::from_toml_str(&back).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn bad_configs_are_rejected() {
        assert!(RunConfig::from_toml_str("voxel_size = 0.0").is_err());
        assert!(RunConfig::from_toml_str("thumb_step_deg = -5.0").is_err());
        assert!(RunConfig::from_toml_str("cases = []").is_err());
        assert!(RunConfig::from_toml_str("cases = [[0.0, 0.0, 0.0]]").is_err());
        assert!(RunConfig::from_toml_str("no_such_field = 1").is_err());
    }

    #[test]
    fn coarse_preset() {
        let mut cfg = RunConfig::default();
        cfg.apply_coarse();
        assert_eq!(cfg.thumb_step_deg, 15.0);
        assert_eq!(cfg.finger_step_deg, 9.0);
        assert_eq!(cfg.voxel_size, 0.05);
    }

    #[test]
    fn cache_path_defaults_under_out_dir() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.cache_path(), PathBuf::from("out/records.jsonl"));
    }
}
