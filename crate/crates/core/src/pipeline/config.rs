//! Pipeline configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::io::outcomes::Endpoint;
use crate::preprocess::PreprocessConfig;
use crate::select::PruneMode;
use crate::stability::{GateRule, PerturbationSpec};
use crate::survival::RfeConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityConfig {
    pub threshold: f64,
    pub rule: GateRule,
    pub perturbation: PerturbationSpec,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self {
            threshold: 0.90,
            rule: GateRule::AllSpatial,
            perturbation: PerturbationSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CollinearityConfig {
    pub threshold: f64,
    pub mode: PruneMode,
}

impl Default for CollinearityConfig {
    fn default() -> Self {
        Self {
            threshold: 0.90,
            mode: PruneMode::Literal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeltaConfig {
    pub baseline: String,
}

impl Default for DeltaConfig {
    fn default() -> Self {
        Self {
            baseline: "F1".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurvivalConfig {
    pub endpoints: Vec<Endpoint>,
    pub top_k: usize,
    /// Feature whose F5/F1 ratio drives the cutpoint, KM and ANCOVA analyses.
    pub ratio_feature: String,
    pub skewness_cutoffs: Vec<f64>,
    /// Endpoint for the KM, cutpoint and ANCOVA analyses.
    pub km_endpoint: Endpoint,
    /// ANCOVA covariates, given as `baseline:<feature>` (F1 value) or
    /// `ratio:<feature>` (F5/F1 ratio).
    pub ancova_covariates: Vec<String>,
    pub alpha: f64,
    pub seed: u64,
    pub min_node: usize,
    pub n_perm: usize,
    pub rfe: RfeConfig,
}

impl Default for SurvivalConfig {
    fn default() -> Self {
        Self {
            endpoints: Endpoint::ALL.to_vec(),
            top_k: 4,
            ratio_feature: "original_firstorder_Skewness".into(),
            skewness_cutoffs: vec![0.973, 0.951],
            km_endpoint: Endpoint::Lffs,
            ancova_covariates: vec!["baseline:original_firstorder_Skewness".into()],
            alpha: 0.05,
            seed: 20240501,
            min_node: 7,
            n_perm: 10_000,
            rfe: RfeConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub manifest: PathBuf,
    pub outcomes: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub preprocess: PreprocessConfig,
    pub stability: StabilityConfig,
    pub collinearity: CollinearityConfig,
    pub delta: DeltaConfig,
    pub survival: SurvivalConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            manifest: PathBuf::from("manifest.json"),
            outcomes: Some(PathBuf::from("outcomes.csv")),
            output_dir: PathBuf::from("out"),
            preprocess: PreprocessConfig::default(),
            stability: StabilityConfig::default(),
            collinearity: CollinearityConfig::default(),
            delta: DeltaConfig::default(),
            survival: SurvivalConfig::default(),
        }
    }
}

fn unit_interval(name: &str, v: f64) -> Result<(), PipelineError> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(PipelineError::Config(format!(
            "{name} must lie in (0, 1], got {v}"
        )))
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        unit_interval("stability.threshold", self.stability.threshold)?;
        unit_interval("collinearity.threshold", self.collinearity.threshold)?;
        unit_interval("survival.alpha", self.survival.alpha)?;
        if self.survival.top_k == 0 {
            return Err(PipelineError::Config(
                "survival.top_k must be at least 1".into(),
            ));
        }
        if self.survival.endpoints.is_empty() {
            return Err(PipelineError::Config(
                "survival.endpoints must not be empty".into(),
            ));
        }
        if self.delta.baseline != "F1" {
            return Err(PipelineError::Config(format!(
                "delta.baseline {:?} is not supported; use \"F1\"",
                self.delta.baseline
            )));
        }
        for c in &self.survival.ancova_covariates {
            if !(c.starts_with("baseline:") || c.starts_with("ratio:")) {
                return Err(PipelineError::Config(format!(
                    "ancova covariate {c:?} must start with baseline: or ratio:"
                )));
            }
        }
        self.preprocess
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        self.stability
            .perturbation
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        Ok(())
    }

    /// Reads a JSON config; relative paths resolve against the file's
    /// directory.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: Self = serde_json::from_str(&text)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        if let Some(base) = path.parent() {
            cfg.resolve_relative(base);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_relative(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.manifest);
        fix(&mut self.output_dir);
        if let Some(o) = self.outcomes.as_mut() {
            fix(o);
        }
    }

    /// Hash of the analysis settings; file locations are left out so a
    /// relocated run hashes the same.
    pub fn analysis_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(o) = v.as_object_mut() {
            o.remove("manifest");
            o.remove("outcomes");
            o.remove("output_dir");
        }
        hex::encode(&Sha256::digest(v.to_string().as_bytes())[..8])
    }
}
