//! Survival and group-comparison statistics.

pub mod ancova;
pub mod bh;
pub mod concordance;
pub mod cox;
pub mod cutpoint;
pub mod km;
pub mod lasso;
pub mod logrank;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ancova::{ancova, AncovaResult};
pub use bh::bh_adjust;
pub use concordance::concordance_index;
pub use cox::{cox_fit, cox_fit_matrix, CoxCovariate, CoxFit};
pub use cutpoint::{cutpoint_search, CutpointConfig, CutpointResult};
pub use km::{km_estimate, KaplanMeier, KmPoint};
pub use lasso::{
    multivariate_cox_with_rfe, rfe_lasso_rank, MultivariateCox, RfeConfig, RfeResponse, RfeResult,
};
pub use logrank::{logrank_test, LogRank};

#[derive(Debug, Error, PartialEq)]
pub enum SurvivalError {
    #[error("no samples")]
    EmptySample,
    #[error("no events")]
    NoEvents,
    #[error("design matrix is singular")]
    Singular,
    #[error("p-value {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("no comparable pairs")]
    NoComparablePairs,
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("column {0} has zero variance")]
    ConstantColumn(String),
    #[error("design is rank deficient")]
    RankDeficient,
    #[error("no cutoff leaves both groups with the minimum node size")]
    NoValidCutpoint,
    #[error("sample lacks covariate {0}")]
    MissingCovariate(String),
    #[error("non-finite or negative input: {0}")]
    InvalidInput(String),
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
}

/// One subject: follow-up time in days, event indicator and named
/// covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct SurvivalSample {
    pub time: f64,
    pub event: bool,
    #[serde(default)]
    pub covariates: BTreeMap<String, f64>,
}

impl SurvivalSample {
    pub fn new(time: f64, event: bool) -> Self {
        Self {
            time,
            event,
            covariates: BTreeMap::new(),
        }
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.covariates.insert(name.to_string(), value);
        self
    }
}

pub(crate) fn check_samples(samples: &[SurvivalSample]) -> Result<(), SurvivalError> {
    if samples.is_empty() {
        return Err(SurvivalError::EmptySample);
    }
    for s in samples {
        if !s.time.is_finite() || s.time < 0.0 {
            return Err(SurvivalError::InvalidInput(format!("time {}", s.time)));
        }
        if let Some((k, v)) = s.covariates.iter().find(|(_, v)| !v.is_finite()) {
            return Err(SurvivalError::InvalidInput(format!("{k} = {v}")));
        }
    }
    Ok(())
}

/// Two-sided standard normal tail probability.
pub(crate) fn normal_two_sided(z: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    if z.is_nan() {
        return 1.0;
    }
    let n = Normal::standard();
    (2.0 * n.sf(z.abs())).min(1.0)
}
