//! Feature stability: temporal CCC between SIM and F1, spatial CCC under
//! seeded contour perturbations, and the stability gate.

pub mod ccc;
pub mod gate;
pub mod morphology;
pub mod perturb;

use thiserror::Error;

use crate::features::FeatureVector;

pub use ccc::{lin_ccc, stability_ccc};
pub use gate::{stability_gate, GateRule, StabilityReport, StabilityRow};
pub use perturb::{perturb_mask, MorphOp, Perturbation, PerturbationSpec};

#[derive(Debug, Error, PartialEq)]
pub enum StabilityError {
    #[error("vectors have different lengths ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("both vectors are constant with different values")]
    BothConstant,
    #[error("need at least 2 courses, got {0}")]
    TooFewCourses(usize),
    #[error("rows are not aligned: {0}")]
    MisalignedRows(String),
    #[error("feature name sets differ at {0:?}")]
    NameMismatch(String),
    #[error("invalid perturbation spec: {0}")]
    InvalidSpec(String),
    #[error("mask is empty")]
    EmptyMask,
}

fn check_aligned(a: &[FeatureVector], b: &[FeatureVector]) -> Result<(), StabilityError> {
    if a.len() != b.len() {
        return Err(StabilityError::MisalignedRows(format!(
            "{} rows vs {} rows",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(StabilityError::TooFewCourses(a.len()));
    }
    for (x, y) in a.iter().zip(b) {
        if x.course_id != y.course_id {
            return Err(StabilityError::MisalignedRows(format!(
                "{} vs {}",
                x.course_id, y.course_id
            )));
        }
        if !x.names().eq(y.names()) {
            return Err(StabilityError::MisalignedRows(format!(
                "feature names differ for {}",
                x.course_id
            )));
        }
    }
    Ok(())
}

/// Per-feature CCC across courses between two aligned sets of vectors.
pub fn paired_ccc(
    x: &[FeatureVector],
    y: &[FeatureVector],
) -> Result<Vec<(String, f64)>, StabilityError> {
    check_aligned(x, y)?;
    x[0].names()
        .enumerate()
        .map(|(j, name)| {
            let a: Vec<f64> = x.iter().map(|v| v.entries[j].value).collect();
            let b: Vec<f64> = y.iter().map(|v| v.entries[j].value).collect();
            Ok((name.to_string(), stability_ccc(&a, &b)?))
        })
        .collect()
}

/// SIM versus F1 agreement per feature.
pub fn temporal_stability(
    sim: &[FeatureVector],
    f1: &[FeatureVector],
) -> Result<Vec<(String, f64)>, StabilityError> {
    paired_ccc(sim, f1)
}

/// Unperturbed F1 versus each perturbation repetition; `perturbed[r]` holds
/// the course vectors of repetition `r`.
pub fn spatial_stability(
    f1: &[FeatureVector],
    perturbed: &[Vec<FeatureVector>],
) -> Result<Vec<(String, Vec<f64>)>, StabilityError> {
    let per_rep: Vec<Vec<(String, f64)>> = perturbed
        .iter()
        .map(|p| paired_ccc(f1, p))
        .collect::<Result<_, _>>()?;
    let names: Vec<String> = f1
        .first()
        .map(|v| v.names().map(str::to_string).collect())
        .unwrap_or_default();
    Ok(names
        .into_iter()
        .enumerate()
        .map(|(j, n)| {
            let v = per_rep.iter().map(|r| r[j].1).collect();
            (n, v)
        })
        .collect())
}
