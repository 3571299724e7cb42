//! Seeded random erosion or dilation of a contour.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::morphology::{dilate, erode};
use super::StabilityError;
use crate::rng::keyed_rng;
use crate::volume::MaskROI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MorphOp {
    Erode,
    Dilate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbationSpec {
    pub seed: u64,
    pub repetitions: usize,
    pub op_choices: Vec<MorphOp>,
    pub connectivity_choices: Vec<u8>,
    pub radius: u32,
}

impl Default for PerturbationSpec {
    fn default() -> Self {
        Self {
            seed: 20240501,
            repetitions: 5,
            op_choices: vec![MorphOp::Erode, MorphOp::Dilate],
            connectivity_choices: vec![6, 18, 26],
            radius: 1,
        }
    }
}

impl PerturbationSpec {
    pub fn validate(&self) -> Result<(), StabilityError> {
        let bad = |m: &str| Err(StabilityError::InvalidSpec(m.to_string()));
        if self.repetitions < 1 {
            return bad("repetitions must be at least 1");
        }
        if self.op_choices.is_empty() {
            return bad("op_choices must not be empty");
        }
        if self.connectivity_choices.is_empty() {
            return bad("connectivity_choices must not be empty");
        }
        if self
            .connectivity_choices
            .iter()
            .any(|c| ![6, 18, 26].contains(c))
        {
            return bad("connectivity must be 6, 18 or 26");
        }
        if self.radius < 1 {
            return bad("radius must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub mask: MaskROI,
    pub op: MorphOp,
    pub connectivity: u8,
    /// Erosion would have emptied the mask, so dilation was applied.
    pub fallback: bool,
}

/// Draws (op, connectivity) for `(spec.seed, key, rep_index)` and applies it
/// `spec.radius` times.
pub fn perturb_mask(
    m: &MaskROI,
    spec: &PerturbationSpec,
    key: &str,
    rep_index: usize,
) -> Result<Perturbation, StabilityError> {
    spec.validate()?;
    if m.is_empty() {
        return Err(StabilityError::EmptyMask);
    }
    let mut rng = keyed_rng(
        spec.seed,
        &[
            b"perturb",
            key.as_bytes(),
            &(rep_index as u64).to_le_bytes(),
        ],
    );
    let op = spec.op_choices[rng.random_range(0..spec.op_choices.len())];
    let connectivity =
        spec.connectivity_choices[rng.random_range(0..spec.connectivity_choices.len())];
    let apply = |op: MorphOp| {
        let mut out = m.clone();
        for _ in 0..spec.radius {
            out = match op {
                MorphOp::Erode => erode(&out, connectivity),
                MorphOp::Dilate => dilate(&out, connectivity),
            };
        }
        out
    };
    let mask = apply(op);
    if op == MorphOp::Erode && mask.is_empty() {
        return Ok(Perturbation {
            mask: apply(MorphOp::Dilate),
            op: MorphOp::Dilate,
            connectivity,
            fallback: true,
        });
    }
    Ok(Perturbation {
        mask,
        op,
        connectivity,
        fallback: false,
    })
}
