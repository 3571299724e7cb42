//! File formats: NIfTI-1 volumes, the cohort manifest and the outcome table.

pub mod manifest;
pub mod nifti;
pub mod outcomes;

pub use manifest::{
    load_manifest, parse_manifest, CohortManifest, CourseEntry, FractionFiles, FractionLabel,
    ManifestError,
};
pub use nifti::{
    parse_nifti, read_mask, read_nifti, save_mask, save_nifti, write_nifti, NiftiError,
};
pub use outcomes::{
    load_outcomes, parse_outcomes, Endpoint, EndpointOutcome, OutcomeError, OutcomeRow,
    OutcomeTable,
};
