//! Delta-radiomics pipeline library.

pub mod delta;
pub mod features;
pub mod io;
pub mod matrix;
pub mod phantom;
pub mod pipeline;
pub mod preprocess;
pub mod rng;
pub mod select;
pub mod stability;
pub mod stats;
pub mod survival;
pub mod volume;

pub use matrix::FeatureMatrix;
pub use volume::{Geometry, MaskROI, VolumeError, VolumeGrid};
