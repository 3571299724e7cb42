//! Radiomic feature extraction: 14 shape, 18 first-order and 75 texture
//! features over a discretized region of interest.

pub mod catalog;
pub mod first_order;
pub mod glcm;
pub mod gldm;
pub mod glrlm;
pub mod glszm;
pub mod mesh;
pub mod neighborhood;
pub mod ngtdm;
mod run_like;
pub mod shape;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::preprocess::{self, DiscretizedVolume, PreprocessConfig, PreprocessError};
use crate::volume::{MaskROI, VolumeError, VolumeGrid};

pub use catalog::{catalog_index, feature_names, FeatureClass};

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("mask is empty")]
    EmptyMask,
    #[error("no in-mask voxel pair along any direction")]
    NoValidPairs,
    #[error("intensity normalization requested but no reference mask was supplied")]
    NormalizationInputMissing,
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Volume(#[from] VolumeError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureValue {
    pub name: String,
    pub value: f64,
    /// Set when the value was assigned by a degenerate-case convention.
    pub degenerate: bool,
}

/// Named feature values for one sample, in catalog order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureVector {
    pub course_id: String,
    pub fraction: String,
    pub config_hash: String,
    pub entries: Vec<FeatureValue>,
}

impl FeatureVector {
    /// Builds a class vector from short names, reordered to catalog order.
    /// Panics if the names do not cover the class exactly.
    pub(crate) fn from_class(class: FeatureClass, items: Vec<(&str, f64, bool)>) -> Self {
        let names = class.short_names();
        assert_eq!(items.len(), names.len(), "{class} feature count");
        let entries = names
            .iter()
            .map(|short| {
                let &(_, value, degenerate) = items
                    .iter()
                    .find(|(n, _, _)| n == short)
                    .unwrap_or_else(|| panic!("{class} lacks {short}"));
                FeatureValue {
                    name: format!("{}{}", class.prefix(), short),
                    value,
                    degenerate,
                }
            })
            .collect();
        Self {
            entries,
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, name: &str) -> Option<&FeatureValue> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entry(name).map(|e| e.value)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.name.as_str())
    }

    pub fn extend(&mut self, other: FeatureVector) {
        self.entries.extend(other.entries);
    }
}

/// Short stable digest of a preprocessing configuration.
pub fn config_hash(cfg: &PreprocessConfig) -> String {
    let json = serde_json::to_string(cfg).expect("config serializes");
    hex::encode(&Sha256::digest(json.as_bytes())[..8])
}

/// Kind-tagged dense count table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    Glcm,
    Glrlm,
    Glszm,
    Gldm,
}

/// Row-major `rows × cols` table. Row `i` is gray level `i + 1`; column `j`
/// is the second gray level (GLCM) or the run length, zone size or
/// dependence `j + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TextureMatrix {
    pub kind: MatrixKind,
    pub rows: usize,
    pub cols: usize,
    pub counts: Vec<f64>,
}

impl TextureMatrix {
    pub fn zeros(kind: MatrixKind, rows: usize, cols: usize) -> Self {
        Self {
            kind,
            rows,
            cols,
            counts: vec![0.0; rows * cols],
        }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.counts[i * self.cols + j]
    }

    pub fn add(&mut self, i: usize, j: usize, w: f64) {
        self.counts[i * self.cols + j] += w;
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }
}

/// Full 107-feature extraction.
///
/// With `cfg.normalize` the image is first divided by the median intensity
/// inside `reference`; resampling (when configured) and discretization
/// follow.
pub fn extract_all(
    v: &VolumeGrid,
    m: &MaskROI,
    reference: Option<&MaskROI>,
    cfg: &PreprocessConfig,
) -> Result<FeatureVector, FeatureError> {
    cfg.validate()?;
    m.check_on(v)?;
    if m.is_empty() {
        return Err(FeatureError::EmptyMask);
    }
    let normalized;
    let mut image = v;
    if cfg.normalize {
        let r = reference.ok_or(FeatureError::NormalizationInputMissing)?;
        normalized = preprocess::normalize_by_reference(v, r)?;
        image = &normalized;
    }
    let resampled;
    let (image, mask) = match cfg.resample_spacing {
        Some(s) => {
            resampled = preprocess::resample(image, m, s)?;
            if resampled.1.is_empty() {
                return Err(FeatureError::EmptyMask);
            }
            (&resampled.0, &resampled.1)
        }
        None => (image, m),
    };
    let d = preprocess::discretize(image, mask, cfg.bin_count)?;

    let mut out = shape::extract_shape(mask)?;
    out.extend(first_order::extract_first_order(image, mask, &d)?);
    out.extend(glcm_or_degenerate(&d)?);
    out.extend(gldm::gldm_features(&d, 0)?);
    out.extend(glrlm::glrlm_features(&d)?);
    out.extend(glszm::glszm_features(&d)?);
    out.extend(ngtdm::ngtdm_features(&d)?);
    out.config_hash = config_hash(cfg);
    debug_assert_eq!(out.len(), 107);
    Ok(out)
}

fn glcm_or_degenerate(d: &DiscretizedVolume) -> Result<FeatureVector, FeatureError> {
    match glcm::glcm_features(d) {
        Err(FeatureError::NoValidPairs) => Ok(glcm::no_pairs_vector()),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::Geometry;

    fn sample() -> (VolumeGrid, MaskROI, MaskROI) {
        let g = Geometry::new([6, 5, 4], [1.0, 1.0, 2.0], [0.0; 3]).unwrap();
        let data: Vec<f64> = (0..g.len())
            .map(|i| 10.0 + ((i * 7919) % 23) as f64)
            .collect();
        let v = VolumeGrid::new(g, data).unwrap();
        let mut gtv = MaskROI::empty(g, "gtv");
        let mut heart = MaskROI::empty(g, "heart");
        for idx in 0..g.len() {
            let [i, j, k] = g.coords(idx);
            if (1..5).contains(&i) && (1..4).contains(&j) && (1..3).contains(&k) {
                gtv.voxels[idx] = true;
            } else if k == 3 {
                heart.voxels[idx] = true;
            }
        }
        (v, gtv, heart)
    }

    #[test]
    fn full_extraction_has_every_catalog_name() {
        let (v, m, h) = sample();
        let f = extract_all(&v, &m, Some(&h), &PreprocessConfig::default()).unwrap();
        assert_eq!(
            f.names().map(str::to_string).collect::<Vec<_>>(),
            feature_names()
        );
        assert!(f.entries.iter().all(|e| e.value.is_finite()));
        let again = extract_all(&v, &m, Some(&h), &PreprocessConfig::default()).unwrap();
        assert!(f
            .entries
            .iter()
            .zip(&again.entries)
            .all(|(a, b)| a.value.to_bits() == b.value.to_bits()));
    }

    #[test]
    fn normalization_needs_reference() {
        let (v, m, _) = sample();
        assert_eq!(
            extract_all(&v, &m, None, &PreprocessConfig::default()),
            Err(FeatureError::NormalizationInputMissing)
        );
        let cfg = PreprocessConfig {
            normalize: false,
            ..Default::default()
        };
        assert!(extract_all(&v, &m, None, &cfg).is_ok());
    }

    #[test]
    fn doubling_intensity_is_invisible_after_normalization() {
        let (v, m, h) = sample();
        let cfg = PreprocessConfig::default();
        let a = extract_all(&v, &m, Some(&h), &cfg).unwrap();
        let b = extract_all(&v.map(|x| 2.0 * x), &m, Some(&h), &cfg).unwrap();
        for (x, y) in a.entries.iter().zip(&b.entries) {
            assert!(
                (x.value - y.value).abs() <= 1e-12 * x.value.abs().max(1.0),
                "{}",
                x.name
            );
        }
    }

    #[test]
    fn single_voxel_extracts_with_flags() {
        let (v, _, h) = sample();
        let mut m = MaskROI::empty(v.geometry, "gtv");
        m.set(2, 2, 1, true);
        let f = extract_all(&v, &m, Some(&h), &PreprocessConfig::default()).unwrap();
        assert_eq!(f.len(), 107);
        assert!(f.entry("original_glcm_Correlation").unwrap().degenerate);
        assert!(f.entry("original_firstorder_Skewness").unwrap().degenerate);
        assert_eq!(f.get("original_ngtdm_Coarseness"), Some(1e6));
    }

    #[test]
    fn config_hash_tracks_config() {
        let a = config_hash(&PreprocessConfig::default());
        let b = config_hash(&PreprocessConfig {
            bin_count: 32,
            ..Default::default()
        });
        assert_eq!(a.len(), 16);
        assert_ne!(a, b);
    }
}
