//! Gray level dependence matrix.

use super::catalog::FeatureClass;
use super::neighborhood::NEIGHBORS_26;
use super::run_like::run_like;
use super::{FeatureError, FeatureVector, MatrixKind, TextureMatrix};
use crate::preprocess::DiscretizedVolume;

/// Dependence of each voxel is one plus the number of in-mask 26-neighbours
/// whose label differs by at most `alpha`.
pub fn build_gldm(d: &DiscretizedVolume, alpha: u32) -> TextureMatrix {
    let g = &d.geometry;
    let mut m = TextureMatrix::zeros(
        MatrixKind::Gldm,
        d.max_level() as usize,
        NEIGHBORS_26.len() + 1,
    );
    for (idx, &l) in d.labels.iter().enumerate() {
        if l == 0 {
            continue;
        }
        let at = g.coords(idx);
        let dep = NEIGHBORS_26
            .iter()
            .filter_map(|&o| g.offset(at, o))
            .filter(|&n| d.labels[n] > 0 && d.labels[n].abs_diff(l) <= alpha)
            .count();
        m.add(l as usize - 1, dep, 1.0);
    }
    m
}

pub fn gldm_features(d: &DiscretizedVolume, alpha: u32) -> Result<FeatureVector, FeatureError> {
    if d.voxel_count() == 0 {
        return Err(FeatureError::EmptyMask);
    }
    let r = run_like(&build_gldm(d, alpha));
    Ok(FeatureVector::from_class(
        FeatureClass::Gldm,
        vec![
            ("DependenceEntropy", r.entropy, false),
            ("DependenceNonUniformity", r.size_nonuni, false),
            (
                "DependenceNonUniformityNormalized",
                r.size_nonuni_norm,
                false,
            ),
            ("DependenceVariance", r.size_var, false),
            ("GrayLevelNonUniformity", r.gray_nonuni, false),
            ("GrayLevelVariance", r.gray_var, false),
            ("HighGrayLevelEmphasis", r.high_gray, false),
            ("LargeDependenceEmphasis", r.large, false),
            ("LargeDependenceHighGrayLevelEmphasis", r.large_high, false),
            ("LargeDependenceLowGrayLevelEmphasis", r.large_low, false),
            ("LowGrayLevelEmphasis", r.low_gray, false),
            ("SmallDependenceEmphasis", r.small, false),
            ("SmallDependenceHighGrayLevelEmphasis", r.small_high, false),
            ("SmallDependenceLowGrayLevelEmphasis", r.small_low, false),
        ],
    ))
}
