//! Gray level run length matrix.

use super::catalog::FeatureClass;
use super::neighborhood::DIRECTIONS_13;
use super::run_like::run_like;
use super::{FeatureError, FeatureVector, MatrixKind, TextureMatrix};
use crate::preprocess::DiscretizedVolume;

/// Run-length matrix along one direction. Runs are maximal chains of equal
/// labels; voxels outside the mask break runs.
pub fn build_glrlm(d: &DiscretizedVolume, dir: [isize; 3]) -> TextureMatrix {
    let g = &d.geometry;
    let max_len = *g.dims.iter().max().unwrap();
    let mut m = TextureMatrix::zeros(MatrixKind::Glrlm, d.max_level() as usize, max_len);
    let back = dir.map(|c| -c);
    for (idx, &l) in d.labels.iter().enumerate() {
        if l == 0 {
            continue;
        }
        let at = g.coords(idx);
        if g.offset(at, back).is_some_and(|p| d.labels[p] == l) {
            continue;
        }
        let mut len = 1;
        let mut cur = idx;
        while let Some(n) = g.offset(g.coords(cur), dir).filter(|&n| d.labels[n] == l) {
            len += 1;
            cur = n;
        }
        m.add(l as usize - 1, len - 1, 1.0);
    }
    m
}

pub fn glrlm_features(d: &DiscretizedVolume) -> Result<FeatureVector, FeatureError> {
    let np = d.voxel_count() as f64;
    if np == 0.0 {
        return Err(FeatureError::EmptyMask);
    }
    let mut acc = [0.0f64; 16];
    for dir in DIRECTIONS_13 {
        let r = run_like(&build_glrlm(d, dir));
        let v = [
            r.gray_nonuni,
            r.gray_nonuni_norm,
            r.gray_var,
            r.high_gray,
            r.large,
            r.large_high,
            r.large_low,
            r.low_gray,
            r.entropy,
            r.size_nonuni,
            r.size_nonuni_norm,
            r.total / np,
            r.size_var,
            r.small,
            r.small_high,
            r.small_low,
        ];
        for (a, x) in acc.iter_mut().zip(v) {
            *a += x;
        }
    }
    let names = [
        "GrayLevelNonUniformity",
        "GrayLevelNonUniformityNormalized",
        "GrayLevelVariance",
        "HighGrayLevelRunEmphasis",
        "LongRunEmphasis",
        "LongRunHighGrayLevelEmphasis",
        "LongRunLowGrayLevelEmphasis",
        "LowGrayLevelRunEmphasis",
        "RunEntropy",
        "RunLengthNonUniformity",
        "RunLengthNonUniformityNormalized",
        "RunPercentage",
        "RunVariance",
        "ShortRunEmphasis",
        "ShortRunHighGrayLevelEmphasis",
        "ShortRunLowGrayLevelEmphasis",
    ];
    Ok(FeatureVector::from_class(
        FeatureClass::Glrlm,
        names
            .into_iter()
            .zip(acc)
            .map(|(n, v)| (n, v / DIRECTIONS_13.len() as f64, false))
            .collect(),
    ))
}
