//! Gray level size zone matrix over 26-connected zones.

use super::catalog::FeatureClass;
use super::neighborhood::NEIGHBORS_26;
use super::run_like::run_like;
use super::{FeatureError, FeatureVector, MatrixKind, TextureMatrix};
use crate::preprocess::DiscretizedVolume;

/// Sizes of all 26-connected zones of equal label, as (label, size).
pub fn zones(d: &DiscretizedVolume) -> Vec<(u32, usize)> {
    let g = &d.geometry;
    let mut seen = vec![false; d.labels.len()];
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for start in 0..d.labels.len() {
        let l = d.labels[start];
        if l == 0 || seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut size = 0;
        while let Some(cur) = stack.pop() {
            size += 1;
            let at = g.coords(cur);
            for off in NEIGHBORS_26 {
                if let Some(n) = g.offset(at, off) {
                    if !seen[n] && d.labels[n] == l {
                        seen[n] = true;
                        stack.push(n);
                    }
                }
            }
        }
        out.push((l, size));
    }
    out
}

pub fn build_glszm(d: &DiscretizedVolume) -> TextureMatrix {
    let z = zones(d);
    let max_size = z.iter().map(|&(_, s)| s).max().unwrap_or(1);
    let mut m = TextureMatrix::zeros(MatrixKind::Glszm, d.max_level() as usize, max_size);
    for (l, s) in z {
        m.add(l as usize - 1, s - 1, 1.0);
    }
    m
}

pub fn glszm_features(d: &DiscretizedVolume) -> Result<FeatureVector, FeatureError> {
    let np = d.voxel_count() as f64;
    if np == 0.0 {
        return Err(FeatureError::EmptyMask);
    }
    let r = run_like(&build_glszm(d));
    Ok(FeatureVector::from_class(
        FeatureClass::Glszm,
        vec![
            ("GrayLevelNonUniformity", r.gray_nonuni, false),
            (
                "GrayLevelNonUniformityNormalized",
                r.gray_nonuni_norm,
                false,
            ),
            ("GrayLevelVariance", r.gray_var, false),
            ("HighGrayLevelZoneEmphasis", r.high_gray, false),
            ("LargeAreaEmphasis", r.large, false),
            ("LargeAreaHighGrayLevelEmphasis", r.large_high, false),
            ("LargeAreaLowGrayLevelEmphasis", r.large_low, false),
            ("LowGrayLevelZoneEmphasis", r.low_gray, false),
            ("SizeZoneNonUniformity", r.size_nonuni, false),
            ("SizeZoneNonUniformityNormalized", r.size_nonuni_norm, false),
            ("SmallAreaEmphasis", r.small, false),
            ("SmallAreaHighGrayLevelEmphasis", r.small_high, false),
            ("SmallAreaLowGrayLevelEmphasis", r.small_low, false),
            ("ZoneEntropy", r.entropy, false),
            ("ZonePercentage", r.total / np, false),
            ("ZoneVariance", r.size_var, false),
        ],
    ))
}
