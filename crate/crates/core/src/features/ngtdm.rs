//! Neighbouring gray tone difference matrix.

use super::catalog::FeatureClass;
use super::neighborhood::NEIGHBORS_26;
use super::{FeatureError, FeatureVector};
use crate::preprocess::DiscretizedVolume;

/// Ceiling for Coarseness when the difference sum is zero.
pub const COARSENESS_CAP: f64 = 1e6;

/// Per-level voxel counts `n` and absolute difference sums `s`. Voxels
/// without any in-mask neighbour are left out.
#[derive(Debug, Clone, PartialEq)]
pub struct NgtdmTable {
    pub n: Vec<f64>,
    pub s: Vec<f64>,
}

pub fn build_ngtdm(d: &DiscretizedVolume) -> NgtdmTable {
    let g = &d.geometry;
    let ng = d.max_level() as usize;
    let mut t = NgtdmTable {
        n: vec![0.0; ng],
        s: vec![0.0; ng],
    };
    for (idx, &l) in d.labels.iter().enumerate() {
        if l == 0 {
            continue;
        }
        let at = g.coords(idx);
        let (mut sum, mut cnt) = (0.0, 0usize);
        for n in NEIGHBORS_26.iter().filter_map(|&o| g.offset(at, o)) {
            if d.labels[n] > 0 {
                sum += d.labels[n] as f64;
                cnt += 1;
            }
        }
        if cnt > 0 {
            t.n[l as usize - 1] += 1.0;
            t.s[l as usize - 1] += (l as f64 - sum / cnt as f64).abs();
        }
    }
    t
}

pub fn ngtdm_features(d: &DiscretizedVolume) -> Result<FeatureVector, FeatureError> {
    if d.voxel_count() == 0 {
        return Err(FeatureError::EmptyMask);
    }
    let t = build_ngtdm(d);
    let nvp: f64 = t.n.iter().sum();
    if nvp == 0.0 {
        return Ok(FeatureVector::from_class(
            FeatureClass::Ngtdm,
            vec![
                ("Busyness", 0.0, true),
                ("Coarseness", COARSENESS_CAP, true),
                ("Complexity", 0.0, true),
                ("Contrast", 0.0, true),
                ("Strength", 0.0, true),
            ],
        ));
    }
    let lv: Vec<(f64, f64, f64)> = (0..t.n.len())
        .filter(|&i| t.n[i] > 0.0)
        .map(|i| ((i + 1) as f64, t.n[i] / nvp, t.s[i]))
        .collect();
    let ngp = lv.len() as f64;
    let s_total: f64 = lv.iter().map(|x| x.2).sum();
    let ps: f64 = lv.iter().map(|&(_, p, s)| p * s).sum();

    let (coarse, coarse_flag) = if ps == 0.0 {
        (COARSENESS_CAP, true)
    } else {
        (1.0 / ps, false)
    };
    let mut pair_sq = 0.0;
    let mut busy_den = 0.0;
    let mut complexity = 0.0;
    let mut strength = 0.0;
    for &(i, pi, si) in &lv {
        for &(j, pj, sj) in &lv {
            pair_sq += pi * pj * (i - j).powi(2);
            busy_den += (i * pi - j * pj).abs();
            complexity += (i - j).abs() * (pi * si + pj * sj) / (pi + pj);
            strength += (pi + pj) * (i - j).powi(2);
        }
    }
    let (contrast, contrast_flag) = if ngp <= 1.0 {
        (0.0, true)
    } else {
        (pair_sq / (ngp * (ngp - 1.0)) * s_total / nvp, false)
    };
    let (busyness, busy_flag) = if busy_den == 0.0 {
        (0.0, true)
    } else {
        (ps / busy_den, false)
    };
    let (strength, strength_flag) = if s_total == 0.0 {
        (0.0, true)
    } else {
        (strength / s_total, false)
    };
    Ok(FeatureVector::from_class(
        FeatureClass::Ngtdm,
        vec![
            ("Busyness", busyness, busy_flag),
            ("Coarseness", coarse, coarse_flag),
            ("Complexity", complexity / nvp, false),
            ("Contrast", contrast, contrast_flag),
            ("Strength", strength, strength_flag),
        ],
    ))
}
