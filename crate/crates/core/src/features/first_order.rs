//! Intensity-histogram features over the in-mask voxels.

use super::catalog::FeatureClass;
use super::{FeatureError, FeatureVector};
use crate::preprocess::DiscretizedVolume;
use crate::stats::{quantile_sorted, sorted};
use crate::volume::{MaskROI, VolumeGrid};

pub fn extract_first_order(
    v: &VolumeGrid,
    m: &MaskROI,
    d: &DiscretizedVolume,
) -> Result<FeatureVector, FeatureError> {
    m.check_on(v)?;
    let x = v.masked_values(m);
    if x.is_empty() {
        return Err(FeatureError::EmptyMask);
    }
    let n = x.len() as f64;
    let s = sorted(&x);
    let mean = x.iter().sum::<f64>() / n;
    let m2 = x.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
    let m3 = x.iter().map(|a| (a - mean).powi(3)).sum::<f64>() / n;
    let m4 = x.iter().map(|a| (a - mean).powi(4)).sum::<f64>() / n;
    let energy = x.iter().map(|a| a * a).sum::<f64>();
    let mad = x.iter().map(|a| (a - mean).abs()).sum::<f64>() / n;

    let p10 = quantile_sorted(&s, 0.10);
    let p90 = quantile_sorted(&s, 0.90);
    let robust: Vec<f64> = s
        .iter()
        .copied()
        .filter(|&a| a >= p10 && a <= p90)
        .collect();
    let robust_empty = robust.is_empty();
    let rmad = if robust_empty {
        0.0
    } else {
        let rmean = robust.iter().sum::<f64>() / robust.len() as f64;
        robust.iter().map(|a| (a - rmean).abs()).sum::<f64>() / robust.len() as f64
    };

    let mut hist = vec![0usize; d.bin_count.max(d.max_level()) as usize + 1];
    for &l in &d.labels {
        if l > 0 {
            hist[l as usize] += 1;
        }
    }
    let total: usize = hist.iter().sum();
    let mut entropy = 0.0;
    let mut uniformity = 0.0;
    for &c in &hist[1..] {
        if c > 0 {
            let p = c as f64 / total as f64;
            entropy -= p * p.log2();
            uniformity += p * p;
        }
    }

    let flat = m2 == 0.0;
    let (skew, kurt) = if flat {
        (0.0, 0.0)
    } else {
        (m3 / m2.powf(1.5), m4 / (m2 * m2))
    };
    let (min, max) = (s[0], s[s.len() - 1]);
    Ok(FeatureVector::from_class(
        FeatureClass::FirstOrder,
        vec![
            ("10Percentile", p10, false),
            ("90Percentile", p90, false),
            ("Energy", energy, false),
            ("Entropy", entropy, false),
            (
                "InterquartileRange",
                quantile_sorted(&s, 0.75) - quantile_sorted(&s, 0.25),
                false,
            ),
            ("Kurtosis", kurt, flat),
            ("Maximum", max, false),
            ("MeanAbsoluteDeviation", mad, false),
            ("Mean", mean, false),
            ("Median", quantile_sorted(&s, 0.5), false),
            ("Minimum", min, false),
            ("Range", max - min, false),
            ("RobustMeanAbsoluteDeviation", rmad, robust_empty),
            ("RootMeanSquared", (energy / n).sqrt(), false),
            ("Skewness", skew, flat),
            ("TotalEnergy", energy * v.geometry.voxel_volume(), false),
            ("Uniformity", uniformity, false),
            ("Variance", m2, false),
        ],
    ))
}
