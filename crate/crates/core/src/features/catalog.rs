//! The 107 feature names, grouped by class, in reporting order.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureClass {
    Shape,
    FirstOrder,
    Glcm,
    Gldm,
    Glrlm,
    Glszm,
    Ngtdm,
}

impl FeatureClass {
    pub const ALL: [FeatureClass; 7] = [
        Self::Shape,
        Self::FirstOrder,
        Self::Glcm,
        Self::Gldm,
        Self::Glrlm,
        Self::Glszm,
        Self::Ngtdm,
    ];

    pub fn prefix(self) -> &'static str {
        match self {
            Self::Shape => "original_shape_",
            Self::FirstOrder => "original_firstorder_",
            Self::Glcm => "original_glcm_",
            Self::Gldm => "original_gldm_",
            Self::Glrlm => "original_glrlm_",
            Self::Glszm => "original_glszm_",
            Self::Ngtdm => "original_ngtdm_",
        }
    }

    pub fn short_names(self) -> &'static [&'static str] {
        match self {
            Self::Shape => &SHAPE,
            Self::FirstOrder => &FIRST_ORDER,
            Self::Glcm => &GLCM,
            Self::Gldm => &GLDM,
            Self::Glrlm => &GLRLM,
            Self::Glszm => &GLSZM,
            Self::Ngtdm => &NGTDM,
        }
    }

    /// Class of a full feature name, if it carries a known prefix.
    pub fn of(name: &str) -> Option<FeatureClass> {
        Self::ALL.into_iter().find(|c| name.starts_with(c.prefix()))
    }
}

impl fmt::Display for FeatureClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.prefix();
        f.write_str(&p["original_".len()..p.len() - 1])
    }
}

pub const SHAPE: [&str; 14] = [
    "Elongation",
    "Flatness",
    "LeastAxisLength",
    "MajorAxisLength",
    "Maximum2DDiameterColumn",
    "Maximum2DDiameterRow",
    "Maximum2DDiameterSlice",
    "Maximum3DDiameter",
    "MeshVolume",
    "MinorAxisLength",
    "Sphericity",
    "SurfaceArea",
    "SurfaceVolumeRatio",
    "VoxelVolume",
];

pub const FIRST_ORDER: [&str; 18] = [
    "10Percentile",
    "90Percentile",
    "Energy",
    "Entropy",
    "InterquartileRange",
    "Kurtosis",
    "Maximum",
    "MeanAbsoluteDeviation",
    "Mean",
    "Median",
    "Minimum",
    "Range",
    "RobustMeanAbsoluteDeviation",
    "RootMeanSquared",
    "Skewness",
    "TotalEnergy",
    "Uniformity",
    "Variance",
];

pub const GLCM: [&str; 24] = [
    "Autocorrelation",
    "ClusterProminence",
    "ClusterShade",
    "ClusterTendency",
    "Contrast",
    "Correlation",
    "DifferenceAverage",
    "DifferenceEntropy",
    "DifferenceVariance",
    "Id",
    "Idm",
    "Idmn",
    "Idn",
    "Imc1",
    "Imc2",
    "InverseVariance",
    "JointAverage",
    "JointEnergy",
    "JointEntropy",
    "MCC",
    "MaximumProbability",
    "SumAverage",
    "SumEntropy",
    "SumSquares",
];

pub const GLDM: [&str; 14] = [
    "DependenceEntropy",
    "DependenceNonUniformity",
    "DependenceNonUniformityNormalized",
    "DependenceVariance",
    "GrayLevelNonUniformity",
    "GrayLevelVariance",
    "HighGrayLevelEmphasis",
    "LargeDependenceEmphasis",
    "LargeDependenceHighGrayLevelEmphasis",
    "LargeDependenceLowGrayLevelEmphasis",
    "LowGrayLevelEmphasis",
    "SmallDependenceEmphasis",
    "SmallDependenceHighGrayLevelEmphasis",
    "SmallDependenceLowGrayLevelEmphasis",
];

pub const GLRLM: [&str; 16] = [
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

pub const GLSZM: [&str; 16] = [
    "GrayLevelNonUniformity",
    "GrayLevelNonUniformityNormalized",
    "GrayLevelVariance",
    "HighGrayLevelZoneEmphasis",
    "LargeAreaEmphasis",
    "LargeAreaHighGrayLevelEmphasis",
    "LargeAreaLowGrayLevelEmphasis",
    "LowGrayLevelZoneEmphasis",
    "SizeZoneNonUniformity",
    "SizeZoneNonUniformityNormalized",
    "SmallAreaEmphasis",
    "SmallAreaHighGrayLevelEmphasis",
    "SmallAreaLowGrayLevelEmphasis",
    "ZoneEntropy",
    "ZonePercentage",
    "ZoneVariance",
];

pub const NGTDM: [&str; 5] = [
    "Busyness",
    "Coarseness",
    "Complexity",
    "Contrast",
    "Strength",
];

/// All 107 full names in reporting order.
pub fn feature_names() -> Vec<String> {
    FeatureClass::ALL
        .iter()
        .flat_map(|c| {
            c.short_names()
                .iter()
                .map(move |s| format!("{}{}", c.prefix(), s))
        })
        .collect()
}

/// Position of a full name in the reporting order.
pub fn catalog_index(name: &str) -> Option<usize> {
    let class = FeatureClass::of(name)?;
    let short = &name[class.prefix().len()..];
    let within = class.short_names().iter().position(|s| *s == short)?;
    let before: usize = FeatureClass::ALL
        .iter()
        .take_while(|c| **c != class)
        .map(|c| c.short_names().len())
        .sum();
    Some(before + within)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_has_107_unique_names() {
        let names = feature_names();
        assert_eq!(names.len(), 107);
        let mut dedup = names.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), 107);
        for (i, n) in names.iter().enumerate() {
            assert_eq!(catalog_index(n), Some(i));
        }
        assert!(names.contains(&"original_glcm_Imc2".to_string()));
        assert_eq!(catalog_index("original_glcm_Nope"), None);
    }

    #[test]
    fn class_display() {
        assert_eq!(FeatureClass::FirstOrder.to_string(), "firstorder");
        assert_eq!(
            FeatureClass::of("original_ngtdm_Busyness"),
            Some(FeatureClass::Ngtdm)
        );
    }
}
