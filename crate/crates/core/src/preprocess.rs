//! Reference-ROI intensity normalization, resampling and fixed-bin-count
//! gray-level discretization.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats;
use crate::volume::{Geometry, MaskROI, VolumeError, VolumeGrid};

#[derive(Debug, Error, PartialEq)]
pub enum PreprocessError {
    #[error("reference mask is empty")]
    EmptyReferenceMask,
    #[error("median intensity inside the reference mask is zero")]
    ZeroMedian,
    #[error("resampling to {spacing:?} would produce an empty grid {dims:?}")]
    DegenerateOutputGrid { spacing: [f64; 3], dims: [usize; 3] },
    #[error("mask is empty")]
    EmptyMask,
    #[error("invalid preprocessing config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Volume(#[from] VolumeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ImageInterpolation {
    #[default]
    Trilinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MaskInterpolation {
    #[default]
    Nearest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    pub normalize: bool,
    pub bin_count: u32,
    pub resample_spacing: Option<[f64; 3]>,
    pub image_interp: ImageInterpolation,
    pub mask_interp: MaskInterpolation,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            normalize: true,
            bin_count: 64,
            resample_spacing: None,
            image_interp: ImageInterpolation::Trilinear,
            mask_interp: MaskInterpolation::Nearest,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<(), PreprocessError> {
        if self.bin_count < 2 {
            return Err(PreprocessError::InvalidConfig(format!(
                "bin_count must be >= 2, got {}",
                self.bin_count
            )));
        }
        if let Some(s) = self.resample_spacing {
            if s.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                return Err(PreprocessError::InvalidConfig(format!(
                    "resample spacing must be positive, got {s:?}"
                )));
            }
        }
        Ok(())
    }
}

/// Divides every voxel by the median intensity inside `ref_mask`.
pub fn normalize_by_reference(
    v: &VolumeGrid,
    ref_mask: &MaskROI,
) -> Result<VolumeGrid, PreprocessError> {
    ref_mask.check_on(v)?;
    let values = v.masked_values(ref_mask);
    if values.is_empty() {
        return Err(PreprocessError::EmptyReferenceMask);
    }
    let median = stats::median(&values);
    if median == 0.0 {
        return Err(PreprocessError::ZeroMedian);
    }
    Ok(v.map(|x| x / median))
}

fn output_dims(g: &Geometry, spacing: [f64; 3]) -> Result<[usize; 3], PreprocessError> {
    let mut dims = [0usize; 3];
    for a in 0..3 {
        dims[a] = (g.dims[a] as f64 * g.spacing[a] / spacing[a]).round() as usize;
    }
    if dims.iter().any(|&d| d == 0) {
        return Err(PreprocessError::DegenerateOutputGrid { spacing, dims });
    }
    Ok(dims)
}

/// Resamples image (trilinear) and mask (nearest neighbour) onto an
/// axis-aligned grid with the requested spacing, anchored at the original
/// origin. Samples beyond the last voxel centre clamp to the edge.
pub fn resample(
    v: &VolumeGrid,
    m: &MaskROI,
    spacing: [f64; 3],
) -> Result<(VolumeGrid, MaskROI), PreprocessError> {
    m.check_on(v)?;
    if spacing.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(PreprocessError::InvalidConfig(format!(
            "resample spacing must be positive, got {spacing:?}"
        )));
    }
    let g = v.geometry;
    if g.spacing == spacing {
        return Ok((v.clone(), m.clone()));
    }
    let dims = output_dims(&g, spacing)?;
    let out_geom = Geometry::new(dims, spacing, g.origin)?;

    // per-axis source coordinates for each output index
    let coords: Vec<Vec<f64>> = (0..3)
        .map(|a| {
            (0..dims[a])
                .map(|i| (i as f64 * spacing[a] / g.spacing[a]).clamp(0.0, (g.dims[a] - 1) as f64))
                .collect()
        })
        .collect();

    let mut data = Vec::with_capacity(out_geom.len());
    let mut voxels = Vec::with_capacity(out_geom.len());
    for &z in &coords[2] {
        for &y in &coords[1] {
            for &x in &coords[0] {
                data.push(trilinear(v, [x, y, z]));
                let near = [x, y, z].map(|u| (u + 0.5).floor() as usize);
                voxels.push(
                    m.voxels[g.index(
                        near[0].min(g.dims[0] - 1),
                        near[1].min(g.dims[1] - 1),
                        near[2].min(g.dims[2] - 1),
                    )],
                );
            }
        }
    }
    let mut image = VolumeGrid::new(out_geom, data)?.with_unit(v.intensity_unit.clone());
    image.orientation = v.orientation.clone();
    let mask = MaskROI::new(out_geom, voxels, m.label.clone())?;
    Ok((image, mask))
}

fn trilinear(v: &VolumeGrid, p: [f64; 3]) -> f64 {
    let g = &v.geometry;
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    let mut t = [0f64; 3];
    for a in 0..3 {
        lo[a] = p[a].floor() as usize;
        hi[a] = (lo[a] + 1).min(g.dims[a] - 1);
        t[a] = p[a] - lo[a] as f64;
    }
    let mut acc = 0.0;
    for corner in 0..8 {
        let pick = |a: usize| corner >> a & 1 == 1;
        let mut w = 1.0;
        let mut idx = [0usize; 3];
        for a in 0..3 {
            if pick(a) {
                w *= t[a];
                idx[a] = hi[a];
            } else {
                w *= 1.0 - t[a];
                idx[a] = lo[a];
            }
        }
        if w != 0.0 {
            acc += w * v.get(idx[0], idx[1], idx[2]);
        }
    }
    acc
}

/// Gray-level labels in `1..=bin_count` over the mask, 0 outside.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedVolume {
    pub geometry: Geometry,
    pub labels: Vec<u32>,
    pub bin_count: u32,
    /// Lower edge of the first bin.
    pub min: f64,
    /// Bin width; 1 by convention when the masked region is constant.
    pub width: f64,
}

impl DiscretizedVolume {
    pub fn in_mask(&self, idx: usize) -> bool {
        self.labels[idx] > 0
    }

    pub fn voxel_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l > 0).count()
    }

    /// Highest gray level present in the region.
    pub fn max_level(&self) -> u32 {
        self.labels.iter().copied().max().unwrap_or(0)
    }

    /// Builds a volume directly from labels (0 = outside).
    pub fn from_labels(geometry: Geometry, labels: Vec<u32>, bin_count: u32) -> Self {
        Self {
            geometry,
            labels,
            bin_count,
            min: 1.0,
            width: 1.0,
        }
    }
}

/// Fixed-bin-count discretization with `W = (max - min) / bin_count`; the
/// maximum lands in the top bin.
pub fn discretize(
    v: &VolumeGrid,
    m: &MaskROI,
    bin_count: u32,
) -> Result<DiscretizedVolume, PreprocessError> {
    m.check_on(v)?;
    if bin_count < 1 {
        return Err(PreprocessError::InvalidConfig(
            "bin_count must be positive".into(),
        ));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (&x, &inside) in v.data.iter().zip(&m.voxels) {
        if inside {
            lo = lo.min(x);
            hi = hi.max(x);
        }
    }
    if lo > hi {
        return Err(PreprocessError::EmptyMask);
    }
    let constant = hi == lo;
    let width = if constant {
        1.0
    } else {
        (hi - lo) / bin_count as f64
    };
    let labels = v
        .data
        .iter()
        .zip(&m.voxels)
        .map(|(&x, &inside)| {
            if !inside {
                0
            } else if constant {
                1
            } else {
                (((x - lo) / width).floor() as u32 + 1).min(bin_count)
            }
        })
        .collect();
    Ok(DiscretizedVolume {
        geometry: v.geometry,
        labels,
        bin_count,
        min: lo,
        width,
    })
}
