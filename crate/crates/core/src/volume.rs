//! Dense 3D scalar volumes and binary regions of interest.
//!
//! All arrays are stored x-fastest: voxel `(i, j, k)` lives at
//! `i + nx * (j + ny * k)`.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum VolumeError {
    #[error("dimension product {expected} does not match data length {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("all dimensions must be positive, got {0:?}")]
    ZeroDimension([usize; 3]),
    #[error("voxel spacing must be strictly positive and finite, got {0:?}")]
    NonPositiveSpacing([f64; 3]),
    #[error("intensity at index {0} is not finite")]
    NonFiniteIntensity(usize),
    #[error("mask value at index {index} is {value}, expected 0 or 1")]
    NonBinaryMask { index: usize, value: f64 },
    #[error("mask geometry {mask:?} does not match image geometry {image:?}")]
    GeometryMismatch { image: Geometry, mask: Geometry },
}

/// Grid geometry shared by an image and the masks drawn on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub dims: [usize; 3],
    /// Millimetres per voxel along each axis.
    pub spacing: [f64; 3],
    /// Physical position (mm) of voxel (0, 0, 0).
    pub origin: [f64; 3],
}

impl Geometry {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], origin: [f64; 3]) -> Result<Self, VolumeError> {
        if dims.iter().any(|&d| d == 0) {
            return Err(VolumeError::ZeroDimension(dims));
        }
        if spacing.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(VolumeError::NonPositiveSpacing(spacing));
        }
        Ok(Self {
            dims,
            spacing,
            origin,
        })
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let nx = self.dims[0];
        let ny = self.dims[1];
        [idx % nx, (idx / nx) % ny, idx / (nx * ny)]
    }

    /// Index of `(i, j, k) + offset`, or `None` when it falls off the grid.
    #[inline]
    pub fn offset(&self, at: [usize; 3], off: [isize; 3]) -> Option<usize> {
        let mut out = [0usize; 3];
        for a in 0..3 {
            let v = at[a] as isize + off[a];
            if v < 0 || v >= self.dims[a] as isize {
                return None;
            }
            out[a] = v as usize;
        }
        Some(self.index(out[0], out[1], out[2]))
    }

    pub fn voxel_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Same dims, and spacing equal within 1e-6 relative.
    pub fn matches(&self, other: &Geometry) -> bool {
        self.dims == other.dims
            && self
                .spacing
                .iter()
                .zip(other.spacing.iter())
                .all(|(a, b)| (a - b).abs() <= 1e-6 * a.abs().max(b.abs()))
    }
}

/// Orientation fields carried through from a NIfTI header. Geometry is
/// treated as axis-aligned regardless of their content.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Orientation {
    pub qform_code: i16,
    pub sform_code: i16,
    pub quatern: [f32; 3],
    pub qoffset: [f32; 3],
    pub qfac: f32,
    pub srow: [[f32; 4]; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolumeGrid {
    pub geometry: Geometry,
    pub data: Vec<f64>,
    pub intensity_unit: String,
    pub orientation: Option<Orientation>,
}

impl VolumeGrid {
    pub fn new(geometry: Geometry, data: Vec<f64>) -> Result<Self, VolumeError> {
        if geometry.len() != data.len() {
            return Err(VolumeError::LengthMismatch {
                expected: geometry.len(),
                actual: data.len(),
            });
        }
        if let Some(idx) = data.iter().position(|v| !v.is_finite()) {
            return Err(VolumeError::NonFiniteIntensity(idx));
        }
        Ok(Self {
            geometry,
            data,
            intensity_unit: String::new(),
            orientation: None,
        })
    }

    pub fn with_unit(mut self, unit: impl Into<String>) -> Self {
        self.intensity_unit = unit.into();
        self
    }

    pub fn dims(&self) -> [usize; 3] {
        self.geometry.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.geometry.spacing
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.geometry.index(i, j, k)]
    }

    /// Intensities of the voxels selected by `mask`, in storage order.
    pub fn masked_values(&self, mask: &MaskROI) -> Vec<f64> {
        self.data
            .iter()
            .zip(mask.voxels.iter())
            .filter_map(|(&v, &m)| m.then_some(v))
            .collect()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            data: self.data.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }
}

/// Binary region on the grid of a companion [`VolumeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct MaskROI {
    pub geometry: Geometry,
    pub voxels: Vec<bool>,
    pub label: String,
}

impl MaskROI {
    pub fn new(
        geometry: Geometry,
        voxels: Vec<bool>,
        label: impl Into<String>,
    ) -> Result<Self, VolumeError> {
        if geometry.len() != voxels.len() {
            return Err(VolumeError::LengthMismatch {
                expected: geometry.len(),
                actual: voxels.len(),
            });
        }
        Ok(Self {
            geometry,
            voxels,
            label: label.into(),
        })
    }

    pub fn empty(geometry: Geometry, label: impl Into<String>) -> Self {
        Self {
            geometry,
            voxels: vec![false; geometry.len()],
            label: label.into(),
        }
    }

    /// Builds a mask from real values, which must be exactly 0 or 1.
    pub fn from_values(
        geometry: Geometry,
        values: &[f64],
        label: impl Into<String>,
    ) -> Result<Self, VolumeError> {
        if geometry.len() != values.len() {
            return Err(VolumeError::LengthMismatch {
                expected: geometry.len(),
                actual: values.len(),
            });
        }
        let mut voxels = Vec::with_capacity(values.len());
        for (index, &value) in values.iter().enumerate() {
            if value == 0.0 {
                voxels.push(false);
            } else if value == 1.0 {
                voxels.push(true);
            } else {
                return Err(VolumeError::NonBinaryMask { index, value });
            }
        }
        Ok(Self {
            geometry,
            voxels,
            label: label.into(),
        })
    }

    pub fn count(&self) -> usize {
        self.voxels.iter().filter(|&&v| v).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.voxels.iter().any(|&v| v)
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> bool {
        self.voxels[self.geometry.index(i, j, k)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, value: bool) {
        let idx = self.geometry.index(i, j, k);
        self.voxels[idx] = value;
    }

    /// Linear indices of the voxels inside the region, ascending.
    pub fn indices(&self) -> Vec<usize> {
        self.voxels
            .iter()
            .enumerate()
            .filter_map(|(i, &v)| v.then_some(i))
            .collect()
    }

    pub fn to_values(&self) -> Vec<f64> {
        self.voxels
            .iter()
            .map(|&v| if v { 1.0 } else { 0.0 })
            .collect()
    }

    pub fn check_on(&self, image: &VolumeGrid) -> Result<(), VolumeError> {
        if image.geometry.matches(&self.geometry) {
            Ok(())
        } else {
            Err(VolumeError::GeometryMismatch {
                image: image.geometry,
                mask: self.geometry,
            })
        }
    }
}
