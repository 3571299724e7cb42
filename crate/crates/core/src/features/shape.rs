//! Shape features of the mask in physical units.

use nalgebra::{Matrix3, SymmetricEigen};

use super::catalog::FeatureClass;
use super::mesh::mesh_measures;
use super::{FeatureError, FeatureVector};
use crate::volume::MaskROI;

/// Minor eigenvalues at or below this fraction of the largest are zero.
pub const EIGEN_FLOOR: f64 = 1e-12;

/// Eigenvalues (descending, clamped at zero) of the population covariance of
/// in-mask voxel centres.
pub fn principal_moments(m: &MaskROI) -> [f64; 3] {
    let g = &m.geometry;
    let pts: Vec<[f64; 3]> = m
        .indices()
        .into_iter()
        .map(|idx| {
            let c = g.coords(idx);
            [0, 1, 2].map(|k| c[k] as f64 * g.spacing[k])
        })
        .collect();
    let n = pts.len() as f64;
    let mean = [0, 1, 2].map(|k| pts.iter().map(|p| p[k]).sum::<f64>() / n);
    let mut cov = Matrix3::<f64>::zeros();
    for p in &pts {
        for a in 0..3 {
            for b in 0..3 {
                cov[(a, b)] += (p[a] - mean[a]) * (p[b] - mean[b]) / n;
            }
        }
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(cov)
        .eigenvalues
        .iter()
        .map(|l: &f64| l.max(0.0))
        .collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    for k in 1..3 {
        if ev[k] <= EIGEN_FLOOR * ev[0] {
            ev[k] = 0.0;
        }
    }
    [ev[0], ev[1], ev[2]]
}

/// In-mask voxels with at least one face neighbour outside the mask.
pub fn surface_voxels(m: &MaskROI) -> Vec<[usize; 3]> {
    const FACES: [[isize; 3]; 6] = [
        [1, 0, 0],
        [-1, 0, 0],
        [0, 1, 0],
        [0, -1, 0],
        [0, 0, 1],
        [0, 0, -1],
    ];
    let g = &m.geometry;
    m.indices()
        .into_iter()
        .map(|idx| g.coords(idx))
        .filter(|&c| {
            FACES
                .iter()
                .any(|&o| g.offset(c, o).is_none_or(|n| !m.voxels[n]))
        })
        .collect()
}

/// Maximum surface-voxel distances: [3D, same z (slice), same y (column),
/// same x (row)].
pub fn diameters(m: &MaskROI) -> [f64; 4] {
    let s = m.geometry.spacing;
    let pts = surface_voxels(m);
    let mut best = [0.0f64; 4];
    for (a, p) in pts.iter().enumerate() {
        for q in &pts[a + 1..] {
            let d = [0, 1, 2].map(|k| (p[k] as f64 - q[k] as f64) * s[k]);
            let d2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
            best[0] = best[0].max(d2);
            if p[2] == q[2] {
                best[1] = best[1].max(d2);
            }
            if p[1] == q[1] {
                best[2] = best[2].max(d2);
            }
            if p[0] == q[0] {
                best[3] = best[3].max(d2);
            }
        }
    }
    best.map(f64::sqrt)
}

pub fn extract_shape(m: &MaskROI) -> Result<FeatureVector, FeatureError> {
    if m.is_empty() {
        return Err(FeatureError::EmptyMask);
    }
    let voxel_volume = m.count() as f64 * m.geometry.voxel_volume();
    let mesh = mesh_measures(m);
    let (v, a) = (mesh.volume, mesh.area);
    let [l1, l2, l3] = principal_moments(m);
    let flat = l1 == 0.0;
    let (elong, flatness) = if flat {
        (1.0, 1.0)
    } else {
        ((l2 / l1).sqrt(), (l3 / l1).sqrt())
    };
    let [d3, slice, column, row] = diameters(m);
    let sphericity = (36.0 * std::f64::consts::PI * v * v).cbrt() / a;
    Ok(FeatureVector::from_class(
        FeatureClass::Shape,
        vec![
            ("Elongation", elong, flat),
            ("Flatness", flatness, flat),
            ("LeastAxisLength", 4.0 * l3.sqrt(), false),
            ("MajorAxisLength", 4.0 * l1.sqrt(), false),
            ("Maximum2DDiameterColumn", column, false),
            ("Maximum2DDiameterRow", row, false),
            ("Maximum2DDiameterSlice", slice, false),
            ("Maximum3DDiameter", d3, false),
            ("MeshVolume", v, false),
            ("MinorAxisLength", 4.0 * l2.sqrt(), false),
            ("Sphericity", sphericity, false),
            ("SurfaceArea", a, false),
            ("SurfaceVolumeRatio", a / v, false),
            ("VoxelVolume", voxel_volume, false),
        ],
    ))
}
