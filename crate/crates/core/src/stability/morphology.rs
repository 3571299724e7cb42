//! Binary erosion and dilation with a radius-1 structuring element.

use crate::features::neighborhood::structuring_element;
use crate::volume::MaskROI;

/// Voxels whose whole neighbourhood lies in the mask; off-grid counts as
/// outside.
pub fn erode(m: &MaskROI, connectivity: u8) -> MaskROI {
    let se = structuring_element(connectivity);
    let g = &m.geometry;
    let mut out = m.clone();
    for idx in 0..g.len() {
        if m.voxels[idx] {
            let at = g.coords(idx);
            out.voxels[idx] = se
                .iter()
                .all(|&o| g.offset(at, o).is_some_and(|n| m.voxels[n]));
        }
    }
    out
}

/// Voxels in the mask or adjacent to it.
pub fn dilate(m: &MaskROI, connectivity: u8) -> MaskROI {
    let se = structuring_element(connectivity);
    let g = &m.geometry;
    let mut out = m.clone();
    for idx in 0..g.len() {
        if !m.voxels[idx] {
            let at = g.coords(idx);
            out.voxels[idx] = se
                .iter()
                .any(|&o| g.offset(at, o).is_some_and(|n| m.voxels[n]));
        }
    }
    out
}
