//! Voxel neighbourhood offsets.

/// The 13 unique distance-1 directions of the 26-neighbourhood (one of each
/// opposite pair).
pub const DIRECTIONS_13: [[isize; 3]; 13] = [
    [1, 0, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 1, 0],
    [1, -1, 0],
    [1, 0, 1],
    [1, 0, -1],
    [0, 1, 1],
    [0, 1, -1],
    [1, 1, 1],
    [1, 1, -1],
    [1, -1, 1],
    [1, -1, -1],
];

/// All 26 offsets with Chebyshev distance 1.
pub const NEIGHBORS_26: [[isize; 3]; 26] = {
    let mut out = [[0isize; 3]; 26];
    let mut n = 0;
    let mut dz = -1;
    while dz <= 1 {
        let mut dy = -1;
        while dy <= 1 {
            let mut dx = -1;
            while dx <= 1 {
                if !(dx == 0 && dy == 0 && dz == 0) {
                    out[n] = [dx, dy, dz];
                    n += 1;
                }
                dx += 1;
            }
            dy += 1;
        }
        dz += 1;
    }
    out
};

/// Offsets of the radius-1 structuring element with the given connectivity
/// (6, 18 or 26), excluding the centre.
pub fn structuring_element(connectivity: u8) -> Vec<[isize; 3]> {
    let max_nonzero = match connectivity {
        6 => 1,
        18 => 2,
        _ => 3,
    };
    NEIGHBORS_26
        .iter()
        .copied()
        .filter(|o| o.iter().filter(|&&c| c != 0).count() <= max_nonzero)
        .collect()
}
