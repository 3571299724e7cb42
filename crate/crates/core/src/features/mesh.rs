//! Marching-cubes surface of a binary mask.
//!
//! The mask is zero-padded by one voxel and the 0.5 isosurface is extracted
//! with vertices at cube-edge midpoints. The 256-entry case table is generated
//! from a face walk: on every cube face the crossing edges are joined by
//! segments (on a face with two diagonal inside corners each inside corner is
//! cut off separately), segments are oriented so that inside corners lie to
//! their right when viewed from outside the cube, and the resulting closed
//! loops are triangulated. Loops of more than three vertices are fanned
//! around their vertex centroid, which makes the surface independent of where
//! a loop is entered.

use std::sync::OnceLock;

use crate::volume::MaskROI;

/// Corner `c` of the unit cube sits at `(c & 1, c >> 1 & 1, c >> 2 & 1)`.
fn corner_offset(c: usize) -> [usize; 3] {
    [c & 1, (c >> 1) & 1, (c >> 2) & 1]
}

/// The 12 cube edges as (lower corner, upper corner).
fn edges() -> [(usize, usize); 12] {
    let mut out = [(0, 0); 12];
    let mut n = 0;
    for axis in 0..3 {
        for c in 0..8 {
            if c & (1 << axis) == 0 {
                out[n] = (c, c | (1 << axis));
                n += 1;
            }
        }
    }
    out
}

fn edge_index(a: usize, b: usize) -> usize {
    let (a, b) = if a < b { (a, b) } else { (b, a) };
    edges()
        .iter()
        .position(|&e| e == (a, b))
        .expect("not a cube edge")
}

/// Edge midpoint in doubled cube coordinates.
fn edge_mid2(e: usize) -> [i32; 3] {
    let (a, b) = edges()[e];
    let (pa, pb) = (corner_offset(a), corner_offset(b));
    [0, 1, 2].map(|k| (pa[k] + pb[k]) as i32)
}

fn cross(a: [i32; 3], b: [i32; 3]) -> [i32; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: [i32; 3], b: [i32; 3]) -> i32 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn sub(a: [i32; 3], b: [i32; 3]) -> [i32; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Directed segments (from edge, to edge) contributed by all six faces.
fn face_segments(config: u8) -> Vec<(usize, usize)> {
    let inside = |c: usize| config >> c & 1 == 1;
    let mut segs = Vec::new();
    for axis in 0..3 {
        let (u, v) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        for side in 0..2 {
            let mut normal = [0i32; 3];
            normal[axis] = 2 * side as i32 - 1;
            let ring: [usize; 4] = [(0, 0), (1, 0), (1, 1), (0, 1)]
                .map(|(cu, cv)| (side << axis) | (cu << u) | (cv << v));
            let crossing: Vec<usize> = (0..4)
                .filter(|&k| inside(ring[k]) != inside(ring[(k + 1) % 4]))
                .collect();
            let mut push = |e1: usize, e2: usize, reference: usize| {
                let p = edge_mid2(e1);
                let q = edge_mid2(e2);
                let r2 = corner_offset(reference).map(|x| 2 * x as i32);
                let s = dot(cross(normal, sub(q, p)), sub(r2, p));
                let want_negative = inside(reference);
                if (s < 0) == want_negative {
                    segs.push((e1, e2));
                } else {
                    segs.push((e2, e1));
                }
            };
            match crossing.len() {
                0 => {}
                2 => {
                    let e1 = edge_index(ring[crossing[0]], ring[(crossing[0] + 1) % 4]);
                    let e2 = edge_index(ring[crossing[1]], ring[(crossing[1] + 1) % 4]);
                    let reference = *ring.iter().find(|&&c| inside(c)).unwrap();
                    push(e1, e2, reference);
                }
                4 => {
                    for k in 0..4 {
                        if inside(ring[k]) {
                            let prev = edge_index(ring[(k + 3) % 4], ring[k]);
                            let next = edge_index(ring[k], ring[(k + 1) % 4]);
                            push(prev, next, ring[k]);
                        }
                    }
                }
                _ => unreachable!("a square face has an even number of crossings"),
            }
        }
    }
    segs
}

/// Closed loops of edge indices for one cube configuration.
fn case_loops(config: u8) -> Vec<Vec<u8>> {
    let segs = face_segments(config);
    let mut next = [usize::MAX; 12];
    for &(a, b) in &segs {
        assert_eq!(
            next[a],
            usize::MAX,
            "edge {a} leaves twice in case {config}"
        );
        next[a] = b;
    }
    let mut used = [false; 12];
    let mut loops = Vec::new();
    for start in 0..12 {
        if next[start] == usize::MAX || used[start] {
            continue;
        }
        let mut lp = Vec::new();
        let mut e = start;
        while !used[e] {
            used[e] = true;
            lp.push(e as u8);
            e = next[e];
            assert_ne!(e, usize::MAX, "open loop in case {config}");
        }
        assert_eq!(e, start, "loop does not close in case {config}");
        loops.push(lp);
    }
    loops
}

fn case_table() -> &'static [Vec<Vec<u8>>] {
    static TABLE: OnceLock<Vec<Vec<Vec<u8>>>> = OnceLock::new();
    TABLE.get_or_init(|| (0..=255u8).map(case_loops).collect())
}

/// Volume and area of the mask's isosurface mesh, in physical units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshMeasures {
    pub volume: f64,
    pub area: f64,
    pub triangles: usize,
}

/// Triangle soup of the isosurface in physical coordinates (grid origin at
/// the centre of voxel (0,0,0)).
pub fn mesh_triangles(mask: &MaskROI) -> Vec<[[f64; 3]; 3]> {
    let mut tris = Vec::new();
    walk(mask, |t| tris.push(t));
    tris
}

pub fn mesh_measures(mask: &MaskROI) -> MeshMeasures {
    let g = &mask.geometry;
    // Accumulate the signed volume about the bounding-box centre.
    let (lo, hi) = bounds(mask).unwrap_or(([0; 3], [0; 3]));
    let c: [f64; 3] = [0, 1, 2].map(|k| 0.5 * (lo[k] + hi[k]) as f64 * g.spacing[k]);
    let mut volume = 0.0;
    let mut area = 0.0;
    let mut triangles = 0;
    walk(mask, |[a, b, d]| {
        let a = [a[0] - c[0], a[1] - c[1], a[2] - c[2]];
        let b = [b[0] - c[0], b[1] - c[1], b[2] - c[2]];
        let d = [d[0] - c[0], d[1] - c[1], d[2] - c[2]];
        let bxd = fcross(b, d);
        volume += fdot(a, bxd) / 6.0;
        let n = fcross(
            [b[0] - a[0], b[1] - a[1], b[2] - a[2]],
            [d[0] - a[0], d[1] - a[1], d[2] - a[2]],
        );
        area += 0.5 * fdot(n, n).sqrt();
        triangles += 1;
    });
    MeshMeasures {
        volume,
        area,
        triangles,
    }
}

fn fcross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn fdot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn bounds(mask: &MaskROI) -> Option<([usize; 3], [usize; 3])> {
    let g = &mask.geometry;
    let mut lo = [usize::MAX; 3];
    let mut hi = [0usize; 3];
    let mut any = false;
    for idx in mask.indices() {
        let p = g.coords(idx);
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
        any = true;
    }
    any.then_some((lo, hi))
}

fn walk(mask: &MaskROI, mut emit: impl FnMut([[f64; 3]; 3])) {
    let Some((lo, hi)) = bounds(mask) else { return };
    let g = &mask.geometry;
    let table = case_table();
    let all_edges = edges();
    let inside = |p: [isize; 3]| -> bool {
        (0..3).all(|k| p[k] >= 0 && (p[k] as usize) < g.dims[k])
            && mask.get(p[0] as usize, p[1] as usize, p[2] as usize)
    };
    // Cube with lower corner at voxel p spans voxels p..p+1; every cube
    // touching the mask has its lower corner in [lo-1, hi].
    for z in lo[2] as isize - 1..=hi[2] as isize {
        for y in lo[1] as isize - 1..=hi[1] as isize {
            for x in lo[0] as isize - 1..=hi[0] as isize {
                let mut config = 0u8;
                for c in 0..8 {
                    let o = corner_offset(c);
                    if inside([x + o[0] as isize, y + o[1] as isize, z + o[2] as isize]) {
                        config |= 1 << c;
                    }
                }
                if config == 0 || config == 255 {
                    continue;
                }
                let vertex = |e: u8| -> [f64; 3] {
                    let (a, b) = all_edges[e as usize];
                    let (pa, pb) = (corner_offset(a), corner_offset(b));
                    let base = [x as f64, y as f64, z as f64];
                    [0, 1, 2].map(|k| (base[k] + 0.5 * (pa[k] + pb[k]) as f64) * g.spacing[k])
                };
                for lp in &table[config as usize] {
                    let pts: Vec<[f64; 3]> = lp.iter().map(|&e| vertex(e)).collect();
                    if pts.len() == 3 {
                        emit([pts[0], pts[1], pts[2]]);
                        continue;
                    }
                    let n = pts.len() as f64;
                    let centroid = [0, 1, 2].map(|k| pts.iter().map(|p| p[k]).sum::<f64>() / n);
                    for i in 0..pts.len() {
                        emit([centroid, pts[i], pts[(i + 1) % pts.len()]]);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::Geometry;
    use std::collections::HashMap;

    fn mask_from(dims: [usize; 3], spacing: [f64; 3], on: &[[usize; 3]]) -> MaskROI {
        let g = Geometry::new(dims, spacing, [0.0; 3]).unwrap();
        let mut m = MaskROI::empty(g, "gtv");
        for p in on {
            m.set(p[0], p[1], p[2], true);
        }
        m
    }

    #[test]
    fn every_case_closes_into_loops() {
        for config in 0..=255u8 {
            let loops = case_loops(config);
            let n_edges: usize = loops.iter().map(Vec::len).sum();
            let crossing = edges()
                .iter()
                .filter(|&&(a, b)| (config >> a & 1) != (config >> b & 1))
                .count();
            assert_eq!(n_edges, crossing, "case {config}");
        }
    }

    #[test]
    fn single_voxel_is_an_octahedron() {
        let m = mask_from([1, 1, 1], [1.0; 3], &[[0, 0, 0]]);
        let r = mesh_measures(&m);
        assert!((r.volume - 1.0 / 6.0).abs() < 1e-12);
        assert!((r.area - 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(r.triangles, 8);
    }

    #[test]
    fn anisotropic_spacing_scales_volume() {
        let m = mask_from([1, 1, 1], [1.5, 1.5, 3.0], &[[0, 0, 0]]);
        let r = mesh_measures(&m);
        assert!((r.volume - 6.75 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn surface_is_closed_and_consistently_oriented() {
        let mut on = Vec::new();
        for (i, p) in (0..64).map(|i| [i % 4, (i / 4) % 4, i / 16]).enumerate() {
            if (i * 37 + 11) % 3 != 0 {
                on.push(p);
            }
        }
        let m = mask_from([4, 4, 4], [1.0, 0.8, 2.0], &on);
        // Every directed edge must be matched by its reverse exactly once.
        let key = |p: [f64; 3]| p.map(|v| (v * 1e6).round() as i64);
        let mut count: HashMap<([i64; 3], [i64; 3]), i32> = HashMap::new();
        for t in mesh_triangles(&m) {
            for i in 0..3 {
                let (a, b) = (key(t[i]), key(t[(i + 1) % 3]));
                *count.entry((a, b)).or_default() += 1;
                *count.entry((b, a)).or_default() -= 1;
            }
        }
        assert!(count.values().all(|&c| c == 0));
        assert!(mesh_measures(&m).volume > 0.0);
    }

    #[test]
    fn large_ball_volume_close_to_voxel_volume() {
        let n = 30usize;
        let c = (n as f64 - 1.0) / 2.0;
        let mut on = Vec::new();
        for z in 0..n {
            for y in 0..n {
                for x in 0..n {
                    let r2 =
                        (x as f64 - c).powi(2) + (y as f64 - c).powi(2) + (z as f64 - c).powi(2);
                    if r2 <= 12.0f64.powi(2) {
                        on.push([x, y, z]);
                    }
                }
            }
        }
        let m = mask_from([n, n, n], [1.0; 3], &on);
        let r = mesh_measures(&m);
        let voxels = on.len() as f64;
        assert!(
            (r.volume - voxels).abs() / voxels < 0.03,
            "{} vs {}",
            r.volume,
            voxels
        );
    }
}
