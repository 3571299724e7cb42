//! Gray level co-occurrence matrix over the 13 distance-1 directions.

use nalgebra::{DMatrix, SymmetricEigen};

use super::catalog::{FeatureClass, GLCM};
use super::neighborhood::DIRECTIONS_13;
use super::{FeatureError, FeatureVector, MatrixKind, TextureMatrix};
use crate::preprocess::DiscretizedVolume;

/// Symmetric pair-count matrices, one per direction that has at least one
/// in-mask pair. The matrix size is the highest gray level present.
pub fn build_glcm(d: &DiscretizedVolume) -> Result<Vec<([isize; 3], TextureMatrix)>, FeatureError> {
    if d.voxel_count() == 0 {
        return Err(FeatureError::EmptyMask);
    }
    let ng = d.max_level() as usize;
    let g = &d.geometry;
    let mut out = Vec::new();
    for dir in DIRECTIONS_13 {
        let mut p = TextureMatrix::zeros(MatrixKind::Glcm, ng, ng);
        for (idx, &a) in d.labels.iter().enumerate() {
            if a == 0 {
                continue;
            }
            if let Some(n) = g.offset(g.coords(idx), dir) {
                let b = d.labels[n];
                if b > 0 {
                    p.add(a as usize - 1, b as usize - 1, 1.0);
                    p.add(b as usize - 1, a as usize - 1, 1.0);
                }
            }
        }
        if p.total() > 0.0 {
            out.push((dir, p));
        }
    }
    if out.is_empty() {
        return Err(FeatureError::NoValidPairs);
    }
    Ok(out)
}

fn entropy(p: impl Iterator<Item = f64>) -> f64 {
    -p.filter(|&v| v > 0.0).map(|v| v * v.log2()).sum::<f64>()
}

/// Per-direction features, in catalog order, with degenerate flags.
pub fn direction_features(m: &TextureMatrix) -> Vec<(f64, bool)> {
    let ng = m.rows;
    let total = m.total();
    let p: Vec<f64> = m.counts.iter().map(|c| c / total).collect();
    let at = |i: usize, j: usize| p[i * ng + j];
    let lv = |i: usize| (i + 1) as f64;

    let mut px = vec![0.0; ng];
    let mut py = vec![0.0; ng];
    let mut psum = vec![0.0; 2 * ng + 1];
    let mut pdiff = vec![0.0; ng];
    for i in 0..ng {
        for j in 0..ng {
            let v = at(i, j);
            px[i] += v;
            py[j] += v;
            psum[i + j + 2] += v;
            pdiff[i.abs_diff(j)] += v;
        }
    }
    let ux: f64 = (0..ng).map(|i| lv(i) * px[i]).sum();
    let uy: f64 = (0..ng).map(|j| lv(j) * py[j]).sum();
    let sx = (0..ng)
        .map(|i| (lv(i) - ux).powi(2) * px[i])
        .sum::<f64>()
        .sqrt();
    let sy = (0..ng)
        .map(|j| (lv(j) - uy).powi(2) * py[j])
        .sum::<f64>()
        .sqrt();

    let mut autocorr = 0.0;
    let mut prom = 0.0;
    let mut shade = 0.0;
    let mut tend = 0.0;
    let mut contrast = 0.0;
    let mut energy = 0.0;
    let mut maxp: f64 = 0.0;
    let mut sumsq = 0.0;
    let mut hxy1 = 0.0;
    let mut hxy2 = 0.0;
    for i in 0..ng {
        for j in 0..ng {
            let v = at(i, j);
            let (a, b) = (lv(i), lv(j));
            let c = a + b - ux - uy;
            autocorr += v * a * b;
            prom += v * c.powi(4);
            shade += v * c.powi(3);
            tend += v * c * c;
            contrast += v * (a - b).powi(2);
            energy += v * v;
            maxp = maxp.max(v);
            sumsq += v * (a - ux).powi(2);
            let q = px[i] * py[j];
            if q > 0.0 {
                hxy1 -= v * q.log2();
                hxy2 -= q * q.log2();
            }
        }
    }
    let hx = entropy(px.iter().copied());
    let hy = entropy(py.iter().copied());
    let hxy = entropy(p.iter().copied());

    let corr_degenerate = sx * sy < 1e-12;
    let correlation = if corr_degenerate {
        1.0
    } else {
        (autocorr - ux * uy) / (sx * sy)
    };
    let hmax = hx.max(hy);
    let imc1 = if hmax == 0.0 {
        (0.0, true)
    } else {
        ((hxy - hxy1) / hmax, false)
    };
    let imc2 = if hxy2 - hxy <= 0.0 {
        (0.0, true)
    } else {
        ((1.0 - (-2.0 * (hxy2 - hxy)).exp()).sqrt(), false)
    };

    let ngf = ng as f64;
    let k = |k: usize| k as f64;
    let diff_avg: f64 = (0..ng).map(|d| k(d) * pdiff[d]).sum();
    let diff_var: f64 = (0..ng).map(|d| (k(d) - diff_avg).powi(2) * pdiff[d]).sum();
    let id: f64 = (0..ng).map(|d| pdiff[d] / (1.0 + k(d))).sum();
    let idm: f64 = (0..ng).map(|d| pdiff[d] / (1.0 + k(d) * k(d))).sum();
    let idn: f64 = (0..ng).map(|d| pdiff[d] / (1.0 + k(d) / ngf)).sum();
    let idmn: f64 = (0..ng)
        .map(|d| pdiff[d] / (1.0 + k(d) * k(d) / (ngf * ngf)))
        .sum();
    let inv_var: f64 = (1..ng).map(|d| pdiff[d] / (k(d) * k(d))).sum();
    let sum_avg: f64 = (2..=2 * ng).map(|s| k(s) * psum[s]).sum();

    let (mcc, mcc_degenerate) = mcc(&p, &px, ng);

    let values: [(f64, bool); 24] = [
        (autocorr, false),
        (prom, false),
        (shade, false),
        (tend, false),
        (contrast, false),
        (correlation, corr_degenerate),
        (diff_avg, false),
        (entropy(pdiff.iter().copied()), false),
        (diff_var, false),
        (id, false),
        (idm, false),
        (idmn, false),
        (idn, false),
        imc1,
        imc2,
        (inv_var, false),
        (ux, false),
        (energy, false),
        (hxy, false),
        (mcc, mcc_degenerate),
        (maxp, false),
        (sum_avg, false),
        (entropy(psum.iter().copied()), false),
        (sumsq, false),
    ];
    values.to_vec()
}

/// Second-largest eigenvalue of `Q = D⁻¹ P D⁻¹ Pᵀ`, via the symmetric
/// matrix `S = D^{-1/2} P D^{-1/2}` whose squared eigenvalues are those of Q.
fn mcc(p: &[f64], px: &[f64], ng: usize) -> (f64, bool) {
    let present: Vec<usize> = (0..ng).filter(|&i| px[i] > 0.0).collect();
    let n = present.len();
    if n < 2 {
        return (1.0, true);
    }
    let s = DMatrix::from_fn(n, n, |a, b| {
        let (i, j) = (present[a], present[b]);
        p[i * ng + j] / (px[i] * px[j]).sqrt()
    });
    let mut sq: Vec<f64> = SymmetricEigen::new(s)
        .eigenvalues
        .iter()
        .map(|l| l * l)
        .collect();
    sq.sort_by(|a, b| b.total_cmp(a));
    (sq[1].min(1.0).sqrt(), false)
}

/// Direction-averaged features.
pub fn glcm_features(d: &DiscretizedVolume) -> Result<FeatureVector, FeatureError> {
    let mats = build_glcm(d)?;
    let n = mats.len() as f64;
    let mut acc = vec![(0.0, false); GLCM.len()];
    for (_, m) in &mats {
        for (slot, (v, flag)) in acc.iter_mut().zip(direction_features(m)) {
            slot.0 += v;
            slot.1 |= flag;
        }
    }
    Ok(FeatureVector::from_class(
        FeatureClass::Glcm,
        GLCM.iter()
            .zip(acc)
            .map(|(name, (sum, flag))| (*name, sum / n, flag))
            .collect(),
    ))
}

/// Convention values when no direction has an in-mask pair: Correlation and
/// MCC are 1, everything else 0, all flagged.
pub fn no_pairs_vector() -> FeatureVector {
    FeatureVector::from_class(
        FeatureClass::Glcm,
        GLCM.iter()
            .map(|&name| {
                (
                    name,
                    if name == "Correlation" || name == "MCC" {
                        1.0
                    } else {
                        0.0
                    },
                    true,
                )
            })
            .collect(),
    )
}
