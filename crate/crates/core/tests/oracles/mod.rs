//! Direct-enumeration reference implementations of every feature, used to
//! check the library on small random volumes. Everything here is written from
//! the feature definitions with all-pairs loops and no shared code.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use deltarad::features::{self, FeatureError, FeatureVector};
use deltarad::preprocess::DiscretizedVolume;
use deltarad::{Geometry, MaskROI, VolumeGrid};
use rand::Rng;

pub struct Case {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub mask: Vec<bool>,
    pub labels: Vec<u32>,
    pub values: Vec<f64>,
}

impl Case {
    pub fn n(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn pos(&self, idx: usize) -> [i64; 3] {
        let nx = self.dims[0];
        let ny = self.dims[1];
        [
            (idx % nx) as i64,
            ((idx / nx) % ny) as i64,
            (idx / (nx * ny)) as i64,
        ]
    }

    fn voxels(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.mask[i]).collect()
    }
}

/// Random region of up to `max_dim` voxels per side with at least one voxel.
pub fn random_case(rng: &mut impl Rng, max_dim: usize) -> Case {
    let dims = [0; 3].map(|_| rng.random_range(1..=max_dim));
    let spacing = [0; 3].map(|_| [0.5, 0.8, 1.0, 1.5, 3.0][rng.random_range(0..5)]);
    let n = dims[0] * dims[1] * dims[2];
    let fill = rng.random_range(0.3..1.0);
    let mut mask: Vec<bool> = (0..n).map(|_| rng.random_bool(fill)).collect();
    if !mask.iter().any(|&b| b) {
        let i = rng.random_range(0..n);
        mask[i] = true;
    }
    let levels = rng.random_range(1..=6u32);
    let labels = mask
        .iter()
        .map(|&m| if m { rng.random_range(1..=levels) } else { 0 })
        .collect();
    let values = (0..n).map(|_| rng.random_range(-5.0..20.0)).collect();
    Case {
        dims,
        spacing,
        mask,
        labels,
        values,
    }
}

/// `|a - b| <= tol * max(|a|, |b|, 1)`.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// Mesh-derived shape features are compared at this looser tolerance.
pub fn tolerance_for(name: &str) -> f64 {
    const MESH: [&str; 4] = [
        "original_shape_MeshVolume",
        "original_shape_SurfaceArea",
        "original_shape_Sphericity",
        "original_shape_SurfaceVolumeRatio",
    ];
    if MESH.contains(&name) {
        1e-6
    } else {
        1e-9
    }
}

fn h(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

fn chebyshev1(a: [i64; 3], b: [i64; 3]) -> bool {
    a != b && (0..3).all(|k| (a[k] - b[k]).abs() <= 1)
}

fn oracle_directions() -> Vec<[i64; 3]> {
    let mut out = Vec::new();
    for z in -1..=1 {
        for y in -1..=1 {
            for x in -1..=1 {
                let d = [x, y, z];
                if let Some(&first) = d.iter().find(|&&c| c != 0) {
                    if first > 0 {
                        out.push(d);
                    }
                }
            }
        }
    }
    out
}

/// Library features for the case, computed class by class on the case's own
/// labels (so the oracle and the library see the same discretization).
pub fn library_features(c: &Case) -> FeatureVector {
    let g = Geometry::new(c.dims, c.spacing, [0.0; 3]).unwrap();
    let v = VolumeGrid::new(g, c.values.clone()).unwrap();
    let m = MaskROI::new(g, c.mask.clone(), "gtv").unwrap();
    let d = DiscretizedVolume::from_labels(g, c.labels.clone(), 6);
    let mut out = features::shape::extract_shape(&m).unwrap();
    out.extend(features::first_order::extract_first_order(&v, &m, &d).unwrap());
    match features::glcm::glcm_features(&d) {
        Ok(f) => out.extend(f),
        Err(FeatureError::NoValidPairs) => {}
        Err(e) => panic!("{e}"),
    }
    out.extend(features::gldm::gldm_features(&d, 0).unwrap());
    out.extend(features::glrlm::glrlm_features(&d).unwrap());
    out.extend(features::glszm::glszm_features(&d).unwrap());
    out.extend(features::ngtdm::ngtdm_features(&d).unwrap());
    out
}

/// Names whose library value differs from the oracle beyond tolerance.
pub fn mismatches(c: &Case) -> Vec<String> {
    let lib = library_features(c);
    let ora = all_features(c);
    let mut bad = Vec::new();
    if lib.len() != ora.len() {
        bad.push(format!("count {} vs {}", lib.len(), ora.len()));
    }
    for (name, want) in ora {
        match lib.get(&name) {
            Some(got) if close(got, want, tolerance_for(&name)) => {}
            got => bad.push(format!("{name}: library {got:?} oracle {want}")),
        }
    }
    bad
}

// ---------------------------------------------------------------- first order

pub fn first_order(c: &Case) -> Vec<(String, f64)> {
    let mut x: Vec<f64> = c.voxels().iter().map(|&i| c.values[i]).collect();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let pct = |q: f64| {
        let h = (x.len() - 1) as f64 * q;
        let lo = h.floor() as usize;
        let frac = h - lo as f64;
        if frac == 0.0 {
            x[lo]
        } else {
            x[lo] * (1.0 - frac) + x[lo + 1] * frac
        }
    };
    let mean = x.iter().sum::<f64>() / n;
    let moment = |k: i32| x.iter().map(|v| (v - mean).powi(k)).sum::<f64>() / n;
    let var = moment(2);
    let (skew, kurt) = if var == 0.0 {
        (0.0, 0.0)
    } else {
        (moment(3) / var.powf(1.5), moment(4) / var.powi(2))
    };
    let energy: f64 = x.iter().map(|v| v * v).sum();
    let (p10, p90) = (pct(0.1), pct(0.9));
    let mid: Vec<f64> = x
        .iter()
        .copied()
        .filter(|v| (p10..=p90).contains(v))
        .collect();
    let mid_mean = mid.iter().sum::<f64>() / mid.len().max(1) as f64;
    let mut counts: BTreeMap<u32, f64> = BTreeMap::new();
    for i in c.voxels() {
        *counts.entry(c.labels[i]).or_default() += 1.0;
    }
    let probs: Vec<f64> = counts.values().map(|k| k / n).collect();
    let vv = c.spacing.iter().product::<f64>();
    named(
        "original_firstorder_",
        vec![
            ("10Percentile", p10),
            ("90Percentile", p90),
            ("Energy", energy),
            ("Entropy", probs.iter().map(|&p| h(p)).sum()),
            ("InterquartileRange", pct(0.75) - pct(0.25)),
            ("Kurtosis", kurt),
            ("Maximum", x[x.len() - 1]),
            (
                "MeanAbsoluteDeviation",
                x.iter().map(|v| (v - mean).abs()).sum::<f64>() / n,
            ),
            ("Mean", mean),
            ("Median", pct(0.5)),
            ("Minimum", x[0]),
            ("Range", x[x.len() - 1] - x[0]),
            (
                "RobustMeanAbsoluteDeviation",
                mid.iter().map(|v| (v - mid_mean).abs()).sum::<f64>() / mid.len().max(1) as f64,
            ),
            ("RootMeanSquared", (energy / n).sqrt()),
            ("Skewness", skew),
            ("TotalEnergy", energy * vv),
            ("Uniformity", probs.iter().map(|p| p * p).sum()),
            ("Variance", var),
        ],
    )
}

fn named(prefix: &str, items: Vec<(&str, f64)>) -> Vec<(String, f64)> {
    items
        .into_iter()
        .map(|(n, v)| (format!("{prefix}{n}"), v))
        .collect()
}

// ----------------------------------------------------------------------- GLCM

fn glcm_counts(c: &Case, d: [i64; 3], ng: usize) -> Vec<Vec<f64>> {
    let mut p = vec![vec![0.0; ng + 1]; ng + 1];
    let vox = c.voxels();
    for &a in &vox {
        for &b in &vox {
            let (pa, pb) = (c.pos(a), c.pos(b));
            if (0..3).all(|k| pb[k] - pa[k] == d[k]) {
                let (la, lb) = (c.labels[a] as usize, c.labels[b] as usize);
                p[la][lb] += 1.0;
                p[lb][la] += 1.0;
            }
        }
    }
    p
}

fn glcm_direction(p: &[Vec<f64>], ng: usize) -> Vec<f64> {
    let total: f64 = p.iter().flatten().sum();
    let p: Vec<Vec<f64>> = p
        .iter()
        .map(|r| r.iter().map(|v| v / total).collect())
        .collect();
    let lv = 1..=ng;
    let px: Vec<f64> = (0..=ng).map(|i| p[i].iter().sum()).collect();
    let py: Vec<f64> = (0..=ng).map(|j| (0..=ng).map(|i| p[i][j]).sum()).collect();
    let ux: f64 = lv.clone().map(|i| i as f64 * px[i]).sum();
    let uy: f64 = lv.clone().map(|j| j as f64 * py[j]).sum();
    let sx = lv
        .clone()
        .map(|i| (i as f64 - ux).powi(2) * px[i])
        .sum::<f64>()
        .sqrt();
    let sy = lv
        .clone()
        .map(|j| (j as f64 - uy).powi(2) * py[j])
        .sum::<f64>()
        .sqrt();

    let sum2 = |f: &dyn Fn(f64, f64, f64) -> f64| {
        let mut s = 0.0;
        for i in 1..=ng {
            for j in 1..=ng {
                s += f(i as f64, j as f64, p[i][j]);
            }
        }
        s
    };
    let autocorr = sum2(&|i, j, v| v * i * j);
    let prom = sum2(&|i, j, v| v * (i + j - ux - uy).powi(4));
    let shade = sum2(&|i, j, v| v * (i + j - ux - uy).powi(3));
    let tend = sum2(&|i, j, v| v * (i + j - ux - uy).powi(2));
    let contrast = sum2(&|i, j, v| v * (i - j).powi(2));
    let cov = sum2(&|i, j, v| v * (i - ux) * (j - uy));
    let diff_avg = sum2(&|i, j, v| v * (i - j).abs());
    let ngf = ng as f64;
    let id = sum2(&|i, j, v| v / (1.0 + (i - j).abs()));
    let idm = sum2(&|i, j, v| v / (1.0 + (i - j).powi(2)));
    let idn = sum2(&|i, j, v| v / (1.0 + (i - j).abs() / ngf));
    let idmn = sum2(&|i, j, v| v / (1.0 + (i - j).powi(2) / (ngf * ngf)));
    let invvar = sum2(&|i, j, v| if i == j { 0.0 } else { v / (i - j).powi(2) });
    let energy = sum2(&|_, _, v| v * v);
    let hxy = sum2(&|_, _, v| h(v));
    let maxp = p.iter().flatten().copied().fold(0.0, f64::max);
    let sum_avg = sum2(&|i, j, v| v * (i + j));
    let sumsq = sum2(&|i, _, v| v * (i - ux).powi(2));
    let hxy1 = sum2(&|i, j, v| {
        let q = px[i as usize] * py[j as usize];
        if q > 0.0 {
            -v * q.log2()
        } else {
            0.0
        }
    });
    let hxy2 = sum2(&|i, j, _| h(px[i as usize] * py[j as usize]));
    let hx: f64 = px.iter().map(|&v| h(v)).sum();
    let hy: f64 = py.iter().map(|&v| h(v)).sum();

    let mut pdiff: BTreeMap<usize, f64> = BTreeMap::new();
    let mut psum: BTreeMap<usize, f64> = BTreeMap::new();
    for i in 1..=ng {
        for j in 1..=ng {
            *pdiff.entry(i.abs_diff(j)).or_default() += p[i][j];
            *psum.entry(i + j).or_default() += p[i][j];
        }
    }
    let diff_ent: f64 = pdiff.values().map(|&v| h(v)).sum();
    let diff_var: f64 = pdiff
        .iter()
        .map(|(&k, &v)| (k as f64 - diff_avg).powi(2) * v)
        .sum();
    let sum_ent: f64 = psum.values().map(|&v| h(v)).sum();

    let correlation = if sx * sy < 1e-12 {
        1.0
    } else {
        cov / (sx * sy)
    };
    let imc1 = if hx.max(hy) == 0.0 {
        0.0
    } else {
        (hxy - hxy1) / hx.max(hy)
    };
    let imc2 = if hxy2 - hxy <= 0.0 {
        0.0
    } else {
        (1.0 - (-2.0 * (hxy2 - hxy)).exp()).sqrt()
    };

    // Q(i,j) = sum_k p(i,k) p(j,k) / (px(i) py(k)); MCC = sqrt of its
    // second-largest eigenvalue, from a general (Schur) eigen-solver.
    let present: Vec<usize> = (1..=ng).filter(|&i| px[i] > 0.0).collect();
    let mcc = if present.len() < 2 {
        1.0
    } else {
        let m = present.len();
        let q = nalgebra::DMatrix::from_fn(m, m, |a, b| {
            let (i, j) = (present[a], present[b]);
            (1..=ng)
                .filter(|&k| py[k] > 0.0)
                .map(|k| p[i][k] * p[j][k] / (px[i] * py[k]))
                .sum::<f64>()
        });
        let schur = nalgebra::linalg::Schur::try_new(q.clone(), f64::EPSILON, 100_000)
            .or_else(|| nalgebra::linalg::Schur::try_new(q, 1e-13, 100_000))
            .expect("Schur iteration converges");
        let mut ev: Vec<f64> = schur.complex_eigenvalues().iter().map(|z| z.re).collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        ev[1].clamp(0.0, 1.0).sqrt()
    };

    vec![
        autocorr,
        prom,
        shade,
        tend,
        contrast,
        correlation,
        diff_avg,
        diff_ent,
        diff_var,
        id,
        idm,
        idmn,
        idn,
        imc1,
        imc2,
        invvar,
        ux,
        energy,
        hxy,
        mcc,
        maxp,
        sum_avg,
        sum_ent,
        sumsq,
    ]
}

pub const GLCM_NAMES: [&str; 24] = [
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

/// `None` when no direction has a pair.
pub fn glcm(c: &Case) -> Option<Vec<(String, f64)>> {
    let ng = *c.labels.iter().max().unwrap() as usize;
    let mut acc = vec![0.0; 24];
    let mut used = 0;
    for d in oracle_directions() {
        let p = glcm_counts(c, d, ng);
        if p.iter().flatten().sum::<f64>() == 0.0 {
            continue;
        }
        used += 1;
        for (a, v) in acc.iter_mut().zip(glcm_direction(&p, ng)) {
            *a += v;
        }
    }
    if used == 0 {
        return None;
    }
    Some(
        GLCM_NAMES
            .iter()
            .zip(acc)
            .map(|(n, v)| (format!("original_glcm_{n}"), v / used as f64))
            .collect(),
    )
}

// ----------------------------------------------- run / zone / dependence matrices

/// (gray level, size) -> count
type SizeTable = HashMap<(usize, usize), f64>;

struct RunStats(BTreeMap<&'static str, f64>);

fn size_table_stats(t: &SizeTable) -> RunStats {
    let n: f64 = t.values().sum();
    let mut gl: BTreeMap<usize, f64> = BTreeMap::new();
    let mut sz: BTreeMap<usize, f64> = BTreeMap::new();
    for (&(i, j), &v) in t {
        *gl.entry(i).or_default() += v;
        *sz.entry(j).or_default() += v;
    }
    let e = |f: &dyn Fn(f64, f64) -> f64| {
        t.iter()
            .map(|(&(i, j), &v)| v * f(i as f64, j as f64))
            .sum::<f64>()
            / n
    };
    let mu_i = e(&|i, _| i);
    let mu_j = e(&|_, j| j);
    let mut m = BTreeMap::new();
    m.insert("n", n);
    m.insert("small", e(&|_, j| 1.0 / (j * j)));
    m.insert("large", e(&|_, j| j * j));
    m.insert("low", e(&|i, _| 1.0 / (i * i)));
    m.insert("high", e(&|i, _| i * i));
    m.insert("small_low", e(&|i, j| 1.0 / (i * i * j * j)));
    m.insert("small_high", e(&|i, j| i * i / (j * j)));
    m.insert("large_low", e(&|i, j| j * j / (i * i)));
    m.insert("large_high", e(&|i, j| i * i * j * j));
    m.insert("gvar", e(&|i, _| (i - mu_i).powi(2)));
    m.insert("svar", e(&|_, j| (j - mu_j).powi(2)));
    m.insert("entropy", t.values().map(|&v| h(v / n)).sum());
    m.insert("gln", gl.values().map(|v| v * v).sum::<f64>() / n);
    m.insert("glnn", gl.values().map(|v| v * v).sum::<f64>() / (n * n));
    m.insert("sn", sz.values().map(|v| v * v).sum::<f64>() / n);
    m.insert("snn", sz.values().map(|v| v * v).sum::<f64>() / (n * n));
    RunStats(m)
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    let mut y = x;
    while parent[y] != r {
        let next = parent[y];
        parent[y] = r;
        y = next;
    }
    r
}

/// Components of equal-label voxels under a pair predicate, as (label, size).
fn components(c: &Case, linked: impl Fn([i64; 3], [i64; 3]) -> bool) -> Vec<(usize, usize)> {
    let vox = c.voxels();
    let mut parent: Vec<usize> = (0..vox.len()).collect();
    for a in 0..vox.len() {
        for b in 0..vox.len() {
            if a != b
                && c.labels[vox[a]] == c.labels[vox[b]]
                && linked(c.pos(vox[a]), c.pos(vox[b]))
            {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                parent[ra] = rb;
            }
        }
    }
    let mut sizes: HashMap<usize, (usize, usize)> = HashMap::new();
    for a in 0..vox.len() {
        let r = find(&mut parent, a);
        let e = sizes.entry(r).or_insert((c.labels[vox[a]] as usize, 0));
        e.1 += 1;
    }
    sizes.into_values().collect()
}

fn table_from(items: &[(usize, usize)]) -> SizeTable {
    let mut t = SizeTable::new();
    for &(l, s) in items {
        *t.entry((l, s)).or_default() += 1.0;
    }
    t
}

pub fn glrlm(c: &Case) -> Vec<(String, f64)> {
    let np = c.voxels().len() as f64;
    let keys = [
        ("GrayLevelNonUniformity", "gln"),
        ("GrayLevelNonUniformityNormalized", "glnn"),
        ("GrayLevelVariance", "gvar"),
        ("HighGrayLevelRunEmphasis", "high"),
        ("LongRunEmphasis", "large"),
        ("LongRunHighGrayLevelEmphasis", "large_high"),
        ("LongRunLowGrayLevelEmphasis", "large_low"),
        ("LowGrayLevelRunEmphasis", "low"),
        ("RunEntropy", "entropy"),
        ("RunLengthNonUniformity", "sn"),
        ("RunLengthNonUniformityNormalized", "snn"),
        ("RunPercentage", "n"),
        ("RunVariance", "svar"),
        ("ShortRunEmphasis", "small"),
        ("ShortRunHighGrayLevelEmphasis", "small_high"),
        ("ShortRunLowGrayLevelEmphasis", "small_low"),
    ];
    let dirs = oracle_directions();
    let mut acc = vec![0.0; keys.len()];
    for d in &dirs {
        let d = *d;
        let runs = components(c, |a, b| {
            (0..3).all(|k| b[k] - a[k] == d[k]) || (0..3).all(|k| a[k] - b[k] == d[k])
        });
        let s = size_table_stats(&table_from(&runs));
        for (slot, (name, key)) in acc.iter_mut().zip(keys) {
            let v = s.0[key];
            *slot += if name == "RunPercentage" { v / np } else { v };
        }
    }
    keys.iter()
        .zip(acc)
        .map(|((n, _), v)| (format!("original_glrlm_{n}"), v / dirs.len() as f64))
        .collect()
}

pub fn glszm(c: &Case) -> Vec<(String, f64)> {
    let np = c.voxels().len() as f64;
    let zones = components(c, chebyshev1);
    let s = size_table_stats(&table_from(&zones));
    let keys = [
        ("GrayLevelNonUniformity", "gln"),
        ("GrayLevelNonUniformityNormalized", "glnn"),
        ("GrayLevelVariance", "gvar"),
        ("HighGrayLevelZoneEmphasis", "high"),
        ("LargeAreaEmphasis", "large"),
        ("LargeAreaHighGrayLevelEmphasis", "large_high"),
        ("LargeAreaLowGrayLevelEmphasis", "large_low"),
        ("LowGrayLevelZoneEmphasis", "low"),
        ("SizeZoneNonUniformity", "sn"),
        ("SizeZoneNonUniformityNormalized", "snn"),
        ("SmallAreaEmphasis", "small"),
        ("SmallAreaHighGrayLevelEmphasis", "small_high"),
        ("SmallAreaLowGrayLevelEmphasis", "small_low"),
        ("ZoneEntropy", "entropy"),
        ("ZonePercentage", "n"),
        ("ZoneVariance", "svar"),
    ];
    keys.iter()
        .map(|&(n, k)| {
            let v = s.0[k];
            (
                format!("original_glszm_{n}"),
                if n == "ZonePercentage" { v / np } else { v },
            )
        })
        .collect()
}

pub fn gldm(c: &Case) -> Vec<(String, f64)> {
    let vox = c.voxels();
    let mut items = Vec::new();
    for &a in &vox {
        let dep = vox
            .iter()
            .filter(|&&b| c.labels[b] == c.labels[a] && chebyshev1(c.pos(a), c.pos(b)))
            .count();
        items.push((c.labels[a] as usize, dep + 1));
    }
    let s = size_table_stats(&table_from(&items));
    let keys = [
        ("DependenceEntropy", "entropy"),
        ("DependenceNonUniformity", "sn"),
        ("DependenceNonUniformityNormalized", "snn"),
        ("DependenceVariance", "svar"),
        ("GrayLevelNonUniformity", "gln"),
        ("GrayLevelVariance", "gvar"),
        ("HighGrayLevelEmphasis", "high"),
        ("LargeDependenceEmphasis", "large"),
        ("LargeDependenceHighGrayLevelEmphasis", "large_high"),
        ("LargeDependenceLowGrayLevelEmphasis", "large_low"),
        ("LowGrayLevelEmphasis", "low"),
        ("SmallDependenceEmphasis", "small"),
        ("SmallDependenceHighGrayLevelEmphasis", "small_high"),
        ("SmallDependenceLowGrayLevelEmphasis", "small_low"),
    ];
    keys.iter()
        .map(|&(n, k)| (format!("original_gldm_{n}"), s.0[k]))
        .collect()
}

// ---------------------------------------------------------------------- NGTDM

pub fn ngtdm(c: &Case) -> Vec<(String, f64)> {
    let vox = c.voxels();
    let mut n: BTreeMap<u32, f64> = BTreeMap::new();
    let mut s: BTreeMap<u32, f64> = BTreeMap::new();
    for &a in &vox {
        let nb: Vec<f64> = vox
            .iter()
            .filter(|&&b| chebyshev1(c.pos(a), c.pos(b)))
            .map(|&b| c.labels[b] as f64)
            .collect();
        if nb.is_empty() {
            continue;
        }
        let avg = nb.iter().sum::<f64>() / nb.len() as f64;
        let l = c.labels[a];
        *n.entry(l).or_default() += 1.0;
        *s.entry(l).or_default() += (l as f64 - avg).abs();
    }
    let nvp: f64 = n.values().sum();
    let out = |b: f64, co: f64, cx: f64, ct: f64, st: f64| {
        named(
            "original_ngtdm_",
            vec![
                ("Busyness", b),
                ("Coarseness", co),
                ("Complexity", cx),
                ("Contrast", ct),
                ("Strength", st),
            ],
        )
    };
    if nvp == 0.0 {
        return out(0.0, 1e6, 0.0, 0.0, 0.0);
    }
    let levels: Vec<(f64, f64, f64)> = n.keys().map(|l| (*l as f64, n[l] / nvp, s[l])).collect();
    let ngp = levels.len() as f64;
    let s_sum: f64 = levels.iter().map(|x| x.2).sum();
    let ps: f64 = levels.iter().map(|x| x.1 * x.2).sum();
    let coarse = if ps == 0.0 { 1e6 } else { 1.0 / ps };
    let (mut a, mut b, mut cx, mut st) = (0.0, 0.0, 0.0, 0.0);
    for &(i, pi, si) in &levels {
        for &(j, pj, sj) in &levels {
            a += pi * pj * (i - j) * (i - j);
            b += (i * pi - j * pj).abs();
            cx += (i - j).abs() * (pi * si + pj * sj) / (pi + pj);
            st += (pi + pj) * (i - j) * (i - j);
        }
    }
    let contrast = if ngp < 2.0 {
        0.0
    } else {
        a / (ngp * (ngp - 1.0)) * s_sum / nvp
    };
    let busy = if b == 0.0 { 0.0 } else { ps / b };
    let strength = if s_sum == 0.0 { 0.0 } else { st / s_sum };
    out(busy, coarse, cx / nvp, contrast, strength)
}

// ---------------------------------------------------------------------- shape

/// Eigenvalues of a symmetric 3x3 matrix by cyclic Jacobi rotations,
/// descending.
pub fn sym3_eigenvalues(mut a: [[f64; 3]; 3]) -> [f64; 3] {
    for _sweep in 0..100 {
        let off = a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2);
        if off == 0.0 {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if a[p][q] == 0.0 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            // a <- J^T a J with J the (p, q) rotation.
            let mut b = a;
            for k in 0..3 {
                b[k][p] = c * a[k][p] - s * a[k][q];
                b[k][q] = s * a[k][p] + c * a[k][q];
            }
            let mut r = b;
            for k in 0..3 {
                r[p][k] = c * b[p][k] - s * b[q][k];
                r[q][k] = s * b[p][k] + c * b[q][k];
            }
            r[p][q] = 0.0;
            r[q][p] = 0.0;
            a = r;
        }
    }
    let mut d = [a[0][0], a[1][1], a[2][2]];
    d.sort_by(|x, y| y.total_cmp(x));
    d
}

/// Isosurface triangles of the padded mask, built per cube from face
/// crossings; loops are oriented so their area vector points from inside
/// corners towards outside corners.
pub fn mesh(c: &Case) -> Vec<[[f64; 3]; 3]> {
    let [nx, ny, nz] = c.dims.map(|d| d as i64);
    let inside = |p: [i64; 3]| -> bool {
        p[0] >= 0 && p[1] >= 0 && p[2] >= 0 && p[0] < nx && p[1] < ny && p[2] < nz && {
            let idx = (p[0] + nx * (p[1] + ny * p[2])) as usize;
            c.mask[idx]
        }
    };
    let mut tris = Vec::new();
    for z in -1..nz {
        for y in -1..ny {
            for x in -1..nx {
                let base = [x, y, z];
                let corner = |o: [i64; 3]| [base[0] + o[0], base[1] + o[1], base[2] + o[2]];
                // Segments as pairs of doubled-coordinate edge midpoints.
                let mut segs: Vec<([i64; 3], [i64; 3])> = Vec::new();
                for axis in 0..3 {
                    for side in 0..2 {
                        let (u, v) = [(1, 2), (0, 2), (0, 1)][axis];
                        let ring: Vec<[i64; 3]> = [(0, 0), (1, 0), (1, 1), (0, 1)]
                            .iter()
                            .map(|&(a, b)| {
                                let mut o = [0; 3];
                                o[axis] = side;
                                o[u] = a;
                                o[v] = b;
                                corner(o)
                            })
                            .collect();
                        let ins: Vec<bool> = ring.iter().map(|&p| inside(p)).collect();
                        let mid = |a: usize, b: usize| [0, 1, 2].map(|k| ring[a][k] + ring[b][k]);
                        let cross: Vec<usize> =
                            (0..4).filter(|&k| ins[k] != ins[(k + 1) % 4]).collect();
                        if cross.len() == 2 {
                            segs.push((
                                mid(cross[0], (cross[0] + 1) % 4),
                                mid(cross[1], (cross[1] + 1) % 4),
                            ));
                        } else if cross.len() == 4 {
                            for k in 0..4 {
                                if ins[k] {
                                    segs.push((mid((k + 3) % 4, k), mid(k, (k + 1) % 4)));
                                }
                            }
                        }
                    }
                }
                if segs.is_empty() {
                    continue;
                }
                let mut adj: HashMap<[i64; 3], Vec<[i64; 3]>> = HashMap::new();
                for &(a, b) in &segs {
                    adj.entry(a).or_default().push(b);
                    adj.entry(b).or_default().push(a);
                }
                let mut seen: Vec<[i64; 3]> = Vec::new();
                let mut starts: Vec<[i64; 3]> = adj.keys().copied().collect();
                starts.sort();
                for s in starts {
                    if seen.contains(&s) {
                        continue;
                    }
                    let mut lp = vec![s];
                    seen.push(s);
                    let mut prev = s;
                    let mut cur = adj[&s][0];
                    while cur != s {
                        lp.push(cur);
                        seen.push(cur);
                        let nb = &adj[&cur];
                        let next = if nb[0] == prev { nb[1] } else { nb[0] };
                        prev = cur;
                        cur = next;
                    }
                    let pts: Vec<[f64; 3]> = lp
                        .iter()
                        .map(|q| [0, 1, 2].map(|k| q[k] as f64 / 2.0 * c.spacing[k]))
                        .collect();
                    // Direction from inside to outside, summed over the
                    // crossed edges of this loop.
                    let mut out_dir = [0.0; 3];
                    for q in &lp {
                        let axis = (0..3).find(|&k| q[k].rem_euclid(2) == 1).unwrap();
                        let mut lo = q.map(|v| v.div_euclid(2));
                        lo[axis] = (q[axis] - 1) / 2;
                        let sign = if inside(lo) { 1.0 } else { -1.0 };
                        out_dir[axis] += sign * c.spacing[axis];
                    }
                    let mut area = [0.0; 3];
                    let m = pts.len();
                    let cen = [0, 1, 2].map(|k| pts.iter().map(|p| p[k]).sum::<f64>() / m as f64);
                    for i in 0..m {
                        let a = [0, 1, 2].map(|k| pts[i][k] - cen[k]);
                        let b = [0, 1, 2].map(|k| pts[(i + 1) % m][k] - cen[k]);
                        area[0] += a[1] * b[2] - a[2] * b[1];
                        area[1] += a[2] * b[0] - a[0] * b[2];
                        area[2] += a[0] * b[1] - a[1] * b[0];
                    }
                    let mut pts = pts;
                    if area[0] * out_dir[0] + area[1] * out_dir[1] + area[2] * out_dir[2] < 0.0 {
                        pts.reverse();
                    }
                    if m == 3 {
                        tris.push([pts[0], pts[1], pts[2]]);
                    } else {
                        for i in 0..m {
                            tris.push([cen, pts[i], pts[(i + 1) % m]]);
                        }
                    }
                }
            }
        }
    }
    tris
}

/// (volume, area): volume by the divergence theorem with the field (x, 0, 0),
/// area by Heron's formula.
pub fn mesh_volume_area(tris: &[[[f64; 3]; 3]]) -> (f64, f64) {
    let mut vol = 0.0;
    let mut area = 0.0;
    for t in tris {
        let u = [0, 1, 2].map(|k| t[1][k] - t[0][k]);
        let w = [0, 1, 2].map(|k| t[2][k] - t[0][k]);
        let nx = 0.5 * (u[1] * w[2] - u[2] * w[1]);
        let xbar = (t[0][0] + t[1][0] + t[2][0]) / 3.0;
        vol += nx * xbar;
        let len = |a: [f64; 3], b: [f64; 3]| {
            ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
        };
        let (a, b, cc) = (len(t[0], t[1]), len(t[1], t[2]), len(t[2], t[0]));
        let s = 0.5 * (a + b + cc);
        area += (s * (s - a) * (s - b) * (s - cc)).max(0.0).sqrt();
    }
    (vol, area)
}

pub fn shape(c: &Case) -> Vec<(String, f64)> {
    let vox = c.voxels();
    let n = vox.len() as f64;
    let phys: Vec<[f64; 3]> = vox
        .iter()
        .map(|&i| {
            let p = c.pos(i);
            [0, 1, 2].map(|k| p[k] as f64 * c.spacing[k])
        })
        .collect();
    let mean = [0, 1, 2].map(|k| phys.iter().map(|p| p[k]).sum::<f64>() / n);
    let mut cov = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            cov[a][b] = phys
                .iter()
                .map(|p| (p[a] - mean[a]) * (p[b] - mean[b]))
                .sum::<f64>()
                / n;
        }
    }
    let [l1, mut l2, mut l3] = sym3_eigenvalues(cov).map(|l| l.max(0.0));
    for l in [&mut l2, &mut l3] {
        if *l <= 1e-12 * l1 {
            *l = 0.0;
        }
    }
    let (el, fl) = if l1 == 0.0 {
        (1.0, 1.0)
    } else {
        ((l2 / l1).sqrt(), (l3 / l1).sqrt())
    };

    let mut d = [0.0f64; 4];
    for a in 0..vox.len() {
        for b in 0..vox.len() {
            let (pa, pb) = (c.pos(vox[a]), c.pos(vox[b]));
            let dist = (0..3)
                .map(|k| ((pa[k] - pb[k]) as f64 * c.spacing[k]).powi(2))
                .sum::<f64>()
                .sqrt();
            d[0] = d[0].max(dist);
            for (slot, axis) in [(1, 2), (2, 1), (3, 0)] {
                if pa[axis] == pb[axis] {
                    d[slot] = d[slot].max(dist);
                }
            }
        }
    }
    let (v, a) = mesh_volume_area(&mesh(c));
    named(
        "original_shape_",
        vec![
            ("Elongation", el),
            ("Flatness", fl),
            ("LeastAxisLength", 4.0 * l3.sqrt()),
            ("MajorAxisLength", 4.0 * l1.sqrt()),
            ("Maximum2DDiameterColumn", d[2]),
            ("Maximum2DDiameterRow", d[3]),
            ("Maximum2DDiameterSlice", d[1]),
            ("Maximum3DDiameter", d[0]),
            ("MeshVolume", v),
            ("MinorAxisLength", 4.0 * l2.sqrt()),
            (
                "Sphericity",
                (36.0 * std::f64::consts::PI * v * v).powf(1.0 / 3.0) / a,
            ),
            ("SurfaceArea", a),
            ("SurfaceVolumeRatio", a / v),
            ("VoxelVolume", n * c.spacing.iter().product::<f64>()),
        ],
    )
}

/// All oracle features available for the case (GLCM omitted when the
/// region has no co-occurring pair).
pub fn all_features(c: &Case) -> Vec<(String, f64)> {
    let mut out = shape(c);
    out.extend(first_order(c));
    if let Some(g) = glcm(c) {
        out.extend(g);
    }
    out.extend(gldm(c));
    out.extend(glrlm(c));
    out.extend(glszm(c));
    out.extend(ngtdm(c));
    out
}
