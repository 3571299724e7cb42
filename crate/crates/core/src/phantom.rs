//! Deterministic synthetic cohorts: ellipsoidal lesions with skew-normal
//! intensities over six scans per course, and exponential survival times
//! from a proportional-hazards model with known coefficients.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, Normal, SkewNormal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{extract_all, FeatureError};
use crate::io::manifest::{
    CohortManifest, CourseEntry, FractionFiles, FractionLabel, SCHEMA_VERSION,
};
use crate::io::nifti::{save_mask, save_nifti, NiftiError};
use crate::io::outcomes::{Endpoint, EndpointOutcome, OutcomeRow, OutcomeTable};
use crate::preprocess::PreprocessConfig;
use crate::rng::keyed_rng;
use crate::volume::{Geometry, MaskROI, VolumeGrid};

#[derive(Debug, Error)]
pub enum PhantomError {
    #[error("lesion does not fit inside the grid: {0}")]
    LesionExceedsGrid(String),
    #[error("invalid phantom spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Nifti(#[from] NiftiError),
    #[error("feature extraction for course {course}: {source}")]
    Feature {
        course: String,
        source: FeatureError,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LesionModel {
    pub radii_mm: [f64; 3],
    /// Per-course radius scale is drawn uniformly from `1 ± radius_jitter`.
    pub radius_jitter: f64,
    /// Lesion centre offset from the grid centre is drawn uniformly within
    /// `± center_jitter_mm` per axis.
    pub center_jitter_mm: f64,
    pub intensity_mean: f64,
    pub intensity_sd: f64,
    /// Per-course scale of the intensity mean and SD, each drawn uniformly
    /// from `1 ± intensity_course_jitter`.
    pub intensity_course_jitter: f64,
    /// Lesion texture is piecewise constant over cubes of `g` voxels per
    /// side, with `g` drawn per course from `1..=max_grain`.
    pub max_grain: usize,
    /// Skew-normal shape parameter at F1.
    pub skew_shape: f64,
    /// SD of the per-course offset of the shape parameter.
    pub skew_shape_course_sd: f64,
    /// Change of the shape parameter per fraction after F1.
    pub skewness_drift: f64,
    /// SD of the per-fraction jitter of the shape parameter.
    pub skew_shape_fraction_sd: f64,
    /// Relative volume change per fraction after F1.
    pub volume_drift: f64,
    /// SD of the additive voxel noise separating SIM from F1.
    pub sim_noise_sd: f64,
    pub background_mean: f64,
    pub background_sd: f64,
    /// Per-scan global intensity gain is drawn uniformly from `1 ± gain_jitter`.
    pub gain_jitter: f64,
}

impl Default for LesionModel {
    fn default() -> Self {
        Self {
            radii_mm: [14.0, 14.0, 12.0],
            radius_jitter: 0.3,
            center_jitter_mm: 3.0,
            intensity_mean: 100.0,
            intensity_sd: 20.0,
            intensity_course_jitter: 0.3,
            max_grain: 2,
            skew_shape: 3.0,
            skew_shape_course_sd: 0.5,
            skewness_drift: -0.05,
            skew_shape_fraction_sd: 0.1,
            volume_drift: -0.02,
            sim_noise_sd: 2.0,
            background_mean: 95.0,
            background_sd: 20.0,
            gain_jitter: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeartModel {
    pub radii_mm: [f64; 3],
    /// Centre offset from the grid centre.
    pub offset_mm: [f64; 3],
    /// Constant intensity before the per-scan gain.
    pub intensity: f64,
}

impl Default for HeartModel {
    fn default() -> Self {
        Self {
            radii_mm: [8.0, 5.0, 6.0],
            offset_mm: [0.0, 24.0, 0.0],
            intensity: 200.0,
        }
    }
}

/// Hazard multiplier for courses on one side of a feature cutoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdEffect {
    pub feature: String,
    pub cutoff: f64,
    pub hazard_ratio: f64,
    /// Apply the multiplier above the cutoff (else at or below it).
    #[serde(default = "yes")]
    pub above: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurvivalModel {
    /// Events per day at a zero linear predictor.
    pub baseline_hazard: f64,
    /// Coefficients on cohort-centred F5/F1 feature ratios.
    pub betas: BTreeMap<String, f64>,
    /// Expected fraction of censored subjects.
    pub censoring_rate: f64,
    pub threshold: Option<ThresholdEffect>,
}

impl Default for SurvivalModel {
    fn default() -> Self {
        Self {
            baseline_hazard: 1.0 / 400.0,
            betas: BTreeMap::new(),
            censoring_rate: 0.2,
            threshold: Some(ThresholdEffect {
                feature: "original_firstorder_Skewness".into(),
                cutoff: 0.951,
                hazard_ratio: 3.0,
                above: true,
            }),
        }
    }
}

impl SurvivalModel {
    /// Features whose ratios drive the hazard.
    pub fn features(&self) -> Vec<String> {
        let mut f: Vec<String> = self.betas.keys().cloned().collect();
        if let Some(t) = &self.threshold {
            if !f.contains(&t.feature) {
                f.push(t.feature.clone());
            }
        }
        f
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhantomSpec {
    pub seed: u64,
    pub n_courses: usize,
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub lesion: LesionModel,
    pub heart: Option<HeartModel>,
    pub survival: SurvivalModel,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        Self {
            seed: 7,
            n_courses: 20,
            dims: [64, 64, 40],
            spacing: [1.0, 1.0, 1.5],
            lesion: LesionModel::default(),
            heart: Some(HeartModel::default()),
            survival: SurvivalModel::default(),
        }
    }
}

impl PhantomSpec {
    fn extent(&self) -> [f64; 3] {
        [0, 1, 2].map(|k| self.dims[k] as f64 * self.spacing[k])
    }

    fn max_volume_factor(&self) -> f64 {
        (0..5)
            .map(|k| 1.0 + self.lesion.volume_drift * k as f64)
            .fold(1.0, f64::max)
    }

    pub fn validate(&self) -> Result<(), PhantomError> {
        let l = &self.lesion;
        if self.n_courses == 0 {
            return Err(PhantomError::InvalidSpec(
                "n_courses must be positive".into(),
            ));
        }
        if self.dims.contains(&0) || self.spacing.iter().any(|s| !(*s > 0.0)) {
            return Err(PhantomError::InvalidSpec(
                "dims and spacing must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.survival.censoring_rate) {
            return Err(PhantomError::InvalidSpec(
                "censoring_rate must lie in [0, 1)".into(),
            ));
        }
        if !(self.survival.baseline_hazard > 0.0) {
            return Err(PhantomError::InvalidSpec(
                "baseline_hazard must be positive".into(),
            ));
        }
        if l.max_grain < 1 {
            return Err(PhantomError::InvalidSpec(
                "max_grain must be at least 1".into(),
            ));
        }
        if [l.radius_jitter, l.gain_jitter, l.intensity_course_jitter]
            .iter()
            .any(|j| !(0.0..1.0).contains(j))
        {
            return Err(PhantomError::InvalidSpec(
                "jitters must lie in [0, 1)".into(),
            ));
        }
        if (0..5).any(|k| 1.0 + l.volume_drift * k as f64 <= 0.0) {
            return Err(PhantomError::InvalidSpec(
                "volume drift empties the lesion".into(),
            ));
        }
        if l.intensity_sd <= 0.0 || l.background_sd < 0.0 || l.sim_noise_sd < 0.0 {
            return Err(PhantomError::InvalidSpec(
                "intensity SDs must be non-negative".into(),
            ));
        }
        let grow = (1.0 + l.radius_jitter) * self.max_volume_factor().cbrt();
        let ext = self.extent();
        for k in 0..3 {
            let reach = l.radii_mm[k] * grow + l.center_jitter_mm;
            if reach >= ext[k] / 2.0 {
                return Err(PhantomError::LesionExceedsGrid(format!(
                    "axis {k}: lesion reaches {reach:.2} mm from the centre, half-extent is {:.2} mm",
                    ext[k] / 2.0
                )));
            }
            if let Some(h) = &self.heart {
                let lo = ext[k] / 2.0 + h.offset_mm[k] - h.radii_mm[k];
                let hi = ext[k] / 2.0 + h.offset_mm[k] + h.radii_mm[k];
                if lo < 0.0 || hi > ext[k] {
                    return Err(PhantomError::InvalidSpec(format!(
                        "heart leaves the grid on axis {k}"
                    )));
                }
            }
        }
        Ok(())
    }
}

pub struct PhantomScan {
    pub label: FractionLabel,
    pub image: VolumeGrid,
    pub gtv: MaskROI,
    pub heart: Option<MaskROI>,
}

pub struct PhantomCourse {
    pub course_id: String,
    pub patient_id: String,
    /// SIM, F1..F5.
    pub scans: Vec<PhantomScan>,
}

pub fn course_id(index: usize) -> String {
    format!("C{:03}", index + 1)
}

fn inside(p: [f64; 3], c: [f64; 3], r: [f64; 3]) -> bool {
    (0..3).map(|k| ((p[k] - c[k]) / r[k]).powi(2)).sum::<f64>() <= 1.0
}

pub fn generate_phantom_course(
    spec: &PhantomSpec,
    index: usize,
) -> Result<PhantomCourse, PhantomError> {
    spec.validate()?;
    let l = &spec.lesion;
    let id = course_id(index);
    let idx = (index as u64).to_le_bytes();
    let mut crng = keyed_rng(spec.seed, &[b"course", &idx]);
    let scale = 1.0 + l.radius_jitter * (2.0 * crng.random::<f64>() - 1.0);
    let ext = spec.extent();
    let centre =
        [0, 1, 2].map(|k| ext[k] / 2.0 + l.center_jitter_mm * (2.0 * crng.random::<f64>() - 1.0));
    let shape0 = l.skew_shape
        + l.skew_shape_course_sd * {
            let z: f64 = StandardNormal.sample(&mut crng);
            z
        };
    let mean_c =
        l.intensity_mean * (1.0 + l.intensity_course_jitter * (2.0 * crng.random::<f64>() - 1.0));
    let sd_c =
        l.intensity_sd * (1.0 + l.intensity_course_jitter * (2.0 * crng.random::<f64>() - 1.0));
    let grain = crng.random_range(1..=l.max_grain);
    let geometry = Geometry::new(spec.dims, spec.spacing, [0.0; 3])
        .map_err(|e| PhantomError::InvalidSpec(e.to_string()))?;
    let point = |idx: usize| {
        let c = geometry.coords(idx);
        [0, 1, 2].map(|k| (c[k] as f64 + 0.5) * spec.spacing[k])
    };
    let heart_mask = spec.heart.as_ref().map(|h| {
        let hc = [0, 1, 2].map(|k| ext[k] / 2.0 + h.offset_mm[k]);
        let vox = (0..geometry.len())
            .map(|i| inside(point(i), hc, h.radii_mm))
            .collect();
        MaskROI::new(geometry, vox, "HEART").expect("geometry matches")
    });

    let mut scans = Vec::with_capacity(6);
    let mut f1_image: Option<VolumeGrid> = None;
    for (k, label) in FractionLabel::TREATMENT.iter().enumerate() {
        let mut frng = keyed_rng(spec.seed, &[b"fraction", &idx, label.as_str().as_bytes()]);
        let r_scale = scale * (1.0 + l.volume_drift * k as f64).cbrt();
        let radii = l.radii_mm.map(|r| r * r_scale);
        let mut gtv = MaskROI::empty(geometry, "GTV");
        for i in 0..geometry.len() {
            let in_heart = heart_mask.as_ref().is_some_and(|h| h.voxels[i]);
            gtv.voxels[i] = !in_heart && inside(point(i), centre, radii);
        }
        if gtv.is_empty() {
            return Err(PhantomError::LesionExceedsGrid(format!(
                "{id} {label}: lesion covers no voxel centre"
            )));
        }
        let shape = shape0
            + l.skewness_drift * k as f64
            + l.skew_shape_fraction_sd * {
                let z: f64 = StandardNormal.sample(&mut frng);
                z
            };
        let lesion = SkewNormal::new(mean_c, sd_c, shape)
            .map_err(|e| PhantomError::InvalidSpec(e.to_string()))?;
        let background = Normal::new(l.background_mean, l.background_sd)
            .map_err(|e| PhantomError::InvalidSpec(e.to_string()))?;
        let gain = 1.0 + l.gain_jitter * (2.0 * frng.random::<f64>() - 1.0);
        let mut blocks: HashMap<[usize; 3], f64> = HashMap::new();
        let data: Vec<f64> = (0..geometry.len())
            .map(|i| {
                let raw = if heart_mask.as_ref().is_some_and(|h| h.voxels[i]) {
                    spec.heart.as_ref().map_or(0.0, |h| h.intensity)
                } else if gtv.voxels[i] {
                    let block = geometry.coords(i).map(|c| c / grain);
                    *blocks
                        .entry(block)
                        .or_insert_with(|| lesion.sample(&mut frng))
                } else {
                    background.sample(&mut frng)
                };
                gain * raw
            })
            .collect();
        let image = VolumeGrid::new(geometry, data).expect("geometry matches");
        if *label == FractionLabel::F1 {
            f1_image = Some(image.clone());
        }
        scans.push(PhantomScan {
            label: *label,
            image,
            gtv,
            heart: heart_mask.clone(),
        });
    }

    let f1 = f1_image.expect("F1 generated");
    let mut srng = keyed_rng(spec.seed, &[b"fraction", &idx, b"SIM"]);
    let noise = Normal::new(0.0, l.sim_noise_sd.max(f64::MIN_POSITIVE)).expect("finite sd");
    let sim_data: Vec<f64> = f1
        .data
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let in_heart = heart_mask.as_ref().is_some_and(|h| h.voxels[i]);
            let e: f64 = noise.sample(&mut srng);
            if in_heart || l.sim_noise_sd == 0.0 {
                v
            } else {
                v + e
            }
        })
        .collect();
    let sim_gtv = scans[0].gtv.clone();
    scans.insert(
        0,
        PhantomScan {
            label: FractionLabel::Sim,
            image: VolumeGrid::new(geometry, sim_data).expect("geometry matches"),
            gtv: sim_gtv,
            heart: heart_mask,
        },
    );
    Ok(PhantomCourse {
        course_id: id,
        patient_id: format!("P{:03}", index + 1),
        scans,
    })
}

/// Expected censored fraction when subject `i` has event rate `rates[i]` and
/// censoring times are uniform on `[0, c_max]`.
fn expected_censoring(rates: &[f64], c_max: f64) -> f64 {
    rates
        .iter()
        .map(|&r| {
            let x = r * c_max;
            if x < 1e-8 {
                1.0 - x / 2.0
            } else {
                (1.0 - (-x).exp()) / x
            }
        })
        .sum::<f64>()
        / rates.len() as f64
}

/// Exponential event times with rate `rates[i]` and independent uniform
/// censoring on `[0, c_max]`, where `c_max` is set by bisection so the
/// expected censored fraction equals `censoring_rate`.
pub fn simulate_exponential<R: Rng>(
    rates: &[f64],
    censoring_rate: f64,
    rng: &mut R,
) -> Vec<(f64, bool)> {
    let c_max = if censoring_rate <= 0.0 || rates.is_empty() {
        f64::INFINITY
    } else {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while expected_censoring(rates, hi) > censoring_rate {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if expected_censoring(rates, mid) > censoring_rate {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    rates
        .iter()
        .map(|&r| {
            let u: f64 = rng.random::<f64>();
            let t = -(1.0 - u).ln() / r;
            let v: f64 = rng.random::<f64>();
            let c = c_max * v;
            if c < t {
                (c, false)
            } else {
                (t, true)
            }
        })
        .collect()
}

/// Outcomes for courses with the given feature ratios. Each endpoint is
/// drawn independently from the same hazard model.
pub fn generate_survival(
    model: &SurvivalModel,
    seed: u64,
    course_ids: &[String],
    covariates: &[BTreeMap<String, f64>],
) -> OutcomeTable {
    let n = course_ids.len();
    let mut eta = vec![0.0; n];
    for (name, beta) in &model.betas {
        let vals: Vec<f64> = covariates
            .iter()
            .map(|c| c.get(name).copied().unwrap_or(0.0))
            .collect();
        let mean = vals.iter().sum::<f64>() / n.max(1) as f64;
        for (e, v) in eta.iter_mut().zip(&vals) {
            *e += beta * (v - mean);
        }
    }
    if let Some(t) = &model.threshold {
        for (e, c) in eta.iter_mut().zip(covariates) {
            let x = c.get(&t.feature).copied().unwrap_or(f64::NAN);
            if (t.above && x > t.cutoff) || (!t.above && x <= t.cutoff) {
                *e += t.hazard_ratio.ln();
            }
        }
    }
    let rates: Vec<f64> = eta
        .iter()
        .map(|e| model.baseline_hazard * e.exp())
        .collect();
    let per_endpoint: Vec<Vec<(f64, bool)>> = Endpoint::ALL
        .iter()
        .map(|e| {
            let mut rng = keyed_rng(seed, &[b"survival", e.as_str().as_bytes()]);
            simulate_exponential(&rates, model.censoring_rate, &mut rng)
        })
        .collect();
    OutcomeTable {
        rows: (0..n)
            .map(|i| {
                let o = [0, 1, 2, 3].map(|k| {
                    let (t, ev) = per_endpoint[k][i];
                    EndpointOutcome {
                        time: (t * 1e6).round() / 1e6,
                        event: ev,
                    }
                });
                OutcomeRow::new(course_ids[i].clone(), o)
            })
            .collect(),
    }
}

/// Cohort with independent standard-normal covariates and hazard
/// `λ₀·exp(Σ βⱼ xⱼ)`. Returns covariate columns and `(time, event)` pairs.
pub fn cox_cohort(
    seed: u64,
    n: usize,
    betas: &[f64],
    baseline_hazard: f64,
    censoring_rate: f64,
) -> (Vec<Vec<f64>>, Vec<(f64, bool)>) {
    let mut rng = keyed_rng(seed, &[b"cox-cohort"]);
    let cols: Vec<Vec<f64>> = betas
        .iter()
        .map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    let rates: Vec<f64> = (0..n)
        .map(|i| {
            baseline_hazard
                * cols
                    .iter()
                    .zip(betas)
                    .map(|(c, b)| c[i] * b)
                    .sum::<f64>()
                    .exp()
        })
        .collect();
    let out = simulate_exponential(&rates, censoring_rate, &mut rng);
    (cols, out)
}

/// Cohort with a covariate uniform on `range` and hazard multiplied by
/// `effect.hazard_ratio` on one side of `effect.cutoff`.
pub fn threshold_cohort(
    seed: u64,
    n: usize,
    range: (f64, f64),
    effect: &ThresholdEffect,
    baseline_hazard: f64,
    censoring_rate: f64,
) -> (Vec<f64>, Vec<(f64, bool)>) {
    let mut rng = keyed_rng(seed, &[b"threshold-cohort"]);
    let x: Vec<f64> = (0..n).map(|_| rng.random_range(range.0..range.1)).collect();
    let rates: Vec<f64> = x
        .iter()
        .map(|&v| {
            let hit = if effect.above {
                v > effect.cutoff
            } else {
                v <= effect.cutoff
            };
            baseline_hazard * if hit { effect.hazard_ratio } else { 1.0 }
        })
        .collect();
    let out = simulate_exponential(&rates, censoring_rate, &mut rng);
    (x, out)
}

/// Paths written by [`write_phantom_cohort`].
#[derive(Debug, Clone)]
pub struct PhantomFiles {
    pub manifest: PathBuf,
    pub outcomes: PathBuf,
}

/// Writes NIfTI volumes, `manifest.json` and `outcomes.csv` under `dir`.
/// When the survival model references features, their F5/F1 ratios are
/// extracted from the generated scans with `preprocess`.
pub fn write_phantom_cohort(
    spec: &PhantomSpec,
    dir: &Path,
    preprocess: &PreprocessConfig,
) -> Result<PhantomFiles, PhantomError> {
    spec.validate()?;
    let images = dir.join("images");
    std::fs::create_dir_all(&images).map_err(|source| PhantomError::Io {
        path: images.display().to_string(),
        source,
    })?;
    let features = spec.survival.features();
    let mut cfg = preprocess.clone();
    if spec.heart.is_none() {
        cfg.normalize = false;
    }
    let results: Vec<(CourseEntry, BTreeMap<String, f64>)> = (0..spec.n_courses)
        .into_par_iter()
        .map(|i| -> Result<_, PhantomError> {
            let course = generate_phantom_course(spec, i)?;
            let mut fractions = BTreeMap::new();
            for s in &course.scans {
                let stem = format!("{}_{}", course.course_id, s.label);
                let image = PathBuf::from("images").join(format!("{stem}.nii"));
                let gtv = PathBuf::from("images").join(format!("{stem}_gtv.nii"));
                save_nifti(&dir.join(&image), &s.image)?;
                save_mask(&dir.join(&gtv), &s.gtv)?;
                let heart = match &s.heart {
                    Some(h) => {
                        let p = PathBuf::from("images").join(format!("{stem}_heart.nii"));
                        save_mask(&dir.join(&p), h)?;
                        Some(p)
                    }
                    None => None,
                };
                fractions.insert(s.label, FractionFiles { image, gtv, heart });
            }
            let mut ratios = BTreeMap::new();
            if !features.is_empty() {
                let extract = |k: usize| {
                    let s = &course.scans[k];
                    extract_all(&s.image, &s.gtv, s.heart.as_ref(), &cfg).map_err(|source| {
                        PhantomError::Feature {
                            course: course.course_id.clone(),
                            source,
                        }
                    })
                };
                let (f1, f5) = (extract(1)?, extract(5)?);
                for f in &features {
                    let (a, b) = (f1.get(f), f5.get(f));
                    if let (Some(a), Some(b)) = (a, b) {
                        ratios.insert(f.clone(), if a != 0.0 { b / a } else { f64::NAN });
                    }
                }
            }
            Ok((
                CourseEntry {
                    course_id: course.course_id,
                    patient_id: course.patient_id,
                    fractions,
                },
                ratios,
            ))
        })
        .collect::<Result<_, _>>()?;
    let (courses, covariates): (Vec<CourseEntry>, Vec<BTreeMap<String, f64>>) =
        results.into_iter().unzip();
    let ids: Vec<String> = courses.iter().map(|c| c.course_id.clone()).collect();
    let outcomes = generate_survival(&spec.survival, spec.seed, &ids, &covariates);
    let manifest = CohortManifest {
        schema_version: SCHEMA_VERSION.to_string(),
        courses,
    };
    let files = PhantomFiles {
        manifest: dir.join("manifest.json"),
        outcomes: dir.join("outcomes.csv"),
    };
    let write = |p: &Path, text: String| {
        std::fs::write(p, text).map_err(|source| PhantomError::Io {
            path: p.display().to_string(),
            source,
        })
    };
    write(
        &files.manifest,
        serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n",
    )?;
    write(&files.outcomes, outcomes.to_csv())?;
    Ok(files)
}
