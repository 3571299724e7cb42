use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde_json::json;

use super::artifacts::{self as art, parse_features, parse_kept, parse_stable};
use super::{svg, Pipeline, PipelineError, Stage};
use crate::delta::{trend_summary, CohortDeltas};
use crate::features::{extract_all, feature_names, FeatureVector};
use crate::io::manifest::{load_manifest, CohortManifest, FractionFiles, FractionLabel};
use crate::io::nifti::{read_mask, read_nifti};
use crate::io::outcomes::{load_outcomes, Endpoint, OutcomeTable};
use crate::matrix::FeatureMatrix;
use crate::preprocess::PreprocessConfig;
use crate::select::{pearson_matrix, prune_collinear};
use crate::stability::{
    perturb_mask, spatial_stability, stability_gate, temporal_stability, GateRule,
};
use crate::survival::{
    ancova, bh_adjust, cox_fit_matrix, cutpoint_search, km_estimate, logrank_test,
    multivariate_cox_with_rfe, CoxFit, CutpointConfig, LogRank, RfeResponse, SurvivalError,
    SurvivalSample,
};
use crate::volume::{MaskROI, VolumeGrid};

fn data(stage: &'static str, message: impl Into<String>) -> PipelineError {
    PipelineError::Data {
        stage,
        message: message.into(),
    }
}

fn survival_error(e: SurvivalError, context: &str) -> PipelineError {
    let message = format!("{context}: {e}");
    match e {
        SurvivalError::Singular | SurvivalError::RankDeficient => PipelineError::Numerical {
            stage: "survive",
            message,
        },
        _ => data("survive", message),
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

/// Four significant figures, in scientific notation outside `[1e-3, 1e4)`.
fn sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() || (1e-3..1e4).contains(&x.abs()) {
        format!("{x:.3}")
    } else {
        format!("{x:.3e}")
    }
}

fn csv_text(rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.write_record(&r).expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("utf-8 csv")
}

/// Accepts a full catalog name or a unique suffix such as `Skewness`.
pub fn resolve_feature(name: &str) -> Result<String, PipelineError> {
    let catalog = feature_names();
    if catalog.iter().any(|n| n == name) {
        return Ok(name.to_string());
    }
    let suffix = format!("_{name}");
    let hits: Vec<&String> = catalog.iter().filter(|n| n.ends_with(&suffix)).collect();
    match hits.as_slice() {
        [one] => Ok((*one).clone()),
        [] => Err(PipelineError::Config(format!("unknown feature {name:?}"))),
        many => Err(PipelineError::Config(format!(
            "feature {name:?} is ambiguous: {}",
            many.iter()
                .map(|s| s.as_str())
                .collect::<Vec<_>>()
                .join(", ")
        ))),
    }
}

struct Scan {
    image: VolumeGrid,
    gtv: MaskROI,
    heart: Option<MaskROI>,
}

fn load_scan(
    stage: &'static str,
    course: &str,
    label: FractionLabel,
    f: &FractionFiles,
    need_heart: bool,
) -> Result<Scan, PipelineError> {
    let ctx =
        |e: &dyn std::fmt::Display| data(stage, format!("course {course} fraction {label}: {e}"));
    let image = read_nifti(&f.image).map_err(|e| ctx(&e))?;
    let gtv = read_mask(&f.gtv, "gtv").map_err(|e| ctx(&e))?;
    let heart = match (&f.heart, need_heart) {
        (Some(p), true) => Some(read_mask(p, "heart").map_err(|e| ctx(&e))?),
        (None, true) => return Err(ctx(&"NormalizationInputMissing: no heart mask")),
        _ => None,
    };
    Ok(Scan { image, gtv, heart })
}

fn extract_scan(
    stage: &'static str,
    course: &str,
    label: FractionLabel,
    scan: &Scan,
    mask: &MaskROI,
    cfg: &PreprocessConfig,
) -> Result<FeatureVector, PipelineError> {
    let mut v = extract_all(&scan.image, mask, scan.heart.as_ref(), cfg)
        .map_err(|e| data(stage, format!("course {course} fraction {label}: {e}")))?;
    v.course_id = course.to_string();
    v.fraction = label.as_str().to_string();
    Ok(v)
}

/// Per-course analysis inputs for the survival stage.
struct Cohort {
    outcomes: OutcomeTable,
    vectors: Vec<FeatureVector>,
    courses: Vec<String>,
}

impl Cohort {
    fn samples(
        &self,
        endpoint: Endpoint,
        values: &BTreeMap<String, f64>,
    ) -> (Vec<f64>, Vec<f64>, Vec<bool>) {
        let (mut x, mut t, mut e) = (Vec::new(), Vec::new(), Vec::new());
        for c in &self.courses {
            if let (Some(v), Some(row)) = (values.get(c), self.outcomes.get(c)) {
                let o = row.get(endpoint);
                x.push(*v);
                t.push(o.time);
                e.push(o.event);
            }
        }
        (x, t, e)
    }

    fn baseline(&self, feature: &str) -> BTreeMap<String, f64> {
        self.vectors
            .iter()
            .filter(|v| v.fraction == "F1")
            .filter_map(|v| v.get(feature).map(|x| (v.course_id.clone(), x)))
            .collect()
    }
}

fn km_csv(groups: &[(&str, Vec<SurvivalSample>)]) -> Result<String, PipelineError> {
    let mut rows = vec![vec![
        "time".into(),
        "survival".into(),
        "at_risk".into(),
        "group".into(),
    ]];
    for (g, s) in groups {
        let km = km_estimate(s)
            .map_err(|e| survival_error(e, &format!("Kaplan-Meier for group {g}")))?;
        for p in &km.points {
            rows.push(vec![
                p.time.to_string(),
                p.survival.to_string(),
                p.at_risk.to_string(),
                g.to_string(),
            ]);
        }
    }
    Ok(csv_text(rows))
}

fn split_groups(
    x: &[f64],
    t: &[f64],
    e: &[bool],
    cutoff: f64,
) -> (Vec<SurvivalSample>, Vec<SurvivalSample>) {
    let mut low = Vec::new();
    let mut high = Vec::new();
    for i in 0..x.len() {
        let s = SurvivalSample::new(t[i], e[i]);
        if x[i] <= cutoff {
            low.push(s);
        } else {
            high.push(s);
        }
    }
    (low, high)
}

fn short(name: &str) -> &str {
    name.rsplit('_').next().unwrap_or(name)
}

impl Pipeline {
    fn manifest(&self, stage: &'static str) -> Result<CohortManifest, PipelineError> {
        load_manifest(&self.cfg.manifest, true).map_err(|e| data(stage, e.to_string()))
    }

    fn features(&self) -> Result<Vec<FeatureVector>, PipelineError> {
        parse_features(&self.read(art::FEATURES)?)
    }

    fn note_preprocessing(&mut self) {
        if self.cfg.preprocess.normalize {
            self.assume("intensities divided by the median heart intensity of each scan");
        }
        match self.cfg.preprocess.resample_spacing {
            None => self.assume("resampling disabled; masks are taken as already rasterized on the image grid"),
            Some(_) => self.assume("resampling uses trilinear interpolation for images and nearest neighbour for masks"),
        }
    }

    /// Extracts all 107 features for every (course, fraction) in the manifest.
    pub fn extract(&mut self) -> Result<(), PipelineError> {
        const S: &str = "extract";
        let manifest = self.manifest(S)?;
        let pre = self.cfg.preprocess.clone();
        if pre.normalize {
            for c in &manifest.courses {
                if let Some((l, _)) = c.fractions.iter().find(|(_, f)| f.heart.is_none()) {
                    return Err(data(
                        S,
                        format!(
                            "NormalizationInputMissing: course {} fraction {l} has no heart mask",
                            c.course_id
                        ),
                    ));
                }
            }
        }
        self.note_preprocessing();
        let tasks: Vec<(&str, FractionLabel, &FractionFiles)> = manifest
            .courses
            .iter()
            .flat_map(|c| {
                c.fractions
                    .iter()
                    .map(move |(l, f)| (c.course_id.as_str(), *l, f))
            })
            .collect();
        let vectors: Vec<FeatureVector> = tasks
            .par_iter()
            .map(|&(course, label, f)| {
                let scan = load_scan(S, course, label, f, pre.normalize)?;
                extract_scan(S, course, label, &scan, &scan.gtv, &pre)
            })
            .collect::<Result<_, _>>()?;
        self.write(art::FEATURES, &art::features_csv(&vectors))?;
        self.finish(Some(Stage::Extract))
    }

    /// Temporal (SIM vs F1) and spatial (F1 vs perturbed F1) agreement, gated.
    pub fn stability(&mut self) -> Result<(), PipelineError> {
        const S: &str = "stability";
        let vectors = self.features()?;
        let manifest = self.manifest(S)?;
        let pre = self.cfg.preprocess.clone();
        let spec = self.cfg.stability.perturbation.clone();
        let tasks: Vec<(&str, &FractionFiles, usize)> = manifest
            .courses
            .iter()
            .flat_map(|c| {
                let f1 = &c.fractions[&FractionLabel::F1];
                (0..spec.repetitions).map(move |r| (c.course_id.as_str(), f1, r))
            })
            .collect();
        let rows: Vec<(FeatureVector, usize, crate::stability::Perturbation)> = tasks
            .par_iter()
            .map(|&(course, f, rep)| {
                let scan = load_scan(S, course, FractionLabel::F1, f, pre.normalize)?;
                let p = perturb_mask(&scan.gtv, &spec, course, rep)
                    .map_err(|e| data(S, format!("course {course} perturbation {rep}: {e}")))?;
                let v = extract_scan(S, course, FractionLabel::F1, &scan, &p.mask, &pre)?;
                Ok((v, rep, p))
            })
            .collect::<Result<_, PipelineError>>()?;
        self.write(art::FEATURES_PERTURBED, &art::perturbed_csv(&rows))?;

        let order: Vec<&str> = manifest
            .courses
            .iter()
            .map(|c| c.course_id.as_str())
            .collect();
        let pick = |label: &str, course: &str| {
            vectors
                .iter()
                .find(|v| v.fraction == label && v.course_id == course)
                .cloned()
        };
        let f1: Vec<FeatureVector> = order
            .iter()
            .map(|c| {
                pick("F1", c)
                    .ok_or_else(|| data(S, format!("features.csv has no F1 row for course {c}")))
            })
            .collect::<Result<_, _>>()?;
        let paired: Vec<(FeatureVector, FeatureVector)> = order
            .iter()
            .filter_map(|c| Some((pick("SIM", c)?, pick("F1", c)?)))
            .collect();
        if paired.len() < order.len() {
            self.assume(format!(
                "temporal stability uses the {} of {} courses that have a SIM scan",
                paired.len(),
                order.len()
            ));
        }
        let (sim, f1_sim): (Vec<_>, Vec<_>) = paired.into_iter().unzip();
        let temporal = temporal_stability(&sim, &f1_sim)
            .map_err(|e| data(S, format!("temporal agreement: {e}")))?;
        let per_rep: Vec<Vec<FeatureVector>> = (0..spec.repetitions)
            .map(|r| {
                rows.iter()
                    .filter(|x| x.1 == r)
                    .map(|x| x.0.clone())
                    .collect()
            })
            .collect();
        let spatial = spatial_stability(&f1, &per_rep)
            .map_err(|e| data(S, format!("spatial agreement: {e}")))?;
        let report = stability_gate(
            &temporal,
            &spatial,
            self.cfg.stability.threshold,
            self.cfg.stability.rule,
        )
        .map_err(|e| data(S, e.to_string()))?;
        self.write(art::STABILITY, &report.to_csv())?;

        self.assume(format!(
            "contour perturbation: {} random erosions or dilations of radius {} per course",
            spec.repetitions, spec.radius
        ));
        let fallbacks = rows.iter().filter(|r| r.2.fallback).count();
        if fallbacks > 0 {
            self.assume(format!(
                "erosion would have emptied {fallbacks} perturbed masks; dilation was used instead"
            ));
        }
        self.assume(match self.cfg.stability.rule {
            GateRule::AllSpatial => {
                "stable requires temporal CCC and every spatial CCC above the threshold"
            }
            GateRule::MedianSpatial => {
                "stable requires temporal CCC and the median spatial CCC above the threshold"
            }
        });
        self.finish(Some(Stage::Stability))
    }

    /// Drops one member of each highly correlated pair among stable features.
    pub fn prune(&mut self) -> Result<(), PipelineError> {
        const S: &str = "prune";
        let stable = parse_stable(&self.read(art::STABILITY)?)?;
        if stable.is_empty() {
            return Err(data(S, "no feature passed the stability gate"));
        }
        let f1: Vec<FeatureVector> = self
            .features()?
            .into_iter()
            .filter(|v| v.fraction == "F1")
            .collect();
        let m = FeatureMatrix::from_vectors(&f1)
            .map_err(|e| data(S, e))?
            .select(&stable)
            .ok_or_else(|| data(S, "a stable feature is missing from features.csv"))?;
        let corr = pearson_matrix(&m).map_err(|e| data(S, e.to_string()))?;
        let report = prune_collinear(
            &corr,
            self.cfg.collinearity.threshold,
            self.cfg.collinearity.mode,
        );
        self.write(art::CORRELATION, &corr.to_csv())?;
        self.write(
            art::KEPT,
            &(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"),
        )?;
        self.assume("collinearity measured on F1 feature values across courses");
        self.assume(format!(
            "collinear pairs visited by descending |r| with {} mean |r|",
            match self.cfg.collinearity.mode {
                crate::select::PruneMode::Literal => "initial",
                crate::select::PruneMode::Recompute => "recomputed",
            }
        ));
        if !report.constant.is_empty() {
            self.assume(format!(
                "{} constant stable features left out of the correlation analysis",
                report.constant.len()
            ));
        }
        self.finish(Some(Stage::Prune))
    }

    /// Relative changes and trend tables for the kept features.
    pub fn delta(&mut self) -> Result<(), PipelineError> {
        const S: &str = "delta";
        let kept = parse_kept(&self.read(art::KEPT)?)?;
        let d = CohortDeltas::from_vectors(&self.features()?, &kept);
        let t = trend_summary(&d).map_err(|e| data(S, e.to_string()))?;
        self.write(art::DELTA_LONG, &d.long_csv())?;
        self.write(art::TABLE_2, &t.abs_change_csv())?;
        self.write(art::TABLE_S2, &t.direction_csv())?;
        self.write(art::TABLE_S3, &t.consistency_csv())?;
        self.write(art::TABLE_S4, &t.signed_median_csv())?;
        if !d.excluded.is_empty() {
            self.assume(format!(
                "{} course-feature series excluded from delta analysis (zero baseline or missing fractions)",
                d.excluded.len()
            ));
        }
        self.finish(Some(Stage::Delta))
    }

    fn cohort(&mut self) -> Result<Cohort, PipelineError> {
        const S: &str = "survive";
        let path = self
            .cfg
            .outcomes
            .clone()
            .ok_or_else(|| PipelineError::Config("no outcomes file configured".into()))?;
        let outcomes = load_outcomes(&path).map_err(|e| data(S, e.to_string()))?;
        let vectors = self.features()?;
        let mut courses: Vec<String> = Vec::new();
        for v in &vectors {
            if courses.last() != Some(&v.course_id) && !courses.contains(&v.course_id) {
                courses.push(v.course_id.clone());
            }
        }
        if let Some(r) = outcomes
            .rows
            .iter()
            .find(|r| !courses.contains(&r.course_id))
        {
            return Err(data(
                S,
                format!(
                    "outcomes row for course {} which has no features",
                    r.course_id
                ),
            ));
        }
        let missing = courses.iter().filter(|c| outcomes.get(c).is_none()).count();
        if missing > 0 {
            self.assume(format!(
                "{missing} courses without outcomes left out of survival analysis"
            ));
        }
        Ok(Cohort {
            outcomes,
            vectors,
            courses,
        })
    }

    /// Univariate and multivariate Cox models, KM splits, cutpoint and ANCOVA.
    pub fn survive(&mut self) -> Result<(), PipelineError> {
        let kept = parse_kept(&self.read(art::KEPT)?)?;
        let sc = self.cfg.survival.clone();
        let ratio_feature = resolve_feature(&sc.ratio_feature)?;
        let cohort = self.cohort()?;
        let mut names = kept.clone();
        let mut covariates = Vec::new();
        for c in &sc.ancova_covariates {
            let (kind, f) = c.split_once(':').expect("validated prefix");
            let f = resolve_feature(f)?;
            covariates.push((kind.to_string(), f.clone()));
            names.push(f);
        }
        names.push(ratio_feature.clone());
        names.sort_by_key(|n| crate::features::catalog_index(n));
        names.dedup();
        let deltas = CohortDeltas::from_vectors(&cohort.vectors, &names);
        let ratios: BTreeMap<String, BTreeMap<String, f64>> = names
            .iter()
            .map(|n| (n.clone(), deltas.ratios(n)))
            .collect();

        self.table_3(&kept, &ratios, &cohort)?;
        self.table_4(&kept, &ratios, &cohort)?;

        let ratio = &ratios[&ratio_feature];
        let (x, t, e) = cohort.samples(sc.km_endpoint, ratio);
        let mut summary = Vec::new();
        for &cutoff in &sc.skewness_cutoffs {
            let (low, high) = split_groups(&x, &t, &e, cutoff);
            let name = format!("km_{}_{}.csv", sc.km_endpoint.as_str(), cutoff);
            self.write(
                &name,
                &km_csv(&[("low", low.clone()), ("high", high.clone())])?,
            )?;
            let lr = logrank_test(&low, &high).ok();
            summary.push(json!({
                "endpoint": sc.km_endpoint.as_str(),
                "feature": ratio_feature,
                "cutoff": cutoff,
                "curves": name,
                "n_low": low.len(),
                "n_high": high.len(),
                "chi2": lr.map(|l| l.chi2),
                "p": lr.map(|l| l.p),
            }));
        }
        self.write(
            art::KM_SUMMARY,
            &(serde_json::to_string_pretty(&summary).expect("json") + "\n"),
        )?;

        let cp_cfg = CutpointConfig {
            min_node: sc.min_node,
            alpha: sc.alpha,
            n_perm: sc.n_perm,
            seed: sc.seed,
        };
        let cp = match cutpoint_search(&x, &t, &e, &cp_cfg) {
            Ok(r) => {
                json!({"endpoint": sc.km_endpoint.as_str(), "feature": ratio_feature, "n": x.len(), "result": r})
            }
            Err(err) => {
                json!({"endpoint": sc.km_endpoint.as_str(), "feature": ratio_feature, "n": x.len(), "error": err.to_string()})
            }
        };
        self.write(
            art::CUTPOINT,
            &(serde_json::to_string_pretty(&cp).expect("json") + "\n"),
        )?;
        self.assume(format!(
            "cutpoint p-value from {} permutations of log-rank scores",
            sc.n_perm
        ));

        let baselines: BTreeMap<String, BTreeMap<String, f64>> = covariates
            .iter()
            .map(|(_, f)| (f.clone(), cohort.baseline(f)))
            .collect();
        let (mut y, mut group, mut cols) =
            (Vec::new(), Vec::new(), vec![Vec::new(); covariates.len()]);
        for c in &cohort.courses {
            let (Some(r), Some(row)) = (ratio.get(c), cohort.outcomes.get(c)) else {
                continue;
            };
            let vals: Option<Vec<f64>> = covariates
                .iter()
                .map(|(kind, f)| {
                    if kind == "baseline" {
                        baselines[f].get(c).copied()
                    } else {
                        ratios[f].get(c).copied()
                    }
                })
                .collect();
            let Some(vals) = vals else { continue };
            y.push(*r);
            group.push(row.get(sc.km_endpoint).event);
            for (col, v) in cols.iter_mut().zip(vals) {
                col.push(v);
            }
        }
        let head = json!({
            "response": format!("{ratio_feature} F5/F1 ratio"),
            "group": format!("{} event", sc.km_endpoint.as_str()),
            "covariates": sc.ancova_covariates,
            "n": y.len(),
        });
        let body = match ancova(&y, &group, &cols) {
            Ok(r) => json!({"result": r}),
            Err(err) => json!({"error": err.to_string()}),
        };
        let mut doc = head;
        doc.as_object_mut()
            .expect("object")
            .extend(body.as_object().expect("object").clone());
        self.write(
            art::ANCOVA,
            &(serde_json::to_string_pretty(&doc).expect("json") + "\n"),
        )?;
        self.assume(format!(
            "ANCOVA covariates: {}",
            sc.ancova_covariates.join(", ")
        ));
        self.assume("Efron ties and Wald p-values in Cox models");
        self.finish(Some(Stage::Survive))
    }

    fn table_3(
        &mut self,
        kept: &[String],
        ratios: &BTreeMap<String, BTreeMap<String, f64>>,
        cohort: &Cohort,
    ) -> Result<(), PipelineError> {
        let endpoints = self.cfg.survival.endpoints.clone();
        let fits: Vec<Vec<Option<f64>>> = kept
            .par_iter()
            .map(|f| {
                endpoints
                    .iter()
                    .map(|&ep| {
                        let (x, t, e) = cohort.samples(ep, &ratios[f]);
                        cox_fit_matrix(&t, &e, &[x], std::slice::from_ref(f))
                            .ok()
                            .map(|fit| fit.covariates[0].p)
                    })
                    .collect()
            })
            .collect();
        let mut adjusted = vec![vec![None; endpoints.len()]; kept.len()];
        for k in 0..endpoints.len() {
            let idx: Vec<usize> = (0..kept.len()).filter(|&i| fits[i][k].is_some()).collect();
            let raw: Vec<f64> = idx.iter().map(|&i| fits[i][k].expect("filtered")).collect();
            if raw.is_empty() {
                continue;
            }
            let adj = bh_adjust(&raw).map_err(|e| survival_error(e, "Benjamini-Hochberg"))?;
            for (&i, a) in idx.iter().zip(adj) {
                adjusted[i][k] = Some(a);
            }
        }
        let mut header = vec!["feature".to_string()];
        for ep in &endpoints {
            header.push(format!("{}_p", ep.as_str()));
            header.push(format!("{}_p_bh", ep.as_str()));
        }
        let mut rows = vec![header];
        for (i, f) in kept.iter().enumerate() {
            let mut r = vec![f.clone()];
            for k in 0..endpoints.len() {
                r.push(fmt_opt(fits[i][k]));
                r.push(fmt_opt(adjusted[i][k]));
            }
            rows.push(r);
        }
        self.write(art::TABLE_3, &csv_text(rows))?;
        if fits.iter().flatten().any(Option::is_none) {
            self.assume("univariate Cox fits that fail are reported as NA");
        }
        self.assume("Benjamini-Hochberg adjustment applied within each endpoint");
        Ok(())
    }

    fn table_4(
        &mut self,
        kept: &[String],
        ratios: &BTreeMap<String, BTreeMap<String, f64>>,
        cohort: &Cohort,
    ) -> Result<(), PipelineError> {
        let sc = self.cfg.survival.clone();
        let mut rows = vec![[
            "endpoint",
            "feature",
            "p_value",
            "hr_ci95",
            "importance",
            "concordance",
            "converged",
        ]
        .map(String::from)
        .to_vec()];
        for &ep in &sc.endpoints {
            let (mut ids, mut t, mut e) = (Vec::new(), Vec::new(), Vec::new());
            let mut values = Vec::new();
            for c in &cohort.courses {
                let Some(row) = cohort.outcomes.get(c) else {
                    continue;
                };
                let v: Option<Vec<f64>> = kept.iter().map(|f| ratios[f].get(c).copied()).collect();
                let Some(v) = v else { continue };
                ids.push(c.clone());
                values.push(v);
                let o = row.get(ep);
                t.push(o.time);
                e.push(o.event);
            }
            let x = FeatureMatrix {
                feature_names: kept.to_vec(),
                sample_ids: ids,
                values,
            };
            let context = format!("multivariate Cox for {}", ep.as_str());
            let (fit, ranks): (CoxFit, Vec<usize>) = if kept.len() == 1 {
                let fit = cox_fit_matrix(&t, &e, &[x.column(0)], kept)
                    .map_err(|err| survival_error(err, &context))?;
                (fit, vec![1])
            } else {
                let m = multivariate_cox_with_rfe(&x, &t, &e, sc.top_k, &sc.rfe)
                    .map_err(|err| survival_error(err, &context))?;
                let ranks = m
                    .fit
                    .covariates
                    .iter()
                    .map(|c| m.ranking.rank_of(&c.name).expect("ranked"))
                    .collect();
                (m.fit, ranks)
            };
            for (c, rank) in fit.covariates.iter().zip(ranks) {
                rows.push(vec![
                    ep.as_str().to_string(),
                    c.name.clone(),
                    c.p.to_string(),
                    format!("{} ({}, {})", sig(c.hr), sig(c.ci95.0), sig(c.ci95.1)),
                    rank.to_string(),
                    fit.concordance.to_string(),
                    u8::from(fit.converged).to_string(),
                ]);
            }
            if fit.separation {
                self.assume(format!(
                    "multivariate Cox for {} shows monotone likelihood (separation)",
                    ep.as_str()
                ));
            }
        }
        self.write(art::TABLE_4, &csv_text(rows))?;
        self.assume(match sc.rfe.response {
            RfeResponse::Event => "RFE ranks features by Lasso against the event indicator",
            RfeResponse::Time => {
                "RFE ranks features by Lasso against event time among uncensored courses"
            }
        });
        Ok(())
    }

    /// Two-group KM split of one feature's F5/F1 ratio at `cutoff`; writes the
    /// curves and returns the log-rank test.
    pub fn km_split(
        &mut self,
        endpoint: Endpoint,
        feature: &str,
        cutoff: f64,
    ) -> Result<(String, LogRank), PipelineError> {
        let feature = resolve_feature(feature)?;
        let cohort = self.cohort()?;
        let deltas = CohortDeltas::from_vectors(&cohort.vectors, std::slice::from_ref(&feature));
        let (x, t, e) = cohort.samples(endpoint, &deltas.ratios(&feature));
        let (low, high) = split_groups(&x, &t, &e, cutoff);
        if low.is_empty() || high.is_empty() {
            return Err(data(
                "survive",
                format!(
                    "cutoff {cutoff} leaves an empty group ({} low, {} high)",
                    low.len(),
                    high.len()
                ),
            ));
        }
        let name = format!(
            "km_{}_{}_{}.csv",
            endpoint.as_str(),
            short(&feature),
            cutoff
        );
        self.write(
            &name,
            &km_csv(&[("low", low.clone()), ("high", high.clone())])?,
        )?;
        let lr = logrank_test(&low, &high).map_err(|err| survival_error(err, "log-rank"))?;
        self.finish(None)?;
        Ok((name, lr))
    }

    /// Renders SVG figures from whichever tables exist.
    pub fn report(&mut self) -> Result<(), PipelineError> {
        let dir = self.out_dir().to_path_buf();
        let mut rendered = 0;
        if dir.join(art::CORRELATION).exists() {
            let (names, r) = art::parse_correlation(&self.read(art::CORRELATION)?)?;
            self.write(art::CORRELATION_SVG, &svg::heatmap(&names, &r))?;
            rendered += 1;
        }
        if dir.join(art::DELTA_LONG).exists() {
            let panels = art::parse_delta_long(&self.read(art::DELTA_LONG)?)?;
            self.write(art::DELTA_SVG, &svg::small_multiples(&panels))?;
            rendered += 1;
        }
        for name in km_tables(&dir)? {
            let curves = art::parse_km(&self.read(&name)?)?;
            let stem = name.trim_end_matches(".csv");
            self.write(&format!("{stem}.svg"), &svg::km_plot(stem, &curves))?;
            rendered += 1;
        }
        if rendered == 0 {
            return Err(PipelineError::MissingUpstreamArtifact(format!(
                "{} (no correlation.csv, delta_long.csv or km_*.csv)",
                dir.display()
            )));
        }
        self.finish(Some(Stage::Report))
    }
}

fn km_tables(dir: &Path) -> Result<Vec<String>, PipelineError> {
    let io = |source| PipelineError::Io {
        path: dir.display().to_string(),
        source,
    };
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io)? {
        let name = entry
            .map_err(io)?
            .file_name()
            .to_string_lossy()
            .into_owned();
        if name.starts_with("km_") && name.ends_with(".csv") {
            out.push(name);
        }
    }
    out.sort();
    Ok(out)
}
