//! Reading and writing stage artifacts.

use std::collections::BTreeMap;
use std::path::Path;

use super::PipelineError;
use crate::features::{FeatureValue, FeatureVector};
use crate::stability::Perturbation;

pub const FEATURES: &str = "features.csv";
pub const FEATURES_PERTURBED: &str = "features_perturbed.csv";
pub const STABILITY: &str = "stability.csv";
pub const CORRELATION: &str = "correlation.csv";
pub const CORRELATION_SVG: &str = "correlation.svg";
pub const KEPT: &str = "kept_features.json";
pub const DELTA_LONG: &str = "delta_long.csv";
pub const DELTA_SVG: &str = "delta_trajectories.svg";
pub const TABLE_2: &str = "table_2.csv";
pub const TABLE_S2: &str = "table_s2.csv";
pub const TABLE_S3: &str = "table_s3.csv";
pub const TABLE_S4: &str = "table_s4.csv";
pub const TABLE_3: &str = "table_3.csv";
pub const TABLE_4: &str = "table_4.csv";
pub const KM_SUMMARY: &str = "km_summary.json";
pub const CUTPOINT: &str = "cutpoint.json";
pub const ANCOVA: &str = "ancova.json";
pub const METADATA: &str = "run_metadata.json";

pub fn write(dir: &Path, name: &str, content: &str) -> Result<(), PipelineError> {
    let p = dir.join(name);
    std::fs::write(&p, content).map_err(|source| PipelineError::Io {
        path: p.display().to_string(),
        source,
    })
}

pub fn read(dir: &Path, name: &str) -> Result<String, PipelineError> {
    let p = dir.join(name);
    if !p.exists() {
        return Err(PipelineError::MissingUpstreamArtifact(
            p.display().to_string(),
        ));
    }
    std::fs::read_to_string(&p).map_err(|source| PipelineError::Io {
        path: p.display().to_string(),
        source,
    })
}

fn data(stage: &'static str, message: impl Into<String>) -> PipelineError {
    PipelineError::Data {
        stage,
        message: message.into(),
    }
}

/// Short names of flagged entries, `;`-separated.
fn degenerate_list(v: &FeatureVector) -> String {
    v.entries
        .iter()
        .filter(|e| e.degenerate)
        .map(|e| e.name.strip_prefix("original_").unwrap_or(&e.name))
        .collect::<Vec<_>>()
        .join(";")
}

fn header(prefix: &[&str], v: Option<&FeatureVector>) -> String {
    let mut cols: Vec<&str> = prefix.to_vec();
    if let Some(v) = v {
        cols.extend(v.names());
    }
    cols.push("degenerate");
    cols.join(",") + "\n"
}

fn row(prefix: &[String], v: &FeatureVector) -> String {
    let mut out = prefix.join(",");
    for e in &v.entries {
        out.push_str(&format!(",{}", e.value));
    }
    out.push_str(&format!(",{}\n", degenerate_list(v)));
    out
}

pub fn features_csv(vectors: &[FeatureVector]) -> String {
    let mut out = header(&["course_id", "fraction", "config_hash"], vectors.first());
    for v in vectors {
        out.push_str(&row(
            &[
                v.course_id.clone(),
                v.fraction.clone(),
                v.config_hash.clone(),
            ],
            v,
        ));
    }
    out
}

pub fn perturbed_csv(rows: &[(FeatureVector, usize, Perturbation)]) -> String {
    let mut out = header(
        &["course_id", "repetition", "op", "connectivity", "fallback"],
        rows.first().map(|r| &r.0),
    );
    for (v, rep, p) in rows {
        let op = serde_json::to_value(p.op)
            .ok()
            .and_then(|x| x.as_str().map(str::to_string))
            .unwrap_or_default();
        out.push_str(&row(
            &[
                v.course_id.clone(),
                rep.to_string(),
                op,
                p.connectivity.to_string(),
                u8::from(p.fallback).to_string(),
            ],
            v,
        ));
    }
    out
}

/// Parses a features table whose first `n_prefix` columns are identifiers.
fn parse_table(
    stage: &'static str,
    text: &str,
    n_prefix: usize,
) -> Result<Vec<(Vec<String>, FeatureVector)>, PipelineError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| data(stage, e.to_string()))?
        .clone();
    if headers.len() < n_prefix + 1 || &headers[headers.len() - 1] != "degenerate" {
        return Err(data(stage, "feature table header is malformed"));
    }
    let names: Vec<String> = headers
        .iter()
        .skip(n_prefix)
        .take(headers.len() - n_prefix - 1)
        .map(str::to_string)
        .collect();
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| data(stage, e.to_string()))?;
        let prefix: Vec<String> = rec.iter().take(n_prefix).map(str::to_string).collect();
        let flagged: Vec<&str> = rec[rec.len() - 1]
            .split(';')
            .filter(|s| !s.is_empty())
            .collect();
        let mut entries = Vec::with_capacity(names.len());
        for (k, name) in names.iter().enumerate() {
            let raw = &rec[n_prefix + k];
            let value: f64 = raw
                .parse()
                .map_err(|_| data(stage, format!("bad value {raw:?} for {name}")))?;
            let short = name.strip_prefix("original_").unwrap_or(name);
            entries.push(FeatureValue {
                name: name.clone(),
                value,
                degenerate: flagged.contains(&short),
            });
        }
        out.push((
            prefix,
            FeatureVector {
                entries,
                ..Default::default()
            },
        ));
    }
    Ok(out)
}

pub fn parse_features(text: &str) -> Result<Vec<FeatureVector>, PipelineError> {
    Ok(parse_table("extract", text, 3)?
        .into_iter()
        .map(|(p, mut v)| {
            v.course_id = p[0].clone();
            v.fraction = p[1].clone();
            v.config_hash = p[2].clone();
            v
        })
        .collect())
}

/// Perturbed F1 vectors grouped by repetition index.
pub fn parse_perturbed(text: &str) -> Result<BTreeMap<usize, Vec<FeatureVector>>, PipelineError> {
    let mut out: BTreeMap<usize, Vec<FeatureVector>> = BTreeMap::new();
    for (p, mut v) in parse_table("stability", text, 5)? {
        let rep: usize = p[1]
            .parse()
            .map_err(|_| data("stability", format!("bad repetition {:?}", p[1])))?;
        v.course_id = p[0].clone();
        v.fraction = "F1".into();
        out.entry(rep).or_default().push(v);
    }
    Ok(out)
}

/// Names of features marked stable.
pub fn parse_stable(text: &str) -> Result<Vec<String>, PipelineError> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| data("prune", e.to_string()))?;
        if rec.len() < 3 {
            return Err(data("prune", "stability table row is too short"));
        }
        if &rec[rec.len() - 1] == "1" {
            out.push(rec[0].to_string());
        }
    }
    Ok(out)
}

pub fn parse_kept(text: &str) -> Result<Vec<String>, PipelineError> {
    let v: serde_json::Value =
        serde_json::from_str(text).map_err(|e| data("delta", e.to_string()))?;
    v.get("kept")
        .and_then(|k| k.as_array())
        .map(|a| {
            a.iter()
                .filter_map(|x| x.as_str().map(str::to_string))
                .collect()
        })
        .ok_or_else(|| data("delta", "kept_features.json lacks a kept list"))
}

/// Square correlation table written by the prune stage.
pub fn parse_correlation(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), PipelineError> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let names: Vec<String> = rdr
        .headers()
        .map_err(|e| data("report", e.to_string()))?
        .iter()
        .skip(1)
        .map(str::to_string)
        .collect();
    let mut r = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| data("report", e.to_string()))?;
        r.push(
            rec.iter()
                .skip(1)
                .map(|s| s.parse().unwrap_or(f64::NAN))
                .collect(),
        );
    }
    Ok((names, r))
}

/// Per-feature trajectories from the long delta table.
pub fn parse_delta_long(text: &str) -> Result<Vec<(String, Vec<[f64; 4]>)>, PipelineError> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut panels: Vec<(String, Vec<(String, [f64; 4])>)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| data("report", e.to_string()))?;
        let (course, feature, fraction) = (&rec[0], &rec[1], &rec[2]);
        let v: f64 = rec[3]
            .parse()
            .map_err(|_| data("report", format!("bad change {:?}", &rec[3])))?;
        let k = match fraction {
            "F2" => 0,
            "F3" => 1,
            "F4" => 2,
            "F5" => 3,
            other => return Err(data("report", format!("unexpected fraction {other}"))),
        };
        if panels.last().is_none_or(|p| p.0 != feature) {
            panels.push((feature.to_string(), Vec::new()));
        }
        let lines = &mut panels.last_mut().expect("pushed").1;
        if lines.last().is_none_or(|l| l.0 != course) {
            lines.push((course.to_string(), [0.0; 4]));
        }
        lines.last_mut().expect("pushed").1[k] = v;
    }
    Ok(panels
        .into_iter()
        .map(|(f, l)| (f, l.into_iter().map(|x| x.1).collect()))
        .collect())
}

/// KM curve table: `time,survival,at_risk,group`.
pub fn parse_km(text: &str) -> Result<Vec<(String, Vec<(f64, f64)>)>, PipelineError> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut groups: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| data("report", e.to_string()))?;
        let t: f64 = rec[0].parse().map_err(|_| data("report", "bad KM time"))?;
        let s: f64 = rec[1]
            .parse()
            .map_err(|_| data("report", "bad KM survival"))?;
        let g = rec[3].to_string();
        match groups.iter_mut().find(|x| x.0 == g) {
            Some(x) => x.1.push((t, s)),
            None => groups.push((g, vec![(t, s)])),
        }
    }
    Ok(groups)
}
