//! Stable/unstable verdict per feature.

use serde::{Deserialize, Serialize};

use super::StabilityError;
use crate::features::catalog_index;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GateRule {
    /// Every spatial CCC must exceed the threshold.
    #[default]
    AllSpatial,
    /// The median spatial CCC must exceed the threshold.
    MedianSpatial,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityRow {
    pub feature: String,
    pub temporal_ccc: f64,
    pub spatial_ccc: Vec<f64>,
    pub stable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub threshold: f64,
    pub rule: GateRule,
    pub rows: Vec<StabilityRow>,
}

impl StabilityReport {
    pub fn stable_features(&self) -> Vec<String> {
        self.rows
            .iter()
            .filter(|r| r.stable)
            .map(|r| r.feature.clone())
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let reps = self
            .rows
            .iter()
            .map(|r| r.spatial_ccc.len())
            .max()
            .unwrap_or(0);
        let mut out = String::from("feature,temporal_ccc");
        for k in 1..=reps {
            out.push_str(&format!(",spatial_ccc_{k}"));
        }
        out.push_str(",stable\n");
        for r in &self.rows {
            out.push_str(&format!("{},{}", r.feature, r.temporal_ccc));
            for s in &r.spatial_ccc {
                out.push_str(&format!(",{s}"));
            }
            out.push_str(&format!(",{}\n", u8::from(r.stable)));
        }
        out
    }
}

/// Applies the strict `> threshold` rule. Rows are ordered by the feature
/// catalog; names outside it follow alphabetically.
pub fn stability_gate(
    temporal: &[(String, f64)],
    spatial: &[(String, Vec<f64>)],
    threshold: f64,
    rule: GateRule,
) -> Result<StabilityReport, StabilityError> {
    let mut t_names: Vec<&str> = temporal.iter().map(|(n, _)| n.as_str()).collect();
    let mut s_names: Vec<&str> = spatial.iter().map(|(n, _)| n.as_str()).collect();
    t_names.sort_unstable();
    s_names.sort_unstable();
    if t_names != s_names {
        let only = t_names
            .iter()
            .find(|n| !s_names.contains(n))
            .or_else(|| s_names.iter().find(|n| !t_names.contains(n)));
        return Err(StabilityError::NameMismatch(
            only.map_or_else(|| "duplicate name".into(), |s| s.to_string()),
        ));
    }
    let mut rows: Vec<StabilityRow> = temporal
        .iter()
        .map(|(name, t)| {
            let s = spatial
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, v)| v.clone())
                .unwrap_or_default();
            let spatial_ok = match rule {
                GateRule::AllSpatial => s.iter().all(|&v| v > threshold),
                GateRule::MedianSpatial => !s.is_empty() && crate::stats::median(&s) > threshold,
            };
            StabilityRow {
                feature: name.clone(),
                temporal_ccc: *t,
                stable: *t > threshold && spatial_ok,
                spatial_ccc: s,
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        let key = |r: &StabilityRow| {
            (
                catalog_index(&r.feature).unwrap_or(usize::MAX),
                r.feature.clone(),
            )
        };
        key(a).cmp(&key(b))
    });
    Ok(StabilityReport {
        threshold,
        rule,
        rows,
    })
}
