//! Per-fraction relative changes and cohort trend tables.
//!
//! For a course and feature with treatment-fraction values F1..F5 the
//! relative change at fraction k is `(Fk - F1) / F1` and the delta ratio is
//! `F5 / F1`. Courses whose F1 value is exactly zero, or that lack a
//! treatment fraction, are left out of the summaries and listed as
//! exclusions.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::features::{catalog_index, FeatureVector};
use crate::io::manifest::FractionLabel;
use crate::stats::quantile_sorted;

#[derive(Debug, Error, PartialEq)]
pub enum DeltaError {
    #[error("baseline value is zero")]
    ZeroBaseline,
    #[error("no course has a usable F1..F5 trajectory")]
    EmptyCohort,
}

pub fn relative_change(f_k: f64, f_1: f64) -> Result<f64, DeltaError> {
    if f_1 == 0.0 {
        return Err(DeltaError::ZeroBaseline);
    }
    Ok((f_k - f_1) / f_1)
}

pub fn delta_slope(f_5: f64, f_1: f64) -> Result<f64, DeltaError> {
    if f_1 == 0.0 {
        return Err(DeltaError::ZeroBaseline);
    }
    Ok(f_5 / f_1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionProfile {
    AllPositive,
    AllNegative,
    Mixed,
    HasZero,
}

impl DirectionProfile {
    pub fn of(changes: &[f64]) -> Self {
        if changes.iter().any(|&c| c == 0.0) {
            Self::HasZero
        } else if changes.iter().all(|&c| c > 0.0) {
            Self::AllPositive
        } else if changes.iter().all(|&c| c < 0.0) {
            Self::AllNegative
        } else {
            Self::Mixed
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaSeries {
    pub course_id: String,
    pub feature: String,
    /// Raw values at F1..F5.
    pub values: [f64; 5],
    /// Relative change at F2..F5.
    pub rel_change: [f64; 4],
    pub ratio_f5_f1: f64,
    pub direction_profile: DirectionProfile,
}

impl DeltaSeries {
    pub fn new(course_id: &str, feature: &str, values: [f64; 5]) -> Result<Self, DeltaError> {
        let f1 = values[0];
        let mut rel_change = [0.0; 4];
        for k in 0..4 {
            rel_change[k] = relative_change(values[k + 1], f1)?;
        }
        Ok(Self {
            course_id: course_id.to_string(),
            feature: feature.to_string(),
            values,
            rel_change,
            ratio_f5_f1: delta_slope(values[4], f1)?,
            direction_profile: DirectionProfile::of(&rel_change),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exclusion {
    pub course_id: String,
    pub feature: Option<String>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct CohortDeltas {
    /// Sorted by feature (catalog order) then course id.
    pub series: Vec<DeltaSeries>,
    pub excluded: Vec<Exclusion>,
}

fn feature_order(a: &str, b: &str) -> std::cmp::Ordering {
    (catalog_index(a).unwrap_or(usize::MAX), a).cmp(&(catalog_index(b).unwrap_or(usize::MAX), b))
}

impl CohortDeltas {
    /// Builds series for `features` from per-fraction vectors. Vectors for
    /// SIM or unknown fractions are ignored.
    pub fn from_vectors(vectors: &[FeatureVector], features: &[String]) -> Self {
        let mut by_course: BTreeMap<&str, [Option<&FeatureVector>; 5]> = BTreeMap::new();
        for v in vectors {
            let Some(k) = FractionLabel::TREATMENT
                .iter()
                .position(|l| l.as_str() == v.fraction)
            else {
                continue;
            };
            by_course.entry(v.course_id.as_str()).or_default()[k] = Some(v);
        }
        let mut out = Self::default();
        for (course, fr) in by_course {
            let missing: Vec<&str> = (0..5)
                .filter(|&k| fr[k].is_none())
                .map(|k| FractionLabel::TREATMENT[k].as_str())
                .collect();
            if !missing.is_empty() {
                log::warn!(
                    "course {course} lacks {} and is excluded from delta analysis",
                    missing.join(",")
                );
                out.excluded.push(Exclusion {
                    course_id: course.to_string(),
                    feature: None,
                    reason: format!("missing {}", missing.join(",")),
                });
                continue;
            }
            for f in features {
                let vals: Option<Vec<f64>> = fr.iter().map(|v| v.and_then(|v| v.get(f))).collect();
                let Some(vals) = vals else {
                    out.excluded.push(Exclusion {
                        course_id: course.to_string(),
                        feature: Some(f.clone()),
                        reason: "feature missing".into(),
                    });
                    continue;
                };
                match DeltaSeries::new(course, f, [vals[0], vals[1], vals[2], vals[3], vals[4]]) {
                    Ok(s) => out.series.push(s),
                    Err(e) => {
                        log::warn!(
                            "course {course}, feature {f}: {e}; excluded from delta summaries"
                        );
                        out.excluded.push(Exclusion {
                            course_id: course.to_string(),
                            feature: Some(f.clone()),
                            reason: "zero baseline".into(),
                        });
                    }
                }
            }
        }
        out.series.sort_by(|a, b| {
            feature_order(&a.feature, &b.feature).then_with(|| a.course_id.cmp(&b.course_id))
        });
        out
    }

    /// Long format: `course_id,feature,fraction,rel_change`.
    pub fn long_csv(&self) -> String {
        let mut out = String::from("course_id,feature,fraction,rel_change\n");
        for s in &self.series {
            for (k, c) in s.rel_change.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    s.course_id,
                    s.feature,
                    FractionLabel::TREATMENT[k + 1],
                    c
                ));
            }
        }
        out
    }

    /// F5/F1 ratio per course for one feature.
    pub fn ratios(&self, feature: &str) -> BTreeMap<String, f64> {
        self.series
            .iter()
            .filter(|s| s.feature == feature)
            .map(|s| (s.course_id.clone(), s.ratio_f5_f1))
            .collect()
    }

    fn grouped(&self) -> Vec<(&str, Vec<&DeltaSeries>)> {
        let mut groups: Vec<(&str, Vec<&DeltaSeries>)> = Vec::new();
        for s in &self.series {
            match groups.last_mut() {
                Some((f, v)) if *f == s.feature => v.push(s),
                _ => groups.push((&s.feature, vec![s])),
            }
        }
        groups
    }
}

/// Median with first and third quartiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Spread {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

impl Spread {
    fn of(x: &[f64]) -> Self {
        let mut s = x.to_vec();
        s.sort_by(f64::total_cmp);
        Self {
            median: quantile_sorted(&s, 0.5),
            q1: quantile_sorted(&s, 0.25),
            q3: quantile_sorted(&s, 0.75),
        }
    }

    /// `median (q1, q3)` with two decimals.
    pub fn render(&self) -> String {
        format!("{:.2} ({:.2}, {:.2})", self.median, self.q1, self.q3)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbsChangeRow {
    pub feature: String,
    pub n_courses: usize,
    /// Percent absolute relative change at F2..F5.
    pub fractions: [Spread; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectionRow {
    pub feature: String,
    pub positive: f64,
    pub negative: f64,
    pub no_change: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyRow {
    pub feature: String,
    pub all_positive: f64,
    pub all_negative: f64,
    pub consistent: f64,
    pub other: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignedMedianRow {
    pub feature: String,
    pub fractions: [f64; 4],
}

/// Cohort summaries; all values are percentages.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendTables {
    /// Median and IQR of absolute change, sorted by F5 median descending.
    pub abs_change: Vec<AbsChangeRow>,
    /// F5 versus F1 direction shares, sorted by positive share descending.
    pub direction: Vec<DirectionRow>,
    /// Consistent-trend shares, sorted by consistent share descending.
    pub consistency: Vec<ConsistencyRow>,
    /// Column medians of `consistency`.
    pub consistency_median: ConsistencyRow,
    /// Signed median change, sorted by F5 descending.
    pub signed_median: Vec<SignedMedianRow>,
}

fn pct(count: usize, n: usize) -> f64 {
    100.0 * count as f64 / n as f64
}

fn by_desc<T>(rows: &mut [T], key: impl Fn(&T) -> (f64, &str)) {
    rows.sort_by(|a, b| {
        let (ka, na) = key(a);
        let (kb, nb) = key(b);
        kb.total_cmp(&ka).then_with(|| feature_order(na, nb))
    });
}

pub fn trend_summary(d: &CohortDeltas) -> Result<TrendTables, DeltaError> {
    let groups = d.grouped();
    if groups.is_empty() {
        return Err(DeltaError::EmptyCohort);
    }
    let mut abs_change = Vec::new();
    let mut direction = Vec::new();
    let mut consistency = Vec::new();
    let mut signed_median = Vec::new();
    for (feature, rows) in groups {
        let n = rows.len();
        let fraction = |k: usize, abs: bool| -> Vec<f64> {
            rows.iter()
                .map(|s| {
                    100.0
                        * if abs {
                            s.rel_change[k].abs()
                        } else {
                            s.rel_change[k]
                        }
                })
                .collect()
        };
        abs_change.push(AbsChangeRow {
            feature: feature.to_string(),
            n_courses: n,
            fractions: [0, 1, 2, 3].map(|k| Spread::of(&fraction(k, true))),
        });
        signed_median.push(SignedMedianRow {
            feature: feature.to_string(),
            fractions: [0, 1, 2, 3].map(|k| Spread::of(&fraction(k, false)).median),
        });
        let count = |p: &dyn Fn(&DeltaSeries) -> bool| rows.iter().filter(|s| p(s)).count();
        direction.push(DirectionRow {
            feature: feature.to_string(),
            positive: pct(count(&|s| s.rel_change[3] > 0.0), n),
            negative: pct(count(&|s| s.rel_change[3] < 0.0), n),
            no_change: pct(count(&|s| s.rel_change[3] == 0.0), n),
        });
        let up = count(&|s| s.direction_profile == DirectionProfile::AllPositive);
        let down = count(&|s| s.direction_profile == DirectionProfile::AllNegative);
        consistency.push(ConsistencyRow {
            feature: feature.to_string(),
            all_positive: pct(up, n),
            all_negative: pct(down, n),
            consistent: pct(up + down, n),
            other: pct(n - up - down, n),
        });
    }
    by_desc(&mut abs_change, |r| (r.fractions[3].median, &r.feature));
    by_desc(&mut direction, |r| (r.positive, &r.feature));
    by_desc(&mut consistency, |r| (r.consistent, &r.feature));
    by_desc(&mut signed_median, |r| (r.fractions[3], &r.feature));
    let col = |f: fn(&ConsistencyRow) -> f64| {
        Spread::of(&consistency.iter().map(f).collect::<Vec<_>>()).median
    };
    let consistency_median = ConsistencyRow {
        feature: "Median".into(),
        all_positive: col(|r| r.all_positive),
        all_negative: col(|r| r.all_negative),
        consistent: col(|r| r.consistent),
        other: col(|r| r.other),
    };
    Ok(TrendTables {
        abs_change,
        direction,
        consistency,
        consistency_median,
        signed_median,
    })
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl TrendTables {
    pub fn abs_change_csv(&self) -> String {
        let mut out = String::from("feature,F2 (%),F3 (%),F4 (%),F5 (%)\n");
        for r in &self.abs_change {
            out.push_str(&r.feature);
            for s in &r.fractions {
                out.push(',');
                out.push_str(&csv_field(&s.render()));
            }
            out.push('\n');
        }
        out
    }

    pub fn direction_csv(&self) -> String {
        let mut out = String::from("feature,positive (%),negative (%),no change (%)\n");
        for r in &self.direction {
            out.push_str(&format!(
                "{},{:.2},{:.2},{:.2}\n",
                r.feature, r.positive, r.negative, r.no_change
            ));
        }
        out
    }

    pub fn consistency_csv(&self) -> String {
        let mut out =
            String::from("feature,all positive (%),all negative (%),consistent (%),other (%)\n");
        for r in self
            .consistency
            .iter()
            .chain(std::iter::once(&self.consistency_median))
        {
            out.push_str(&format!(
                "{},{:.2},{:.2},{:.2},{:.2}\n",
                r.feature, r.all_positive, r.all_negative, r.consistent, r.other
            ));
        }
        out
    }

    pub fn signed_median_csv(&self) -> String {
        let mut out = String::from("feature,F2 (%),F3 (%),F4 (%),F5 (%)\n");
        for r in &self.signed_median {
            let [a, b, c, d] = r.fractions;
            out.push_str(&format!("{},{a:.2},{b:.2},{c:.2},{d:.2}\n", r.feature));
        }
        out
    }
}
