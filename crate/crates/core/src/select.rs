//! Pearson collinearity pruning of a feature set.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::FeatureMatrix;
use crate::stats::pearson;

#[derive(Debug, Error, PartialEq)]
pub enum SelectError {
    #[error("need at least 3 samples for correlation, got {0}")]
    TooFewSamples(usize),
    #[error("correlation matrix is {rows}x{cols} for {names} names")]
    BadShape {
        rows: usize,
        cols: usize,
        names: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PruneMode {
    /// Mean absolute correlation computed once over the full matrix.
    #[default]
    Literal,
    /// Mean absolute correlation recomputed over surviving features after
    /// every drop.
    Recompute,
}

/// Correlations among the non-constant features of a matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub r: Vec<Vec<f64>>,
    /// Zero-variance features, excluded from `names`.
    pub constant: Vec<String>,
}

impl CorrelationMatrix {
    pub fn new(names: Vec<String>, r: Vec<Vec<f64>>) -> Result<Self, SelectError> {
        let n = names.len();
        if r.len() != n || r.iter().any(|row| row.len() != n) {
            return Err(SelectError::BadShape {
                rows: r.len(),
                cols: r.first().map_or(0, Vec::len),
                names: n,
            });
        }
        Ok(Self {
            names,
            r,
            constant: Vec::new(),
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature");
        for n in &self.names {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for (n, row) in self.names.iter().zip(&self.r) {
            out.push_str(n);
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Sample Pearson correlation for every pair of non-constant columns.
pub fn pearson_matrix(x: &FeatureMatrix) -> Result<CorrelationMatrix, SelectError> {
    if x.n_samples() < 3 {
        return Err(SelectError::TooFewSamples(x.n_samples()));
    }
    let mut names = Vec::new();
    let mut cols = Vec::new();
    let mut constant = Vec::new();
    for (j, name) in x.feature_names.iter().enumerate() {
        let c = x.column(j);
        if c.iter().all(|&v| v == c[0]) {
            log::warn!("feature {name} is constant across samples and is excluded from collinearity pruning");
            constant.push(name.clone());
        } else {
            names.push(name.clone());
            cols.push(c);
        }
    }
    let k = cols.len();
    let mut r = vec![vec![0.0; k]; k];
    for a in 0..k {
        r[a][a] = 1.0;
        for b in a + 1..k {
            let v = pearson(&cols[a], &cols[b]).unwrap_or(0.0);
            r[a][b] = v;
            r[b][a] = v;
        }
    }
    Ok(CorrelationMatrix { names, r, constant })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DropDecision {
    pub feature: String,
    pub partner: String,
    pub abs_r: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollinearityReport {
    pub threshold: f64,
    pub mode: PruneMode,
    pub kept: Vec<String>,
    pub dropped: Vec<DropDecision>,
    pub constant: Vec<String>,
    pub mean_abs_r: Vec<(String, f64)>,
}

fn mean_abs(corr: &CorrelationMatrix, alive: &[bool], i: usize) -> f64 {
    let others: Vec<f64> = (0..corr.names.len())
        .filter(|&j| j != i && alive[j])
        .map(|j| corr.r[i][j].abs())
        .collect();
    if others.is_empty() {
        0.0
    } else {
        others.iter().sum::<f64>() / others.len() as f64
    }
}

/// Greedy pruning: offending pairs (`|r| > threshold`) are visited by
/// descending `|r|`, ties by the name pair; where both members survive, the
/// one with the higher mean `|r|` is dropped (ties drop the later name).
pub fn prune_collinear(
    corr: &CorrelationMatrix,
    threshold: f64,
    mode: PruneMode,
) -> CollinearityReport {
    let n = corr.names.len();
    let mut alive = vec![true; n];
    let initial: Vec<f64> = (0..n).map(|i| mean_abs(corr, &alive, i)).collect();
    let mut pairs = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let v = corr.r[a][b].abs();
            if v > threshold {
                let (x, y) = if corr.names[a] <= corr.names[b] {
                    (a, b)
                } else {
                    (b, a)
                };
                pairs.push((v, x, y));
            }
        }
    }
    pairs.sort_by(|p, q| {
        q.0.total_cmp(&p.0).then_with(|| {
            (&corr.names[p.1], &corr.names[p.2]).cmp(&(&corr.names[q.1], &corr.names[q.2]))
        })
    });
    let mut dropped = Vec::new();
    for (v, a, b) in pairs {
        if !(alive[a] && alive[b]) {
            continue;
        }
        let (ma, mb) = match mode {
            PruneMode::Literal => (initial[a], initial[b]),
            PruneMode::Recompute => (mean_abs(corr, &alive, a), mean_abs(corr, &alive, b)),
        };
        // `a` is the lexicographically earlier name, so equal means drop `b`.
        let (drop, keep, dm, km) = if ma > mb {
            (a, b, ma, mb)
        } else {
            (b, a, mb, ma)
        };
        alive[drop] = false;
        dropped.push(DropDecision {
            feature: corr.names[drop].clone(),
            partner: corr.names[keep].clone(),
            abs_r: v,
            reason: if dm == km {
                format!("mean |r| tie at {dm:.6}; later name dropped")
            } else {
                format!("mean |r| {dm:.6} > {km:.6}")
            },
        });
    }
    CollinearityReport {
        threshold,
        mode,
        kept: (0..n)
            .filter(|&i| alive[i])
            .map(|i| corr.names[i].clone())
            .collect(),
        dropped,
        constant: corr.constant.clone(),
        mean_abs_r: corr.names.iter().cloned().zip(initial).collect(),
    }
}
