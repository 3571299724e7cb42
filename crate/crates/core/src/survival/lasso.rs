//! Lasso by cyclic coordinate descent, recursive feature elimination on its
//! coefficients, and the multivariate Cox fit on the top-ranked features.

use serde::{Deserialize, Serialize};

use super::cox::{cox_fit_matrix, CoxFit};
use super::SurvivalError;
use crate::matrix::FeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RfeResponse {
    /// Event indicator (0/1) over all samples.
    #[default]
    Event,
    /// Event time over samples with an event.
    Time,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RfeConfig {
    /// Fixed penalty; chosen by cross-validation when absent.
    pub lambda: Option<f64>,
    pub n_lambda: usize,
    /// Smallest grid value as a fraction of the largest.
    pub lambda_min_ratio: f64,
    pub folds: usize,
    pub response: RfeResponse,
}

impl Default for RfeConfig {
    fn default() -> Self {
        Self {
            lambda: None,
            n_lambda: 50,
            lambda_min_ratio: 1e-3,
            folds: 5,
            response: RfeResponse::Event,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RfeResult {
    pub lambda: f64,
    /// Feature names from rank 1 (most important) down.
    pub ranked: Vec<String>,
}

impl RfeResult {
    pub fn rank_of(&self, name: &str) -> Option<usize> {
        self.ranked.iter().position(|n| n == name).map(|i| i + 1)
    }
}

const CD_TOL: f64 = 1e-10;
const CD_MAX_SWEEPS: usize = 10_000;

fn soft(z: f64, g: f64) -> f64 {
    if z > g {
        z - g
    } else if z < -g {
        z + g
    } else {
        0.0
    }
}

/// Minimizes `(1/2n)·|y − a − Xb|² + λ·|b|₁` over the rows in `rows`,
/// starting from `warm`. Returns `(intercept, coefficients)`.
pub fn lasso_fit(
    cols: &[Vec<f64>],
    y: &[f64],
    rows: &[usize],
    lambda: f64,
    warm: Option<&[f64]>,
) -> (f64, Vec<f64>) {
    let n = rows.len() as f64;
    let p = cols.len();
    let ym = rows.iter().map(|&i| y[i]).sum::<f64>() / n;
    let xm: Vec<f64> = cols
        .iter()
        .map(|c| rows.iter().map(|&i| c[i]).sum::<f64>() / n)
        .collect();
    let xc: Vec<Vec<f64>> = cols
        .iter()
        .zip(&xm)
        .map(|(c, m)| rows.iter().map(|&i| c[i] - m).collect())
        .collect();
    let z: Vec<f64> = xc
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>() / n)
        .collect();
    let mut b = warm.map_or_else(|| vec![0.0; p], <[f64]>::to_vec);
    let mut r: Vec<f64> = rows.iter().map(|&i| y[i] - ym).collect();
    for (j, c) in xc.iter().enumerate() {
        if b[j] != 0.0 {
            for (ri, v) in r.iter_mut().zip(c) {
                *ri -= b[j] * v;
            }
        }
    }
    for _ in 0..CD_MAX_SWEEPS {
        let mut max_delta: f64 = 0.0;
        for j in 0..p {
            if z[j] == 0.0 {
                continue;
            }
            let rho = xc[j].iter().zip(&r).map(|(a, b)| a * b).sum::<f64>() / n + z[j] * b[j];
            let new = soft(rho, lambda) / z[j];
            let delta = new - b[j];
            if delta != 0.0 {
                for (ri, v) in r.iter_mut().zip(&xc[j]) {
                    *ri -= delta * v;
                }
                b[j] = new;
                max_delta = max_delta.max(delta.abs());
            }
        }
        if max_delta < CD_TOL {
            break;
        }
    }
    let a = ym - b.iter().zip(&xm).map(|(b, m)| b * m).sum::<f64>();
    (a, b)
}

fn standardize(x: &FeatureMatrix, rows: &[usize]) -> Result<Vec<Vec<f64>>, SurvivalError> {
    (0..x.n_features())
        .map(|j| {
            let c: Vec<f64> = rows.iter().map(|&i| x.values[i][j]).collect();
            let n = c.len() as f64;
            let m = c.iter().sum::<f64>() / n;
            let sd = (c.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt();
            if sd == 0.0 || !sd.is_finite() {
                return Err(SurvivalError::ConstantColumn(x.feature_names[j].clone()));
            }
            Ok(c.iter().map(|v| (v - m) / sd).collect())
        })
        .collect()
}

/// Grid from the smallest penalty that zeroes every coefficient down to
/// `lambda_min_ratio` of it, log-spaced.
pub fn lambda_grid(cols: &[Vec<f64>], y: &[f64], n_lambda: usize, min_ratio: f64) -> Vec<f64> {
    let n = y.len() as f64;
    let ym = y.iter().sum::<f64>() / n;
    let lmax = cols
        .iter()
        .map(|c| (c.iter().zip(y).map(|(a, b)| a * (b - ym)).sum::<f64>() / n).abs())
        .fold(0.0, f64::max);
    if lmax == 0.0 || n_lambda < 2 {
        return vec![lmax];
    }
    (0..n_lambda)
        .map(|k| lmax * min_ratio.powf(k as f64 / (n_lambda - 1) as f64))
        .collect()
}

/// Cross-validated penalty; folds assign row `i` to fold `i mod k`. Ties in
/// the CV error prefer the larger penalty.
pub fn cv_lambda(cols: &[Vec<f64>], y: &[f64], cfg: &RfeConfig) -> f64 {
    let n = y.len();
    let grid = lambda_grid(cols, y, cfg.n_lambda, cfg.lambda_min_ratio);
    let k = cfg.folds.clamp(2, n.max(2));
    let mut err = vec![0.0; grid.len()];
    for f in 0..k {
        let train: Vec<usize> = (0..n).filter(|i| i % k != f).collect();
        let test: Vec<usize> = (0..n).filter(|i| i % k == f).collect();
        if train.is_empty() || test.is_empty() {
            continue;
        }
        let mut warm: Option<Vec<f64>> = None;
        for (g, &lambda) in grid.iter().enumerate() {
            let (a, b) = lasso_fit(cols, y, &train, lambda, warm.as_deref());
            for &i in &test {
                let pred = a + cols.iter().zip(&b).map(|(c, b)| c[i] * b).sum::<f64>();
                err[g] += (y[i] - pred).powi(2);
            }
            warm = Some(b);
        }
    }
    let mut best = 0;
    for g in 1..grid.len() {
        if err[g] < err[best] {
            best = g;
        }
    }
    grid[best]
}

/// Ranks features by recursive elimination of the smallest absolute Lasso
/// coefficient at a fixed penalty. Equal magnitudes eliminate the
/// lexicographically later name first.
pub fn rfe_lasso_rank(
    x: &FeatureMatrix,
    y: &[f64],
    cfg: &RfeConfig,
) -> Result<RfeResult, SurvivalError> {
    let n = x.n_samples();
    let p = x.n_features();
    if y.len() != n {
        return Err(SurvivalError::LengthMismatch(format!(
            "{n} rows, {} responses",
            y.len()
        )));
    }
    if p < 2 {
        return Err(SurvivalError::TooFewSamples { need: 2, got: p });
    }
    if n < p || n < 2 {
        return Err(SurvivalError::TooFewSamples {
            need: p.max(2),
            got: n,
        });
    }
    let rows: Vec<usize> = (0..n).collect();
    let cols = standardize(x, &rows)?;
    let lambda = match cfg.lambda {
        Some(l) => l,
        None => cv_lambda(&cols, y, cfg),
    };
    let mut alive: Vec<usize> = (0..p).collect();
    let mut eliminated = Vec::with_capacity(p);
    while alive.len() > 1 {
        let sub: Vec<Vec<f64>> = alive.iter().map(|&j| cols[j].clone()).collect();
        let (_, b) = lasso_fit(&sub, y, &rows, lambda, None);
        let mut worst = 0;
        for k in 1..alive.len() {
            let (bk, bw) = (b[k].abs(), b[worst].abs());
            if bk < bw || (bk == bw && x.feature_names[alive[k]] > x.feature_names[alive[worst]]) {
                worst = k;
            }
        }
        eliminated.push(alive.remove(worst));
    }
    eliminated.push(alive[0]);
    Ok(RfeResult {
        lambda,
        ranked: eliminated
            .iter()
            .rev()
            .map(|&j| x.feature_names[j].clone())
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultivariateCox {
    pub fit: CoxFit,
    pub ranking: RfeResult,
    pub selected: Vec<String>,
}

/// Ranks features against the configured response, then fits a Cox model on
/// the `top_k` best.
pub fn multivariate_cox_with_rfe(
    x: &FeatureMatrix,
    time: &[f64],
    event: &[bool],
    top_k: usize,
    cfg: &RfeConfig,
) -> Result<MultivariateCox, SurvivalError> {
    let n = x.n_samples();
    if time.len() != n || event.len() != n {
        return Err(SurvivalError::LengthMismatch(format!(
            "{n} rows, {} times",
            time.len()
        )));
    }
    let ranking = match cfg.response {
        RfeResponse::Event => {
            let y: Vec<f64> = event.iter().map(|&e| f64::from(u8::from(e))).collect();
            rfe_lasso_rank(x, &y, cfg)?
        }
        RfeResponse::Time => {
            let rows: Vec<usize> = (0..n).filter(|&i| event[i]).collect();
            let sub = FeatureMatrix {
                feature_names: x.feature_names.clone(),
                sample_ids: rows.iter().map(|&i| x.sample_ids[i].clone()).collect(),
                values: rows.iter().map(|&i| x.values[i].clone()).collect(),
            };
            let y: Vec<f64> = rows.iter().map(|&i| time[i]).collect();
            rfe_lasso_rank(&sub, &y, cfg)?
        }
    };
    let selected: Vec<String> = ranking.ranked.iter().take(top_k.max(1)).cloned().collect();
    let mut ordered = selected.clone();
    ordered.sort_by_key(|name| x.column_index(name));
    let columns: Vec<Vec<f64>> = ordered
        .iter()
        .map(|name| x.column_by_name(name).expect("ranked name"))
        .collect();
    let fit = cox_fit_matrix(time, event, &columns, &ordered)?;
    Ok(MultivariateCox {
        fit,
        ranking,
        selected,
    })
}
