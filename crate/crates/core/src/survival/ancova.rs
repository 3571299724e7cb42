//! Analysis of covariance for a binary group term.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use super::SurvivalError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AncovaResult {
    pub f: f64,
    pub p: f64,
    pub group_effect: f64,
    pub df_residual: usize,
}

fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<(DVector<f64>, f64), SurvivalError> {
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if svd
        .singular_values
        .iter()
        .any(|&s| s <= 1e-10 * smax.max(1e-300))
    {
        return Err(SurvivalError::RankDeficient);
    }
    let b = svd
        .solve(y, 0.0)
        .map_err(|_| SurvivalError::RankDeficient)?;
    let r = y - x * &b;
    Ok((b, r.dot(&r)))
}

/// Fits `y ~ 1 + group + covariates` and F-tests the group term against the
/// model without it. `covariates[j][i]` is covariate `j` of row `i`.
pub fn ancova(
    y: &[f64],
    group: &[bool],
    covariates: &[Vec<f64>],
) -> Result<AncovaResult, SurvivalError> {
    let n = y.len();
    if group.len() != n || covariates.iter().any(|c| c.len() != n) {
        return Err(SurvivalError::LengthMismatch(format!(
            "{n} responses, {} groups",
            group.len()
        )));
    }
    if group.iter().all(|&g| g) || group.iter().all(|&g| !g) {
        return Err(SurvivalError::RankDeficient);
    }
    let p = 2 + covariates.len();
    if n <= p {
        return Err(SurvivalError::TooFewSamples {
            need: p + 1,
            got: n,
        });
    }
    let yv = DVector::from_column_slice(y);
    let full = DMatrix::from_fn(n, p, |i, j| match j {
        0 => 1.0,
        1 => f64::from(u8::from(group[i])),
        _ => covariates[j - 2][i],
    });
    let reduced = full.clone().remove_column(1);
    let (b, rss_full) = least_squares(&full, &yv)?;
    let (_, rss_reduced) = least_squares(&reduced, &yv)?;
    let df = n - p;
    let num = (rss_reduced - rss_full).max(0.0);
    let (f, pval) = if rss_full > 0.0 {
        let f = num / (rss_full / df as f64);
        (
            f,
            FisherSnedecor::new(1.0, df as f64)
                .expect("positive df")
                .sf(f),
        )
    } else if num > 0.0 {
        (f64::INFINITY, 0.0)
    } else {
        (0.0, 1.0)
    };
    Ok(AncovaResult {
        f,
        p: pval,
        group_effect: b[1],
        df_residual: df,
    })
}
