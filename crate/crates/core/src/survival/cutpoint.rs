//! Single-split cutpoint search on log-rank scores with a permutation test
//! for the maximally selected statistic.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::SurvivalError;
use crate::rng::keyed_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CutpointConfig {
    pub min_node: usize,
    pub alpha: f64,
    pub n_perm: usize,
    pub seed: u64,
}

impl Default for CutpointConfig {
    fn default() -> Self {
        Self {
            min_node: 7,
            alpha: 0.05,
            n_perm: 10_000,
            seed: 20240501,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutpointResult {
    pub cutoff: f64,
    /// Sizes of the `x <= cutoff` and `x > cutoff` groups.
    pub group_sizes: (usize, usize),
    pub statistic: f64,
    pub p_value: f64,
    pub significant: bool,
}

/// `δ_i − Λ(t_i)` with `Λ` the Nelson-Aalen cumulative hazard.
pub fn logrank_scores(time: &[f64], event: &[bool]) -> Vec<f64> {
    let n = time.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| time[a].total_cmp(&time[b]));
    let mut out = vec![0.0; n];
    let mut hazard = 0.0;
    let mut s = 0;
    while s < n {
        let mut e = s;
        let mut d = 0.0;
        while e < n && time[order[e]] == time[order[s]] {
            d += f64::from(u8::from(event[order[e]]));
            e += 1;
        }
        hazard += d / (n - s) as f64;
        for &i in &order[s..e] {
            out[i] = f64::from(u8::from(event[i])) - hazard;
        }
        s = e;
    }
    out
}

/// Largest standardized statistic over the split positions `splits` (left
/// group sizes) for scores laid out in ascending-x order; returns the
/// statistic and the index into `splits`.
fn max_statistic(scores: &[f64], splits: &[usize], mean: f64, ss: f64) -> (f64, usize) {
    let n = scores.len() as f64;
    let mut best = (f64::NEG_INFINITY, 0);
    let mut prefix = 0.0;
    let mut at = 0;
    for (k, &m) in splits.iter().enumerate() {
        while at < m {
            prefix += scores[at];
            at += 1;
        }
        let mf = m as f64;
        let var = mf * (n - mf) / (n * (n - 1.0)) * ss;
        let stat = if var > 0.0 {
            (prefix - mf * mean).abs() / var.sqrt()
        } else {
            0.0
        };
        if stat > best.0 {
            best = (stat, k);
        }
    }
    best
}

pub fn cutpoint_search(
    x: &[f64],
    time: &[f64],
    event: &[bool],
    cfg: &CutpointConfig,
) -> Result<CutpointResult, SurvivalError> {
    let n = x.len();
    if time.len() != n || event.len() != n {
        return Err(SurvivalError::LengthMismatch(format!(
            "{n} values, {} times",
            time.len()
        )));
    }
    if n < 2 * cfg.min_node || n < 2 {
        return Err(SurvivalError::TooFewSamples {
            need: (2 * cfg.min_node).max(2),
            got: n,
        });
    }
    if x.iter().chain(time).any(|v| !v.is_finite()) {
        return Err(SurvivalError::InvalidInput("non-finite value".into()));
    }
    if !event.iter().any(|&e| e) {
        return Err(SurvivalError::NoEvents);
    }
    let scores = logrank_scores(time, event);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
    let xs: Vec<f64> = order.iter().map(|&i| x[i]).collect();
    let splits: Vec<usize> = (cfg.min_node.max(1)..=n - cfg.min_node.max(1))
        .filter(|&m| xs[m - 1] < xs[m])
        .collect();
    if splits.is_empty() {
        return Err(SurvivalError::NoValidCutpoint);
    }
    let mut a: Vec<f64> = order.iter().map(|&i| scores[i]).collect();
    let mean = a.iter().sum::<f64>() / n as f64;
    let ss: f64 = a.iter().map(|v| (v - mean) * (v - mean)).sum();
    let (stat, k) = max_statistic(&a, &splits, mean, ss);
    let m = splits[k];

    let mut rng = keyed_rng(cfg.seed, &[b"cutpoint"]);
    let floor = stat * (1.0 - 1e-12);
    let mut exceed = 0usize;
    for _ in 0..cfg.n_perm {
        a.shuffle(&mut rng);
        if max_statistic(&a, &splits, mean, ss).0 >= floor {
            exceed += 1;
        }
    }
    let p_value = (1 + exceed) as f64 / (1 + cfg.n_perm) as f64;
    Ok(CutpointResult {
        cutoff: 0.5 * (xs[m - 1] + xs[m]),
        group_sizes: (m, n - m),
        statistic: stat,
        p_value,
        significant: p_value < cfg.alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scores_sum_to_zero() {
        let t = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0];
        let e = [true, false, true, true, false, true, true];
        let s = logrank_scores(&t, &e);
        assert!(s.iter().sum::<f64>().abs() < 1e-12);
        // First time point: one event among seven at risk.
        assert!((s[3] - (1.0 - 1.0 / 7.0)).abs() < 1e-15);
    }

    #[test]
    fn perfect_separation_is_recovered() {
        let n = 30;
        let x: Vec<f64> = (0..n).map(|i| i as f64 / 10.0).collect();
        let time: Vec<f64> = (0..n)
            .map(|i| {
                if i < 15 {
                    10.0 + i as f64
                } else {
                    500.0 + i as f64
                }
            })
            .collect();
        let event: Vec<bool> = (0..n).map(|i| i < 15).collect();
        let cfg = CutpointConfig {
            n_perm: 999,
            ..Default::default()
        };
        let r = cutpoint_search(&x, &time, &event, &cfg).unwrap();
        assert!((r.cutoff - 1.45).abs() < 1e-12);
        assert_eq!(r.group_sizes, (15, 15));
        assert!(r.p_value < 0.01 && r.significant);
        assert_eq!(cutpoint_search(&x, &time, &event, &cfg).unwrap(), r);
    }

    #[test]
    fn invalid_inputs() {
        let x = vec![1.0; 20];
        let t: Vec<f64> = (0..20).map(f64::from).collect();
        let e = vec![true; 20];
        let cfg = CutpointConfig {
            n_perm: 10,
            ..Default::default()
        };
        assert_eq!(
            cutpoint_search(&x, &t, &e, &cfg),
            Err(SurvivalError::NoValidCutpoint)
        );
        assert!(matches!(
            cutpoint_search(&x[..10], &t[..10], &e[..10], &cfg),
            Err(SurvivalError::TooFewSamples { .. })
        ));
    }
}
