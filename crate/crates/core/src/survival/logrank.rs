//! Two-group log-rank test.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::{check_samples, SurvivalError, SurvivalSample};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogRank {
    pub chi2: f64,
    pub p: f64,
    pub observed_a: f64,
    pub expected_a: f64,
    pub variance: f64,
}

pub fn logrank_test(a: &[SurvivalSample], b: &[SurvivalSample]) -> Result<LogRank, SurvivalError> {
    let all: Vec<(f64, bool, bool)> = a
        .iter()
        .map(|s| (s.time, s.event, true))
        .chain(b.iter().map(|s| (s.time, s.event, false)))
        .collect();
    if all.is_empty() {
        return Err(SurvivalError::EmptySample);
    }
    check_samples(a).or_else(|e| if a.is_empty() { Ok(()) } else { Err(e) })?;
    check_samples(b).or_else(|e| if b.is_empty() { Ok(()) } else { Err(e) })?;
    if !all.iter().any(|s| s.1) {
        return Err(SurvivalError::NoEvents);
    }
    let mut sorted = all;
    sorted.sort_by(|x, y| x.0.total_cmp(&y.0));
    let n_total = sorted.len();
    let mut n_a = a.len() as f64;
    let (mut o, mut e, mut v) = (0.0, 0.0, 0.0);
    let mut i = 0;
    while i < n_total {
        let t = sorted[i].0;
        let n = (n_total - i) as f64;
        let (mut d, mut d_a, mut leave_a) = (0.0, 0.0, 0.0);
        while i < n_total && sorted[i].0 == t {
            let (_, ev, in_a) = sorted[i];
            if ev {
                d += 1.0;
                if in_a {
                    d_a += 1.0;
                }
            }
            if in_a {
                leave_a += 1.0;
            }
            i += 1;
        }
        if d > 0.0 {
            o += d_a;
            e += d * n_a / n;
            if n > 1.0 {
                v += d * (n_a / n) * (1.0 - n_a / n) * (n - d) / (n - 1.0);
            }
        }
        n_a -= leave_a;
    }
    let chi2 = if v > 0.0 { (o - e) * (o - e) / v } else { 0.0 };
    let p = if chi2 > 0.0 {
        ChiSquared::new(1.0).expect("df 1").sf(chi2)
    } else {
        1.0
    };
    Ok(LogRank {
        chi2,
        p,
        observed_a: o,
        expected_a: e,
        variance: v,
    })
}
