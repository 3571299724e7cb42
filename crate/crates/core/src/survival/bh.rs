//! Benjamini-Hochberg step-up adjustment.

use super::SurvivalError;

pub fn bh_adjust(p: &[f64]) -> Result<Vec<f64>, SurvivalError> {
    if let Some(&bad) = p.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(SurvivalError::OutOfRange(bad));
    }
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));
    let mut out = vec![0.0; m];
    let mut running = 1.0f64;
    for (rank, &i) in order.iter().enumerate().rev() {
        running = running.min((p[i] * m as f64 / (rank + 1) as f64).max(p[i]));
        out[i] = running.min(1.0);
    }
    Ok(out)
}
