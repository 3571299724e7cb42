//! Cox proportional hazards regression with Efron tie handling.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use super::concordance::concordance_index;
use super::{check_samples, normal_two_sided, SurvivalError, SurvivalSample};

pub const MAX_ITER: usize = 50;
pub const SCORE_TOL: f64 = 1e-8;
pub const LOGLIK_TOL: f64 = 1e-10;
pub const SEPARATION_BETA: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoxCovariate {
    pub name: String,
    pub beta: f64,
    pub se: f64,
    pub z: f64,
    pub p: f64,
    pub hr: f64,
    pub ci95: (f64, f64),
    /// Zero-variance covariate: coefficient fixed at 0.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoxFit {
    pub covariates: Vec<CoxCovariate>,
    pub loglik: f64,
    pub null_loglik: f64,
    pub concordance: f64,
    pub converged: bool,
    /// Set when a coefficient ran past the separation bound.
    pub separation: bool,
    pub iterations: usize,
}

impl CoxFit {
    pub fn get(&self, name: &str) -> Option<&CoxCovariate> {
        self.covariates.iter().find(|c| c.name == name)
    }
}

struct Design {
    /// Sample indices sorted by ascending time.
    order: Vec<usize>,
    /// `[start, end)` ranges of `order` sharing one time value.
    groups: Vec<(usize, usize)>,
    event: Vec<bool>,
    /// Centered active covariates, row-major per sample.
    x: Vec<Vec<f64>>,
}

struct Eval {
    loglik: f64,
    score: DVector<f64>,
    info: DMatrix<f64>,
}

impl Design {
    fn eval(&self, beta: &DVector<f64>) -> Eval {
        let p = beta.len();
        let eta: Vec<f64> = self
            .x
            .iter()
            .map(|r| r.iter().zip(beta.iter()).map(|(a, b)| a * b).sum())
            .collect();
        let shift = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = eta.iter().map(|e| (e - shift).exp()).collect();

        let mut loglik = 0.0;
        let mut score = DVector::zeros(p);
        let mut info = DMatrix::zeros(p, p);
        let mut s0 = 0.0;
        let mut s1 = DVector::<f64>::zeros(p);
        let mut s2 = DMatrix::<f64>::zeros(p, p);
        for &(start, end) in self.groups.iter().rev() {
            let mut d0 = 0.0;
            let mut d1 = DVector::<f64>::zeros(p);
            let mut d2 = DMatrix::<f64>::zeros(p, p);
            let mut d = 0usize;
            for &i in &self.order[start..end] {
                let xi = DVector::from_column_slice(&self.x[i]);
                let wi = w[i];
                s0 += wi;
                s1.axpy(wi, &xi, 1.0);
                s2.ger(wi, &xi, &xi, 1.0);
                if self.event[i] {
                    d += 1;
                    d0 += wi;
                    d1.axpy(wi, &xi, 1.0);
                    d2.ger(wi, &xi, &xi, 1.0);
                    loglik += eta[i];
                    score += &xi;
                }
            }
            for l in 0..d {
                let f = l as f64 / d as f64;
                let den = s0 - f * d0;
                let m1 = &s1 - &d1 * f;
                let m2 = &s2 - &d2 * f;
                loglik -= den.ln() + shift;
                score.axpy(-1.0 / den, &m1, 1.0);
                info += m2 / den;
                info.ger(-1.0 / (den * den), &m1, &m1, 1.0);
            }
        }
        Eval {
            loglik,
            score,
            info,
        }
    }
}

/// Fits on covariate columns (`columns[j][i]` is covariate `j` of sample `i`).
pub fn cox_fit_matrix(
    time: &[f64],
    event: &[bool],
    columns: &[Vec<f64>],
    names: &[String],
) -> Result<CoxFit, SurvivalError> {
    let n = time.len();
    if n == 0 {
        return Err(SurvivalError::EmptySample);
    }
    if event.len() != n || columns.len() != names.len() || columns.iter().any(|c| c.len() != n) {
        return Err(SurvivalError::LengthMismatch(format!(
            "{n} times, {} events",
            event.len()
        )));
    }
    if let Some(t) = time.iter().find(|t| !t.is_finite() || **t < 0.0) {
        return Err(SurvivalError::InvalidInput(format!("time {t}")));
    }
    if columns.iter().flatten().any(|v| !v.is_finite()) {
        return Err(SurvivalError::InvalidInput("non-finite covariate".into()));
    }
    if !event.iter().any(|&e| e) {
        return Err(SurvivalError::NoEvents);
    }

    let active: Vec<usize> = (0..columns.len())
        .filter(|&j| columns[j].iter().any(|&v| v != columns[j][0]))
        .collect();
    let means: Vec<f64> = active
        .iter()
        .map(|&j| columns[j].iter().sum::<f64>() / n as f64)
        .collect();
    let x: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            active
                .iter()
                .zip(&means)
                .map(|(&j, m)| columns[j][i] - m)
                .collect()
        })
        .collect();
    let p = active.len();

    if p > 0 {
        let xtx = DMatrix::from_fn(p, p, |a, b| x.iter().map(|r| r[a] * r[b]).sum::<f64>());
        let ev = SymmetricEigen::new(xtx).eigenvalues;
        let (lo, hi) = ev.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| {
            (lo.min(v), hi.max(v.abs()))
        });
        if lo <= 1e-12 * hi {
            return Err(SurvivalError::Singular);
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| time[a].total_cmp(&time[b]));
    let mut groups = Vec::new();
    let mut s = 0;
    while s < n {
        let mut e = s;
        while e < n && time[order[e]] == time[order[s]] {
            e += 1;
        }
        groups.push((s, e));
        s = e;
    }
    let design = Design {
        order,
        groups,
        event: event.to_vec(),
        x,
    };

    let mut beta = DVector::zeros(p);
    let mut cur = design.eval(&beta);
    let null_loglik = cur.loglik;
    let mut converged = p == 0;
    let mut separation = false;
    let mut iterations = 0;
    while !converged && iterations < MAX_ITER {
        if cur.score.amax() < SCORE_TOL {
            converged = true;
            break;
        }
        let Some(chol) = cur.info.clone().cholesky() else {
            break;
        };
        let step = chol.solve(&cur.score);
        let mut t = 1.0;
        let (mut next_beta, mut next) = (&beta + &step, design.eval(&(&beta + &step)));
        let mut halvings = 0;
        while !(next.loglik >= cur.loglik - 1e-12 * cur.loglik.abs()) && halvings < 30 {
            t *= 0.5;
            halvings += 1;
            next_beta = &beta + &step * t;
            next = design.eval(&next_beta);
        }
        let dll = next.loglik - cur.loglik;
        beta = next_beta;
        cur = next;
        iterations += 1;
        if beta.amax() > SEPARATION_BETA {
            separation = true;
            break;
        }
        if dll.abs() < LOGLIK_TOL {
            converged = true;
        }
    }
    if converged && p > 0 {
        // Monotone likelihood: the Newton step stays large after the
        // log-likelihood change has vanished.
        if let Some(chol) = cur.info.clone().cholesky() {
            let step = chol.solve(&cur.score);
            if step
                .iter()
                .zip(beta.iter())
                .any(|(s, b)| s.abs() > 1e-3 * b.abs().max(1.0))
            {
                converged = false;
                separation = true;
            }
        }
    }
    if !converged
        && !separation
        && cur.score.amax() >= SCORE_TOL
        && cur.info.clone().cholesky().is_none()
    {
        return Err(SurvivalError::Singular);
    }

    let cov = cur.info.clone().cholesky().map(|c| c.inverse());
    let mut covariates = Vec::with_capacity(names.len());
    for (j, name) in names.iter().enumerate() {
        let c = match active.iter().position(|&a| a == j) {
            Some(k) => {
                let b = beta[k];
                let se = cov
                    .as_ref()
                    .map_or(f64::INFINITY, |c| c[(k, k)].max(0.0).sqrt());
                let z = b / se;
                CoxCovariate {
                    name: name.clone(),
                    beta: b,
                    se,
                    z,
                    p: normal_two_sided(z),
                    hr: b.exp(),
                    ci95: ((b - 1.96 * se).exp(), (b + 1.96 * se).exp()),
                    degenerate: false,
                }
            }
            None => CoxCovariate {
                name: name.clone(),
                beta: 0.0,
                se: f64::INFINITY,
                z: 0.0,
                p: 1.0,
                hr: 1.0,
                ci95: (0.0, f64::INFINITY),
                degenerate: true,
            },
        };
        covariates.push(c);
    }
    let risk: Vec<f64> = (0..n)
        .map(|i| {
            covariates
                .iter()
                .zip(columns)
                .map(|(c, col)| c.beta * col[i])
                .sum()
        })
        .collect();
    let concordance = concordance_index(&risk, time, event).unwrap_or(0.5);
    Ok(CoxFit {
        covariates,
        loglik: cur.loglik,
        null_loglik,
        concordance,
        converged,
        separation,
        iterations,
    })
}

/// Fits on the named covariates of each sample.
pub fn cox_fit(
    samples: &[SurvivalSample],
    covariate_names: &[&str],
) -> Result<CoxFit, SurvivalError> {
    check_samples(samples)?;
    let columns = covariate_names
        .iter()
        .map(|name| {
            samples
                .iter()
                .map(|s| {
                    s.covariates
                        .get(*name)
                        .copied()
                        .ok_or_else(|| SurvivalError::MissingCovariate(name.to_string()))
                })
                .collect::<Result<Vec<f64>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let time: Vec<f64> = samples.iter().map(|s| s.time).collect();
    let event: Vec<bool> = samples.iter().map(|s| s.event).collect();
    let names: Vec<String> = covariate_names.iter().map(|s| s.to_string()).collect();
    cox_fit_matrix(&time, &event, &columns, &names)
}

/// Efron log partial likelihood at a given coefficient vector.
pub fn efron_loglik(time: &[f64], event: &[bool], columns: &[Vec<f64>], beta: &[f64]) -> f64 {
    let n = time.len();
    let mut ll = 0.0;
    let eta: Vec<f64> = (0..n)
        .map(|i| columns.iter().zip(beta).map(|(c, b)| c[i] * b).sum())
        .collect();
    let mut times: Vec<f64> = (0..n).filter(|&i| event[i]).map(|i| time[i]).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    for t in times {
        let deaths: Vec<usize> = (0..n).filter(|&i| event[i] && time[i] == t).collect();
        let risk: f64 = (0..n).filter(|&i| time[i] >= t).map(|i| eta[i].exp()).sum();
        let dsum: f64 = deaths.iter().map(|&i| eta[i].exp()).sum();
        let d = deaths.len() as f64;
        for &i in &deaths {
            ll += eta[i];
        }
        for l in 0..deaths.len() {
            ll -= (risk - l as f64 / d * dsum).ln();
        }
    }
    ll
}
