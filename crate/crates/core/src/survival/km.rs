//! Product-limit survival estimate.

use serde::Serialize;

use super::{check_samples, SurvivalError, SurvivalSample};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KmPoint {
    pub time: f64,
    pub survival: f64,
    pub at_risk: usize,
    pub events: usize,
}

/// Step function starting at `(0, 1)`; one further point per distinct event
/// time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KaplanMeier {
    pub points: Vec<KmPoint>,
}

impl KaplanMeier {
    /// Right-continuous evaluation.
    pub fn survival_at(&self, t: f64) -> f64 {
        self.points
            .iter()
            .take_while(|p| p.time <= t)
            .last()
            .map_or(1.0, |p| p.survival)
    }
}

pub fn km_estimate(samples: &[SurvivalSample]) -> Result<KaplanMeier, SurvivalError> {
    check_samples(samples)?;
    let mut order: Vec<&SurvivalSample> = samples.iter().collect();
    order.sort_by(|a, b| a.time.total_cmp(&b.time));
    let mut points = vec![KmPoint {
        time: 0.0,
        survival: 1.0,
        at_risk: samples.len(),
        events: 0,
    }];
    let mut s = 1.0;
    let mut i = 0;
    while i < order.len() {
        let t = order[i].time;
        let at_risk = order.len() - i;
        let mut d = 0;
        while i < order.len() && order[i].time == t {
            d += usize::from(order[i].event);
            i += 1;
        }
        if d > 0 {
            s *= (at_risk - d) as f64 / at_risk as f64;
            if t == 0.0 {
                points[0] = KmPoint {
                    time: 0.0,
                    survival: s,
                    at_risk,
                    events: d,
                };
            } else {
                points.push(KmPoint {
                    time: t,
                    survival: s,
                    at_risk,
                    events: d,
                });
            }
        }
    }
    Ok(KaplanMeier { points })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples(t: &[f64], e: &[bool]) -> Vec<SurvivalSample> {
        t.iter()
            .zip(e)
            .map(|(&t, &e)| SurvivalSample::new(t, e))
            .collect()
    }

    #[test]
    fn hand_product_limit() {
        let km = km_estimate(&samples(&[5.0, 10.0, 15.0], &[true, false, true])).unwrap();
        assert_eq!(km.points.len(), 3);
        assert_eq!(km.survival_at(5.0), 2.0 / 3.0);
        assert_eq!(km.survival_at(12.0), 2.0 / 3.0);
        assert_eq!(km.survival_at(15.0), 0.0);
        assert_eq!(km.survival_at(4.999), 1.0);
    }

    #[test]
    fn all_censored_is_flat() {
        let km = km_estimate(&samples(&[1.0, 2.0, 3.0], &[false; 3])).unwrap();
        assert_eq!(km.points.len(), 1);
        assert_eq!(km.survival_at(100.0), 1.0);
    }

    #[test]
    fn no_censoring_is_empirical() {
        let t = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0];
        let km = km_estimate(&samples(&t, &[true; 8])).unwrap();
        for &q in &t {
            let frac = t.iter().filter(|&&x| x > q).count() as f64 / 8.0;
            assert!((km.survival_at(q) - frac).abs() < 1e-15);
        }
        assert_eq!(km_estimate(&[]), Err(SurvivalError::EmptySample));
    }
}
