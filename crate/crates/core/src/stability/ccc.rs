//! Lin's concordance correlation coefficient.

use super::StabilityError;

/// `2 s_xy / (s_x² + s_y² + (x̄ − ȳ)²)` with population moments.
///
/// Two constant vectors give 1 when identical and `BothConstant` otherwise.
pub fn lin_ccc(x: &[f64], y: &[f64]) -> Result<f64, StabilityError> {
    if x.len() != y.len() {
        return Err(StabilityError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(StabilityError::TooFewCourses(x.len()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
        sxy += (a - mx) * (b - my);
    }
    let (sxx, syy, sxy) = (sxx / n, syy / n, sxy / n);
    if sxx == 0.0 && syy == 0.0 {
        return if x == y {
            Ok(1.0)
        } else {
            Err(StabilityError::BothConstant)
        };
    }
    Ok((2.0 * sxy / (sxx + syy + (mx - my).powi(2))).clamp(-1.0, 1.0))
}

/// CCC for stability purposes: two different constant vectors score 0
/// (no agreement in location and no variation to correlate).
pub fn stability_ccc(x: &[f64], y: &[f64]) -> Result<f64, StabilityError> {
    match lin_ccc(x, y) {
        Err(StabilityError::BothConstant) => Ok(0.0),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::pearson;
    use proptest::prelude::*;

    #[test]
    fn hand_values() {
        assert!((lin_ccc(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]).unwrap() - 4.0 / 7.0).abs() < 1e-12);
        assert_eq!(lin_ccc(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);
        assert_eq!(lin_ccc(&[-1.0, 0.0, 1.0], &[1.0, 0.0, -1.0]).unwrap(), -1.0);
    }

    #[test]
    fn constant_conventions() {
        assert_eq!(lin_ccc(&[2.0, 2.0], &[2.0, 2.0]).unwrap(), 1.0);
        assert_eq!(
            lin_ccc(&[2.0, 2.0], &[3.0, 3.0]),
            Err(StabilityError::BothConstant)
        );
        assert_eq!(stability_ccc(&[2.0, 2.0], &[3.0, 3.0]), Ok(0.0));
        assert_eq!(lin_ccc(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert!(matches!(
            lin_ccc(&[1.0], &[1.0, 2.0]),
            Err(StabilityError::LengthMismatch { .. })
        ));
    }

    proptest! {
        #[test]
        fn bounded_by_pearson_and_symmetric(x in prop::collection::vec(-1e3f64..1e3, 3..30), seed in any::<u64>()) {
            let y: Vec<f64> = x.iter().enumerate().map(|(i, v)| v * 0.7 + ((seed >> (i % 60)) & 7) as f64).collect();
            if let (Ok(c), Some(r)) = (lin_ccc(&x, &y), pearson(&x, &y)) {
                prop_assert!(c.abs() <= r.abs() + 1e-12);
                prop_assert!((c - lin_ccc(&y, &x).unwrap()).abs() < 1e-12);
                let fx: Vec<f64> = x.iter().map(|v| 2.5 * v - 4.0).collect();
                let fy: Vec<f64> = y.iter().map(|v| 2.5 * v - 4.0).collect();
                prop_assert!((c - lin_ccc(&fx, &fy).unwrap()).abs() < 1e-9);
            }
        }
    }
}
