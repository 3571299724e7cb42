use deltarad::phantom::simulate_exponential;
use deltarad::survival::{
    bh_adjust, concordance_index, cox_fit_matrix, cutpoint_search, km_estimate, logrank_test,
    CutpointConfig, SurvivalSample,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cohort() -> impl Strategy<Value = Vec<(f64, bool)>> {
    prop::collection::vec(
        ((1u32..60).prop_map(f64::from), prop::bool::weighted(0.7)),
        4..40,
    )
}

fn samples(c: &[(f64, bool)]) -> Vec<SurvivalSample> {
    c.iter().map(|&(t, e)| SurvivalSample::new(t, e)).collect()
}

proptest! {
    #[test]
    fn logrank_is_symmetric(a in cohort(), b in cohort()) {
        let (a, b) = (samples(&a), samples(&b));
        if let Ok(ab) = logrank_test(&a, &b) {
            let ba = logrank_test(&b, &a).unwrap();
            prop_assert!(ab.chi2 >= 0.0);
            prop_assert!((ab.chi2 - ba.chi2).abs() <= 1e-9 * (1.0 + ab.chi2));
            prop_assert!((ab.p - ba.p).abs() <= 1e-9);
        }
    }

    #[test]
    fn bh_dominates_and_preserves_rank(p in prop::collection::vec(0.0f64..=1.0, 1..40)) {
        let q = bh_adjust(&p).unwrap();
        for i in 0..p.len() {
            prop_assert!(q[i] >= p[i] && q[i] <= 1.0);
            for j in 0..p.len() {
                if p[i] <= p[j] {
                    prop_assert!(q[i] <= q[j]);
                }
            }
        }
    }

    #[test]
    fn km_without_censoring_is_one_minus_ecdf(times in prop::collection::vec(1u32..50, 1..60)) {
        let s: Vec<SurvivalSample> = times.iter().map(|&t| SurvivalSample::new(f64::from(t), true)).collect();
        let km = km_estimate(&s).unwrap();
        let n = times.len() as f64;
        for t in 0..52 {
            let ecdf = times.iter().filter(|&&x| x <= t).count() as f64 / n;
            prop_assert!((km.survival_at(f64::from(t)) - (1.0 - ecdf)).abs() < 1e-12);
        }
    }

    #[test]
    fn reversed_risk_complements_concordance(c in cohort(), risk in prop::collection::vec(-5.0f64..5.0, 40)) {
        let time: Vec<f64> = c.iter().map(|x| x.0).collect();
        let event: Vec<bool> = c.iter().map(|x| x.1).collect();
        let risk = &risk[..time.len()];
        let neg: Vec<f64> = risk.iter().map(|r| -r).collect();
        if let Ok(a) = concordance_index(risk, &time, &event) {
            let b = concordance_index(&neg, &time, &event).unwrap();
            prop_assert!((a + b - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cox_is_affine_invariant(seed in 0u64..1000, scale in prop_oneof![0.1f64..10.0, -10.0f64..-0.1], shift in -50.0f64..50.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..60).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let rates: Vec<f64> = x.iter().map(|v| 0.01 * (0.8 * v).exp()).collect();
        let d = simulate_exponential(&rates, 0.2, &mut rng);
        let time: Vec<f64> = d.iter().map(|p| p.0).collect();
        let event: Vec<bool> = d.iter().map(|p| p.1).collect();
        let names = vec!["x".to_string()];
        let a = cox_fit_matrix(&time, &event, &[x.clone()], &names).unwrap();
        let y: Vec<f64> = x.iter().map(|v| scale * v + shift).collect();
        let b = cox_fit_matrix(&time, &event, &[y], &names).unwrap();
        let (ca, cb) = (&a.covariates[0], &b.covariates[0]);
        prop_assert!((ca.beta - cb.beta * scale).abs() < 1e-6 * (1.0 + ca.beta.abs()));
        prop_assert!((ca.z.abs() - cb.z.abs()).abs() < 1e-6);
        prop_assert!((a.loglik - b.loglik).abs() < 1e-8 * (1.0 + a.loglik.abs()));
    }
}

#[test]
fn cutpoint_search_holds_its_level_under_the_null() {
    let cfg = CutpointConfig {
        n_perm: 999,
        ..Default::default()
    };
    let mut quiet = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..40).map(|_| rng.random()).collect();
        let d = simulate_exponential(&[0.01; 40], 0.2, &mut rng);
        let time: Vec<f64> = d.iter().map(|p| p.0).collect();
        let event: Vec<bool> = d.iter().map(|p| p.1).collect();
        let r = cutpoint_search(
            &x,
            &time,
            &event,
            &CutpointConfig {
                seed,
                ..cfg.clone()
            },
        )
        .unwrap();
        if !r.significant {
            quiet += 1;
        }
    }
    assert!(quiet >= 90, "{quiet} of 100 null cohorts not significant");
}
