use std::collections::BTreeMap;

use deltarad::features::extract_all;
use deltarad::io::outcomes::Endpoint;
use deltarad::phantom::{
    course_id, generate_phantom_course, generate_survival, simulate_exponential, LesionModel,
    PhantomSpec, SurvivalModel,
};
use deltarad::preprocess::PreprocessConfig;
use deltarad::survival::{km_estimate, SurvivalSample};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const SKEWNESS: &str = "original_firstorder_Skewness";

fn skewness(spec: &PhantomSpec, index: usize, cfg: &PreprocessConfig) -> (f64, f64) {
    let course = generate_phantom_course(spec, index).unwrap();
    let s: Vec<f64> = [1, 5]
        .iter()
        .map(|&k| {
            let scan = &course.scans[k];
            extract_all(&scan.image, &scan.gtv, scan.heart.as_ref(), cfg)
                .unwrap()
                .get(SKEWNESS)
                .unwrap()
        })
        .collect();
    (s[0], s[1])
}

#[test]
fn negative_skewness_drift_lowers_extracted_skewness() {
    let spec = PhantomSpec {
        n_courses: 100,
        lesion: LesionModel {
            skewness_drift: -0.3,
            max_grain: 1,
            ..Default::default()
        },
        ..Default::default()
    };
    let cfg = PreprocessConfig::default();
    let pairs: Vec<(f64, f64)> = (0..spec.n_courses)
        .into_par_iter()
        .map(|i| skewness(&spec, i, &cfg))
        .collect();
    let down = pairs.iter().filter(|(f1, f5)| f5 < f1).count();
    assert!(down >= 80, "skewness decreased in {down} of 100 courses");
}

#[test]
fn km_tracks_the_exponential_survivor() {
    let lambda = 1.0 / 300.0;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let draws = simulate_exponential(&vec![lambda; 5000], 0.0, &mut rng);
    assert!(draws.iter().all(|d| d.1));
    let samples: Vec<SurvivalSample> = draws
        .iter()
        .map(|&(t, e)| SurvivalSample::new(t, e))
        .collect();
    let km = km_estimate(&samples).unwrap();
    let mut sup: f64 = 0.0;
    for w in km.points.windows(2) {
        let truth = (-lambda * w[1].time).exp();
        sup = sup
            .max((w[1].survival - truth).abs())
            .max((w[0].survival - truth).abs());
    }
    assert!(sup < 0.03, "sup-norm {sup}");
}

#[test]
fn censoring_rate_is_met() {
    for target in [0.1, 0.3, 0.5] {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rates: Vec<f64> = (0..4000)
            .map(|i| 0.001 + 0.004 * (i % 10) as f64 / 9.0)
            .collect();
        let draws = simulate_exponential(&rates, target, &mut rng);
        let censored = draws.iter().filter(|d| !d.1).count() as f64 / draws.len() as f64;
        assert!(
            (censored - target).abs() <= 0.05,
            "target {target}, got {censored}"
        );
    }
}

#[test]
fn zero_censoring_gives_events_for_every_endpoint() {
    let model = SurvivalModel {
        censoring_rate: 0.0,
        threshold: None,
        ..Default::default()
    };
    let ids: Vec<String> = (0..30).map(course_id).collect();
    let table = generate_survival(&model, 5, &ids, &vec![BTreeMap::new(); 30]);
    for row in &table.rows {
        assert!(Endpoint::ALL.iter().all(|&e| row.get(e).event));
    }
}

#[test]
fn courses_are_reproducible_from_the_seed() {
    let spec = PhantomSpec {
        n_courses: 2,
        ..Default::default()
    };
    let a = generate_phantom_course(&spec, 1).unwrap();
    let b = generate_phantom_course(&spec, 1).unwrap();
    let other = generate_phantom_course(
        &PhantomSpec {
            seed: spec.seed + 1,
            ..spec.clone()
        },
        1,
    )
    .unwrap();
    assert_eq!(a.scans.len(), 6);
    for k in 0..6 {
        assert_eq!(a.scans[k].image, b.scans[k].image);
        assert_eq!(a.scans[k].gtv, b.scans[k].gtv);
    }
    assert_ne!(a.scans[1].image, other.scans[1].image);
}
