use std::path::Path;

use deltarad::phantom::{write_phantom_cohort, PhantomSpec};
use deltarad::pipeline::{run_pipeline, Pipeline, PipelineConfig, PipelineError};

fn config(dir: &Path, spec: &PhantomSpec) -> PipelineConfig {
    let mut cfg = PipelineConfig::default();
    let files = write_phantom_cohort(spec, &dir.join("cohort"), &cfg.preprocess).unwrap();
    cfg.manifest = files.manifest;
    cfg.outcomes = Some(files.outcomes);
    cfg.output_dir = dir.join("out");
    cfg.survival.n_perm = 999;
    cfg
}

fn lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(str::to_string)
        .collect()
}

#[test]
fn phantom_cohort_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let spec = PhantomSpec::default();
    let cfg = config(dir.path(), &spec);
    let out = run_pipeline(&cfg, None).unwrap();

    let features = lines(&out.join("features.csv"));
    assert_eq!(features.len(), 1 + 20 * 6);
    assert_eq!(features[0].split(',').count(), 3 + 107 + 1);
    assert_eq!(lines(&out.join("stability.csv")).len(), 1 + 107);
    for name in [
        "features_perturbed.csv",
        "kept_features.json",
        "correlation.csv",
        "correlation.svg",
        "delta_long.csv",
        "delta_trajectories.svg",
        "table_2.csv",
        "table_s2.csv",
        "table_s3.csv",
        "table_s4.csv",
        "table_3.csv",
        "table_4.csv",
        "km_LFFS_0.973.csv",
        "km_LFFS_0.973.svg",
        "km_LFFS_0.951.csv",
        "km_LFFS_0.951.svg",
        "km_summary.json",
        "cutpoint.json",
        "ancova.json",
        "run_metadata.json",
    ] {
        assert!(out.join(name).is_file(), "{name} missing");
    }
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("run_metadata.json")).unwrap())
            .unwrap();
    assert_eq!(meta["stages"].as_array().unwrap().len(), 6);
    assert!(!meta["assumptions"].as_array().unwrap().is_empty());
    assert_eq!(meta["config_hash"], cfg.analysis_hash());
}

#[test]
fn missing_heart_mask_names_the_course() {
    let dir = tempfile::tempdir().unwrap();
    let spec = PhantomSpec {
        n_courses: 3,
        heart: None,
        ..Default::default()
    };
    let mut cfg = config(dir.path(), &spec);
    cfg.preprocess.normalize = true;
    let err = Pipeline::new(cfg).unwrap().extract().unwrap_err();
    assert_eq!(err.exit_code(), 3);
    let msg = err.to_string();
    assert!(
        msg.contains("NormalizationInputMissing") && msg.contains("C001"),
        "{msg}"
    );
}

#[test]
fn stages_need_their_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig {
        output_dir: dir.path().to_path_buf(),
        ..Default::default()
    };
    let mut p = Pipeline::new(cfg).unwrap();
    assert!(matches!(
        p.stability(),
        Err(PipelineError::MissingUpstreamArtifact(_))
    ));
    assert!(matches!(
        p.prune(),
        Err(PipelineError::MissingUpstreamArtifact(_))
    ));
    assert!(matches!(
        p.delta(),
        Err(PipelineError::MissingUpstreamArtifact(_))
    ));
}
