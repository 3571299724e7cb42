//! Staged pipeline driving extraction, stability gating, pruning, delta
//! analytics, survival statistics and reporting over an artifact directory.

pub mod artifacts;
pub mod config;
mod stages;
pub mod svg;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use config::{
    CollinearityConfig, DeltaConfig, PipelineConfig, StabilityConfig, SurvivalConfig,
};
pub use stages::resolve_feature;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("missing upstream artifact {0}")]
    MissingUpstreamArtifact(String),
    #[error("{stage} stage: {message}")]
    Data {
        stage: &'static str,
        message: String,
    },
    #[error("{stage} stage: numerical failure: {message}")]
    Numerical {
        stage: &'static str,
        message: String,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl PipelineError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Numerical { .. } => 4,
            Self::MissingUpstreamArtifact(_) | Self::Data { .. } | Self::Io { .. } => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Extract,
    Stability,
    Prune,
    Delta,
    Survive,
    Report,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Extract => "extract",
            Self::Stability => "stability",
            Self::Prune => "prune",
            Self::Delta => "delta",
            Self::Survive => "survive",
            Self::Report => "report",
        }
    }
}

/// Contents of `run_metadata.json`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunMetadata {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub feature_config_hash: String,
    pub stages: Vec<Stage>,
    pub assumptions: Vec<String>,
    /// SHA-256 of every other file in the output directory.
    pub artifacts: BTreeMap<String, String>,
}

/// An output directory bound to one configuration.
pub struct Pipeline {
    cfg: PipelineConfig,
    meta: RunMetadata,
}

impl Pipeline {
    /// Validates the configuration and prepares the output directory. Metadata
    /// from an earlier run with the same configuration is carried forward.
    pub fn new(cfg: PipelineConfig) -> Result<Self, PipelineError> {
        cfg.validate()?;
        let out = &cfg.output_dir;
        std::fs::create_dir_all(out).map_err(|source| PipelineError::Io {
            path: out.display().to_string(),
            source,
        })?;
        let config_hash = cfg.analysis_hash();
        let previous = std::fs::read_to_string(out.join(artifacts::METADATA))
            .ok()
            .and_then(|t| serde_json::from_str::<RunMetadata>(&t).ok())
            .filter(|m| m.config_hash == config_hash);
        let meta = previous.unwrap_or_else(|| RunMetadata {
            tool: "deltarad".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_hash,
            feature_config_hash: crate::features::config_hash(&cfg.preprocess),
            ..Default::default()
        });
        Ok(Self { cfg, meta })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn out_dir(&self) -> &Path {
        &self.cfg.output_dir
    }

    pub fn metadata(&self) -> &RunMetadata {
        &self.meta
    }

    fn assume(&mut self, note: impl Into<String>) {
        let note = note.into();
        if !self.meta.assumptions.contains(&note) {
            self.meta.assumptions.push(note);
        }
    }

    fn write(&self, name: &str, content: &str) -> Result<(), PipelineError> {
        artifacts::write(self.out_dir(), name, content)
    }

    fn read(&self, name: &str) -> Result<String, PipelineError> {
        artifacts::read(self.out_dir(), name)
    }

    /// Records the stage (if any) and rewrites `run_metadata.json`.
    fn finish(&mut self, stage: Option<Stage>) -> Result<(), PipelineError> {
        if let Some(stage) = stage {
            if !self.meta.stages.contains(&stage) {
                self.meta.stages.push(stage);
                self.meta.stages.sort();
            }
            log::info!("{} stage complete", stage.as_str());
        }
        let dir = self.out_dir().to_path_buf();
        let io = |source| PipelineError::Io {
            path: dir.display().to_string(),
            source,
        };
        let mut hashes = BTreeMap::new();
        for entry in std::fs::read_dir(&dir).map_err(io)? {
            let entry = entry.map_err(io)?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if name == artifacts::METADATA || !entry.path().is_file() {
                continue;
            }
            let bytes = std::fs::read(entry.path()).map_err(io)?;
            hashes.insert(name, hex::encode(Sha256::digest(&bytes)));
        }
        self.meta.artifacts = hashes;
        let text = serde_json::to_string_pretty(&self.meta).expect("metadata serializes") + "\n";
        self.write(artifacts::METADATA, &text)
    }

    /// Runs every stage in order; survival analysis is skipped when no
    /// outcomes file is configured.
    pub fn run_all(&mut self) -> Result<(), PipelineError> {
        self.extract()?;
        self.stability()?;
        self.prune()?;
        self.delta()?;
        if self.cfg.outcomes.is_some() {
            self.survive()?;
        }
        self.report()
    }
}

/// Runs `f` on a dedicated pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T, PipelineError> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(PipelineError::Config("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| PipelineError::Config(format!("cannot build thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Full run; returns the output directory.
pub fn run_pipeline(
    cfg: &PipelineConfig,
    threads: Option<usize>,
) -> Result<PathBuf, PipelineError> {
    let cfg = cfg.clone();
    with_threads(threads, move || {
        let mut p = Pipeline::new(cfg)?;
        p.run_all()?;
        Ok(p.out_dir().to_path_buf())
    })?
}
