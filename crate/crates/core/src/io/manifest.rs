//! Cohort manifest: which image and masks belong to each (course, fraction).

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("manifest schema error: {0}")]
    SchemaError(String),
    #[error("duplicate course_id {0:?}")]
    DuplicateCourse(String),
    #[error("course {0:?} has no F1 fraction")]
    MissingF1(String),
    #[error("course {course:?} fraction {fraction}: file {path} does not exist")]
    MissingFile {
        course: String,
        fraction: FractionLabel,
        path: String,
    },
}

/// Scan time point: the simulation scan or one of the five treatment fractions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FractionLabel {
    #[serde(rename = "SIM")]
    Sim,
    F1,
    F2,
    F3,
    F4,
    F5,
}

impl FractionLabel {
    pub const ALL: [FractionLabel; 6] =
        [Self::Sim, Self::F1, Self::F2, Self::F3, Self::F4, Self::F5];
    pub const TREATMENT: [FractionLabel; 5] = [Self::F1, Self::F2, Self::F3, Self::F4, Self::F5];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Sim => "SIM",
            Self::F1 => "F1",
            Self::F2 => "F2",
            Self::F3 => "F3",
            Self::F4 => "F4",
            Self::F5 => "F5",
        }
    }
}

impl fmt::Display for FractionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FractionLabel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| format!("unknown fraction label {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FractionFiles {
    pub image: PathBuf,
    pub gtv: PathBuf,
    #[serde(default)]
    pub heart: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CourseEntry {
    pub course_id: String,
    pub patient_id: String,
    pub fractions: BTreeMap<FractionLabel, FractionFiles>,
}

impl CourseEntry {
    pub fn has_all_treatment_fractions(&self) -> bool {
        FractionLabel::TREATMENT
            .iter()
            .all(|f| self.fractions.contains_key(f))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohortManifest {
    pub schema_version: String,
    pub courses: Vec<CourseEntry>,
}

impl CohortManifest {
    pub fn validate(&self) -> Result<(), ManifestError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ManifestError::SchemaError(format!(
                "schema_version {:?} is not supported (expected {SCHEMA_VERSION:?})",
                self.schema_version
            )));
        }
        let mut seen = HashSet::new();
        for c in &self.courses {
            if !seen.insert(c.course_id.as_str()) {
                return Err(ManifestError::DuplicateCourse(c.course_id.clone()));
            }
            if !c.fractions.contains_key(&FractionLabel::F1) {
                return Err(ManifestError::MissingF1(c.course_id.clone()));
            }
        }
        Ok(())
    }

    pub fn course(&self, id: &str) -> Option<&CourseEntry> {
        self.courses.iter().find(|c| c.course_id == id)
    }

    fn resolve_relative(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for c in &mut self.courses {
            for files in c.fractions.values_mut() {
                fix(&mut files.image);
                fix(&mut files.gtv);
                if let Some(h) = files.heart.as_mut() {
                    fix(h);
                }
            }
        }
    }

    fn check_paths(&self) -> Result<(), ManifestError> {
        for c in &self.courses {
            for (label, files) in &c.fractions {
                let paths = [Some(&files.image), Some(&files.gtv), files.heart.as_ref()];
                for p in paths.into_iter().flatten() {
                    if !p.exists() {
                        return Err(ManifestError::MissingFile {
                            course: c.course_id.clone(),
                            fraction: *label,
                            path: p.display().to_string(),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Parses manifest JSON. Relative paths are left as written.
pub fn parse_manifest(text: &str) -> Result<CohortManifest, ManifestError> {
    let m: CohortManifest =
        serde_json::from_str(text).map_err(|e| ManifestError::SchemaError(e.to_string()))?;
    m.validate()?;
    Ok(m)
}

/// Loads a manifest file; relative paths resolve against the manifest's directory.
pub fn load_manifest(path: &Path, validate_paths: bool) -> Result<CohortManifest, ManifestError> {
    let text = std::fs::read_to_string(path).map_err(|source| ManifestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut m = parse_manifest(&text)?;
    if let Some(dir) = path.parent() {
        m.resolve_relative(dir);
    }
    if validate_paths {
        m.check_paths()?;
    }
    Ok(m)
}
