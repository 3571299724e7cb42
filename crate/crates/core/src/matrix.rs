//! Samples × features table.

use crate::features::FeatureVector;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureMatrix {
    pub feature_names: Vec<String>,
    pub sample_ids: Vec<String>,
    /// Row-major: `values[sample][feature]`.
    pub values: Vec<Vec<f64>>,
}

impl FeatureMatrix {
    /// Stacks vectors that share the same feature names, using each
    /// vector's course id as the sample id.
    pub fn from_vectors(vs: &[FeatureVector]) -> Result<Self, String> {
        let Some(first) = vs.first() else {
            return Ok(Self::default());
        };
        let names: Vec<String> = first.names().map(str::to_string).collect();
        let mut values = Vec::with_capacity(vs.len());
        for v in vs {
            if !v.names().eq(names.iter().map(String::as_str)) {
                return Err(format!(
                    "feature names of {} differ from {}",
                    v.course_id, first.course_id
                ));
            }
            values.push(v.entries.iter().map(|e| e.value).collect());
        }
        Ok(Self {
            feature_names: names,
            sample_ids: vs.iter().map(|v| v.course_id.clone()).collect(),
            values,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.values.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.iter().map(|r| r[j]).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    pub fn column_by_name(&self, name: &str) -> Option<Vec<f64>> {
        self.column_index(name).map(|j| self.column(j))
    }

    /// Keeps only the named columns, in the given order.
    pub fn select(&self, names: &[String]) -> Option<Self> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| self.column_index(n))
            .collect::<Option<_>>()?;
        Some(Self {
            feature_names: names.to_vec(),
            sample_ids: self.sample_ids.clone(),
            values: self
                .values
                .iter()
                .map(|r| idx.iter().map(|&j| r[j]).collect())
                .collect(),
        })
    }
}
