use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub id: String,
    pub vector: Vec<f32>,
    pub label: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens: Option<Vec<String>>,
}

/// Validated collection of records sharing one embedding width.
///
/// Vectors are stored at `f32`, the width encoders emit and the binary format
/// carries; numeric routines lift them to any [`Scalar`] via [`Self::matrix`].
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingDataset {
    dim: usize,
    labels: Vec<i32>,
    records: Vec<EmbeddingRecord>,
}

impl EmbeddingDataset {
    /// Builds a dataset whose label set is the distinct labels present.
    pub fn from_records(records: Vec<EmbeddingRecord>) -> Result<Self> {
        let labels: BTreeSet<i32> = records.iter().map(|r| r.label).collect();
        Self::new(labels.into_iter().collect(), records)
    }

    pub fn new(mut labels: Vec<i32>, records: Vec<EmbeddingRecord>) -> Result<Self> {
        let first = records.first().ok_or(Error::EmptyDataset)?;
        let dim = first.vector.len();
        if dim == 0 {
            return Err(Error::DimensionMismatch { id: first.id.clone(), expected: 1, found: 0 });
        }
        labels.sort_unstable();
        labels.dedup();
        if labels.len() < 2 {
            return Err(Error::TooFewLabels(labels.len()));
        }
        let mut seen = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            validate_record(r, dim)?;
            if labels.binary_search(&r.label).is_err() {
                return Err(Error::UnknownLabel { id: r.id.clone(), label: r.label });
            }
            if seen.insert(r.id.as_str(), i).is_some() {
                return Err(Error::DuplicateId(r.id.clone()));
            }
        }
        Ok(Self { dim, labels, records })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Sorted, de-duplicated label set.
    pub fn label_set(&self) -> &[i32] {
        &self.labels
    }

    pub fn records(&self) -> &[EmbeddingRecord] {
        &self.records
    }

    pub fn labels(&self) -> Vec<i32> {
        self.records.iter().map(|r| r.label).collect()
    }

    pub fn ids(&self) -> Vec<&str> {
        self.records.iter().map(|r| r.id.as_str()).collect()
    }

    pub fn matrix<T: Scalar>(&self) -> Matrix<T> {
        let mut data = Vec::with_capacity(self.len() * self.dim);
        for r in &self.records {
            data.extend(r.vector.iter().map(|&v| T::lit(f64::from(v))));
        }
        Matrix::from_vec(self.len(), self.dim, data).expect("validated dimensions")
    }

    pub fn index_of_ids(&self) -> HashMap<&str, usize> {
        self.records.iter().enumerate().map(|(i, r)| (r.id.as_str(), i)).collect()
    }

    /// Maps ids to record indices, failing on the first unknown id.
    pub fn resolve_ids<S: AsRef<str>>(&self, ids: &[S]) -> Result<Vec<usize>> {
        let index = self.index_of_ids();
        ids.iter()
            .map(|id| {
                index.get(id.as_ref()).copied().ok_or_else(|| Error::UnknownId(id.as_ref().to_owned()))
            })
            .collect()
    }
}

pub(crate) fn validate_record(r: &EmbeddingRecord, dim: usize) -> Result<()> {
    if r.vector.len() != dim {
        return Err(Error::DimensionMismatch { id: r.id.clone(), expected: dim, found: r.vector.len() });
    }
    if let Some(index) = r.vector.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { id: r.id.clone(), index });
    }
    Ok(())
}
