use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::dataset::EmbeddingDataset;
use crate::cluster::ClusterGrouping;
use crate::error::{Error, Result};
use crate::seed;

/// Record indices of the three evaluation sets; pairwise disjoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSplit {
    pub train: Vec<usize>,
    pub id_test: Vec<usize>,
    pub ood_test: Vec<usize>,
}

/// Id-based form of a split, as written to `split.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitFile {
    pub train_ids: Vec<String>,
    pub id_test_ids: Vec<String>,
    pub ood_test_ids: Vec<String>,
}

impl DatasetSplit {
    pub fn to_file(&self, dataset: &EmbeddingDataset) -> SplitFile {
        let ids = |idx: &[usize]| idx.iter().map(|&i| dataset.records()[i].id.clone()).collect();
        SplitFile { train_ids: ids(&self.train), id_test_ids: ids(&self.id_test), ood_test_ids: ids(&self.ood_test) }
    }

    pub fn from_file(file: &SplitFile, dataset: &EmbeddingDataset) -> Result<Self> {
        Ok(Self {
            train: dataset.resolve_ids(&file.train_ids)?,
            id_test: dataset.resolve_ids(&file.id_test_ids)?,
            ood_test: dataset.resolve_ids(&file.ood_test_ids)?,
        })
    }

    /// Every index not used by either test set.
    pub fn non_test(&self, n: usize) -> Vec<usize> {
        let mut used = vec![false; n];
        for &i in self.id_test.iter().chain(&self.ood_test) {
            used[i] = true;
        }
        (0..n).filter(|&i| !used[i]).collect()
    }

    pub fn hash(&self, dataset: &EmbeddingDataset) -> String {
        let f = self.to_file(dataset);
        let all: Vec<&str> = f
            .train_ids
            .iter()
            .map(String::as_str)
            .chain(std::iter::once("|"))
            .chain(f.id_test_ids.iter().map(String::as_str))
            .chain(std::iter::once("|"))
            .chain(f.ood_test_ids.iter().map(String::as_str))
            .collect();
        seed::hash_ids(&all)
    }
}

/// Trains on the imbalanced group minus a held-out in-distribution test set;
/// the balanced group is the out-of-distribution test set.
pub fn split_id_ood(grouping: &ClusterGrouping, id_test_size: usize, seed: u64) -> Result<DatasetSplit> {
    let members = grouping
        .members
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("grouping has not been downsampled".into()))?;
    if members.imbalanced.is_empty() || members.balanced.is_empty() {
        return Err(Error::InvalidArgument("both cluster groups must be non-empty".into()));
    }
    if id_test_size >= members.imbalanced.len() {
        return Err(Error::InvalidArgument(format!(
            "id_test_size {id_test_size} leaves no training data in an imbalanced group of {}",
            members.imbalanced.len()
        )));
    }
    let mut pool = members.imbalanced.clone();
    pool.shuffle(&mut seed::rng(seed));
    let mut id_test = pool[..id_test_size].to_vec();
    let mut train = pool[id_test_size..].to_vec();
    id_test.sort_unstable();
    train.sort_unstable();
    Ok(DatasetSplit { train, id_test, ood_test: members.balanced.clone() })
}
