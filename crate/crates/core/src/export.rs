//! CSV artifacts for external tools: assignments, quadruplets, PR curves, PCA coordinates.

use std::path::Path;

use crate::cluster::ClusterAssignment;
use crate::embed::EmbeddingDataset;
use crate::error::{Error, Result};
use crate::miner::Quadruplet;
use crate::pipeline::SetMetrics;

/// `id,cluster` rows in dataset order.
pub fn write_assignment_csv(path: impl AsRef<Path>, dataset: &EmbeddingDataset, a: &ClusterAssignment) -> Result<()> {
    if a.len() != dataset.len() {
        return Err(Error::ShapeMismatch(format!("{} assignments for {} records", a.len(), dataset.len())));
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["id", "cluster"])?;
    for (r, &c) in dataset.records().iter().zip(a.cluster_of()) {
        w.write_record([r.id.as_str(), &c.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `id,cluster` rows, reordered to match `dataset`.
pub fn read_assignment_csv(path: impl AsRef<Path>, dataset: &EmbeddingDataset) -> Result<ClusterAssignment> {
    let mut r = csv::Reader::from_path(path)?;
    let index = dataset.index_of_ids();
    let mut cluster_of = vec![usize::MAX; dataset.len()];
    for (line, row) in r.records().enumerate() {
        let row = row?;
        let bad = |m: &str| Error::Parse { line: line + 2, message: m.to_string() };
        let id = row.get(0).ok_or_else(|| bad("missing id"))?;
        let c: usize = row.get(1).ok_or_else(|| bad("missing cluster"))?.parse().map_err(|_| bad("cluster is not an integer"))?;
        let &i = index.get(id).ok_or_else(|| Error::UnknownId(id.to_string()))?;
        cluster_of[i] = c;
    }
    if let Some(i) = cluster_of.iter().position(|&c| c == usize::MAX) {
        return Err(Error::UnknownId(format!("record {} has no cluster", dataset.records()[i].id)));
    }
    ClusterAssignment::new(cluster_of)
}

pub fn write_quadruplets_csv(path: impl AsRef<Path>, dataset: &EmbeddingDataset, quads: &[Quadruplet]) -> Result<()> {
    let id = |i: usize| dataset.records()[i].id.as_str();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["anchor", "positive", "intermediate", "negative"])?;
    for q in quads {
        w.write_record([id(q.anchor), id(q.positive), id(q.intermediate), id(q.negative)])?;
    }
    w.flush()?;
    Ok(())
}

/// `model,set,label,threshold,recall,precision` rows, appended for each `(model, set, metrics)`.
pub fn write_pr_csv(path: impl AsRef<Path>, sets: &[(&str, &str, &SetMetrics)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["model", "set", "label", "threshold", "recall", "precision"])?;
    for (model, set, m) in sets {
        for curve in &m.curves {
            for p in &curve.points {
                w.write_record([
                    model.to_string(),
                    set.to_string(),
                    curve.label.to_string(),
                    p.threshold.to_string(),
                    p.recall.to_string(),
                    p.precision.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// `space,id,label,set,pc1,pc2,...` rows.
pub fn write_pca_csv(
    path: impl AsRef<Path>,
    dataset: &EmbeddingDataset,
    spaces: &[(&str, &[usize], &[&str], &crate::linalg::Matrix<f64>)],
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let k = spaces.first().map(|s| s.3.cols()).unwrap_or(0);
    let mut header = vec!["space".to_string(), "id".into(), "label".into(), "set".into()];
    header.extend((1..=k).map(|c| format!("pc{c}")));
    w.write_record(&header)?;
    for (space, indices, sets, coords) in spaces {
        for (row, (&i, set)) in indices.iter().zip(sets.iter()).enumerate() {
            let rec = &dataset.records()[i];
            let mut fields = vec![space.to_string(), rec.id.clone(), rec.label.to_string(), set.to_string()];
            fields.extend(coords.row(row).iter().map(f64::to_string));
            w.write_record(&fields)?;
        }
    }
    w.flush()?;
    Ok(())
}
