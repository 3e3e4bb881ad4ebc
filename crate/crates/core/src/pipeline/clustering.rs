use super::config::{ClusterConfig, ClusteringBackend};
use crate::cluster::{build_markov_matrix, kmeans, label_imbalance, mcl, ClusterAssignment, ClusterGrouping};
use crate::error::Result;
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Clusters the rows of `x` with the configured backend.
pub fn cluster_embeddings<T: Scalar>(x: &Matrix<T>, cfg: &ClusterConfig, seed: u64) -> Result<ClusterAssignment> {
    match cfg.backend {
        ClusteringBackend::Mcl => {
            let m = build_markov_matrix(x, cfg.sparsify_top_k, T::lit(cfg.self_loop))?;
            Ok(mcl(&m, &cfg.mcl)?.assignment)
        }
        ClusteringBackend::Kmeans => {
            let params = crate::cluster::KMeansParams { k: cfg.kmeans.k.min(x.rows()), ..cfg.kmeans };
            Ok(kmeans(x, &params, seed)?.assignment)
        }
    }
}

/// Clustering followed by imbalance labelling.
pub fn cluster_and_group<T: Scalar>(
    x: &Matrix<T>,
    labels: &[i32],
    cfg: &ClusterConfig,
    seed: u64,
) -> Result<(ClusterAssignment, ClusterGrouping)> {
    let assignment = cluster_embeddings(x, cfg, seed)?;
    let grouping = label_imbalance(&assignment, labels, cfg.tau, cfg.min_size)?;
    Ok((assignment, grouping))
}
