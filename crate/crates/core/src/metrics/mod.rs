//! Cluster-tendency and similarity measurements.
//!
//! The Hopkins statistic here follows the "low = clustered" orientation:
//! tightly clustered data scores near 0 and uniformly scattered data near 0.5.

mod ari;
mod hopkins;
mod pairs;
mod separation;
mod text;

pub use ari::ari;
pub use hopkins::{default_probes, hopkins};
pub use pairs::{group_pair_sampler, PairMetric, PairSamplingReport, PairSamplingParams};
pub use separation::{centroid_cos_separation, delta_theta};
pub use text::{edit_distance, jaccard_tokens, levenshtein_similarity};
