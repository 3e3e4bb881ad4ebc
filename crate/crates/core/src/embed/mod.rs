//! Embedding datasets: the in-memory model, file formats, a planted-bias
//! generator and the in-distribution / out-of-distribution split.

mod dataset;
pub mod io;
mod split;
mod synth;

pub use dataset::{EmbeddingDataset, EmbeddingRecord};
pub use io::{read_binary, read_dataset, read_jsonl, write_binary, write_dataset, write_jsonl, Format};
pub use split::{split_id_ood, DatasetSplit, SplitFile};
pub use synth::{generate_synthetic, BlobSpec, SyntheticSpec};
