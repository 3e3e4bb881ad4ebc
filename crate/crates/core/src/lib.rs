pub mod cluster;
pub mod embed;
pub mod error;
pub mod export;
pub mod linalg;
pub mod metrics;
pub mod miner;
pub mod pipeline;
pub mod remap;
pub mod scalar;
pub mod seed;

pub use error::{Error, Result};

/// Double-precision aliases for the generic core.
pub type Matrix = linalg::Matrix<f64>;
pub type RemapParams = remap::RemapParams<f64>;
pub type MarkovMatrix = cluster::MarkovMatrix<f64>;
pub type LinearHead = pipeline::LinearHead<f64>;
