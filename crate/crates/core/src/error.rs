use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty dataset")]
    EmptyDataset,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("record `{id}`: vector has length {found}, expected {expected}")]
    DimensionMismatch { id: String, expected: usize, found: usize },
    #[error("record `{id}`: non-finite value at coordinate {index}")]
    NonFinite { id: String, index: usize },
    #[error("duplicate record id `{0}`")]
    DuplicateId(String),
    #[error("record `{id}`: label {label} is not in the declared label set")]
    UnknownLabel { id: String, label: i32 },
    #[error("dataset declares {0} labels; at least 2 are required")]
    TooFewLabels(usize),
    #[error("bad binary header: {0}")]
    BadHeader(String),
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("vector {0} has zero norm; cosine similarity is undefined")]
    ZeroVector(usize),
    #[error("column {0} has no transition mass after clamping")]
    EmptyColumn(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("group `{group}` has no sample with label {label}")]
    MissingLabel { group: &'static str, label: i32 },
    #[error("no quadruplets could be mined ({anchors} anchors considered)")]
    NothingMined { anchors: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite value: {0}")]
    NonFiniteValue(String),
    #[error("unknown id `{0}`")]
    UnknownId(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
