use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix shape mismatch: {0}")]
    Shape(String),
    #[error("cannot parse number {0:?}")]
    ParseNumber(String),
    #[error("vertex {vertex} out of range 1..={n}")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("word {word} is not a path: no edge {from} -> {to}")]
    InvalidWord { word: String, from: usize, to: usize },
    #[error("scope has no edges")]
    NoCycle,
    #[error("root finding failed: {0}")]
    NoRoot(String),
    #[error("antichain has a single word; the implicit exponent is undefined")]
    SingleWordAntichain,
    #[error("antichain has {phi} words, above the capacity cap of {cap}")]
    Capacity { phi: u64, cap: u64 },
    #[error("row {row} has ratio sum {sum} >= 1; children cannot be laid out on the line")]
    InfeasibleLayout { row: usize, sum: f64 },
    #[error("order r = {0} is not supported (need r >= 1)")]
    UnsupportedOrder(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid model config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
