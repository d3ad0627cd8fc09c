use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid window: {0}")]
    InvalidWindow(String),
    #[error("invalid intensity model: {0}")]
    InvalidModel(String),
    #[error("density {value} at {at:?} lies outside [1/c_mu, c_mu] for c_mu = {c_mu}")]
    DensityOutOfBounds { value: f64, at: Vec<f64>, c_mu: f64 },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("point set is empty")]
    EmptyPointSet,
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("closed cluster reaches the field boundary (truncated cluster)")]
    TruncatedCluster,
    #[error("block {0:?} is not inside the window")]
    BlockOutsideWindow(Vec<i32>),
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("censored: {0}")]
    Censored(String),
    #[error("window is not aligned to the tile grid: {0}")]
    MisalignedWindow(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("too few usable estimates: {0}")]
    BelowResolution(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn is_censored(&self) -> bool {
        matches!(self, Error::Censored(_) | Error::TruncatedCluster)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
