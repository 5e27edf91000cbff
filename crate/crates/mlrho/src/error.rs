use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("structural mismatch: {0}")]
    Structure(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("domain: {0}")]
    Domain(String),
    #[error("norm order {order} exceeds the supported maximum {max}")]
    NormOrder { order: usize, max: usize },
    #[error("geometry: {0}")]
    Geometry(String),
    #[error("run of length {requested} exceeds the wrap-around horizon; safe duration is {safe}")]
    Horizon { requested: f64, safe: f64 },
    #[error("step of size {dt} rejected: contraction factor {factor} >= 1 twice in a row")]
    StepRejected { dt: f64, factor: f64 },
    #[error("Picard iteration did not converge in {iterations} iterations (last difference {last})")]
    Convergence { iterations: usize, last: f64 },
    #[error("step size fell below dt_min = {dt_min} at t = {t}")]
    StepUnderflow { dt_min: f64, t: f64 },
    #[error("root bracket not found: {0}")]
    Bracket(String),
    #[error("non-finite value in state")]
    NonFinite,
    #[error("format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "E_GRID",
            Error::Structure(_) => "E_STRUCTURE",
            Error::Config(_) => "E_CONFIG",
            Error::Domain(_) => "E_DOMAIN",
            Error::NormOrder { .. } => "E_NORM_ORDER",
            Error::Geometry(_) => "E_GEOMETRY",
            Error::Horizon { .. } => "E_HORIZON",
            Error::StepRejected { .. } => "E_STEP_REJECTED",
            Error::Convergence { .. } => "E_CONVERGENCE",
            Error::StepUnderflow { .. } => "E_DT_MIN",
            Error::Bracket(_) => "E_BRACKET",
            Error::NonFinite => "E_NONFINITE",
            Error::Format(_) => "E_FORMAT",
            Error::Io(_) => "E_IO",
        }
    }
}
