use thiserror::Error;

/// Errors raised by the numerical routines and the experiment runner.
#[derive(Debug, Error)]
pub enum Error {
    /// A point left the product of generalised upper half planes.
    #[error("component {component} is outside the tube: det Im = {det_im:e}")]
    OutsideTube { component: usize, det_im: f64 },

    /// A stencil or difference probe stepped outside the domain of the field.
    #[error("probe left the domain: {0}")]
    ProbeExitedDomain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("optimizer did not converge: {0}")]
    NotConverged(String),

    #[error("unknown suite `{0}`")]
    UnknownSuite(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors that mean "the evaluation point is outside the domain",
    /// which sampling loops treat as a reason to resample.
    pub fn is_domain_exit(&self) -> bool {
        matches!(self, Error::OutsideTube { .. } | Error::ProbeExitedDomain(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
