use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid frequency grid: {0}")]
    InvalidGrid(String),

    #[error("AR polynomial is numerically singular at nu = {nu} (condition number {condition:.3e})")]
    SingularAr { nu: f64, condition: f64 },

    #[error("transfer matrix is singular at nu = {nu}")]
    SingularTransfer { nu: f64 },

    #[error("model is unstable: largest AR root magnitude is {max_magnitude:.6}")]
    UnstableModel { max_magnitude: f64 },

    #[error("invalid panel: {0}")]
    InvalidPanel(String),

    #[error("panel too short: {n_samples} samples available, at least {required} required")]
    PanelTooShort { n_samples: usize, required: usize },

    #[error("degenerate panel: channel {channel} has zero variance")]
    DegeneratePanel { channel: usize },

    #[error("spectrum is not positive semidefinite at nu = {nu} (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveSemidefinite { nu: f64, min_eigenvalue: f64 },

    #[error("spectrum is singular at nu = {nu}")]
    SingularSpectrum { nu: f64 },

    #[error("Wilson factorization did not converge in {iterations} iterations (final residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("channel {channel} has zero power at nu = {nu}")]
    ZeroPower { channel: usize, nu: f64 },

    #[error("innovations covariance is singular or not positive definite")]
    SingularCovariance,

    #[error("regressor matrix is rank deficient (condition number {condition:.3e})")]
    RankDeficient { condition: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad arguments, malformed or inconsistent inputs.
    Config,
    /// The numerics failed on otherwise valid input.
    Numerical,
    /// Filesystem trouble.
    Io,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidModel(_)
            | Error::InvalidGrid(_)
            | Error::UnstableModel { .. }
            | Error::InvalidPanel(_)
            | Error::PanelTooShort { .. }
            | Error::ShapeMismatch(_)
            | Error::Parse { .. }
            | Error::Config(_)
            | Error::Json(_)
            | Error::Csv(_) => ErrorClass::Config,
            Error::Io(_) => ErrorClass::Io,
            _ => ErrorClass::Numerical,
        }
    }
}
