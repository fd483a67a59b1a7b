use std::fmt;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// A single rejected field in a sweep or CLI configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldError {
    pub field: String,
    pub reason: String,
}

impl FieldError {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.reason)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("regulator epsilon must be positive, got {0}")]
    InvalidRegulator(f64),

    #[error("acceleration must be positive for accelerated trajectories, got {0}")]
    InvalidAcceleration(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("extrapolation did not converge: residual {residual:e} above tolerance {tolerance:e}")]
    NonConvergence { residual: f64, tolerance: f64 },

    #[error("integration window too small: tail estimate {tail:e} above tolerance {tolerance:e}")]
    WindowTooSmall { tail: f64, tolerance: f64 },

    #[error("step too large: local error {error:e} exceeds tolerance {tolerance:e}")]
    StepTooLarge { error: f64, tolerance: f64 },

    #[error(
        "ambiguous Bloch branch: |omega| = {norm} is on the sphere but omega.d_omega = {overlap:e}"
    )]
    BranchAmbiguity { norm: f64, overlap: f64 },

    #[error("density matrix is not physical: eigenvalue {min_eigenvalue:e}")]
    NonPhysicalDensity { min_eigenvalue: f64 },

    #[error("finite-difference derivative unstable: {coarse} vs {fine} under step refinement")]
    DerivativeUnstable { coarse: f64, fine: f64 },

    #[error("closed form outside its domain: {0}")]
    FormulaDomainError(String),

    #[error("unknown figure `{0}`")]
    UnknownFigure(String),

    #[error("invalid configuration: {}", join_fields(.0))]
    ConfigInvalid(Vec<FieldError>),

    #[error("i/o error: {0}")]
    Io(String),
}

fn join_fields(fields: &[FieldError]) -> String {
    fields
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    /// Stable machine-readable tag, used in CSV/JSON error cells and CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidRegulator(_) => "InvalidRegulator",
            Error::InvalidAcceleration(_) => "InvalidAcceleration",
            Error::InvalidParameter { .. } => "InvalidParameter",
            Error::NonConvergence { .. } => "NonConvergence",
            Error::WindowTooSmall { .. } => "WindowTooSmall",
            Error::StepTooLarge { .. } => "StepTooLarge",
            Error::BranchAmbiguity { .. } => "BranchAmbiguity",
            Error::NonPhysicalDensity { .. } => "NonPhysicalDensity",
            Error::DerivativeUnstable { .. } => "DerivativeUnstable",
            Error::FormulaDomainError(_) => "FormulaDomainError",
            Error::UnknownFigure(_) => "UnknownFigure",
            Error::ConfigInvalid(_) => "ConfigInvalid",
            Error::Io(_) => "Io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn check_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be finite, got {value}"),
        })
    }
}
