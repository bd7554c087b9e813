//! Error types shared across the crate.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes surfaced by configuration, numeric and simulation code.
///
/// Validation of a full [`crate::config::SystemConfig`] is reported through
/// [`crate::config::ValidationReport`] instead, which collects *all* violated
/// invariants; `Error` is for operations that cannot proceed at all.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A single field of a config or argument violates its documented constraint.
    #[error("invalid {field}: {constraint}")]
    InvalidInput { field: String, constraint: String },

    /// Two arguments that must agree in shape do not.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The requested point or problem has no feasible answer.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// Cyclic projection failed to reach the requested tolerance.
    #[error("projection did not converge: residual {residual:.3e} after {cycles} cycles")]
    ProjectionDiverged { residual: f64, cycles: usize },

    /// An argument fell outside the mathematical domain of the operation.
    #[error("out of domain: {0}")]
    OutOfDomain(String),

    /// The operation is not defined for the given model/distribution combination.
    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    /// Shorthand used throughout validation code paths.
    pub fn invalid(field: &str, constraint: impl Into<String>) -> Self {
        Error::InvalidInput {
            field: field.to_string(),
            constraint: constraint.into(),
        }
    }
}
