use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("kernel is not positive semi-definite: smallest eigenvalue {min:.3e} vs largest {max:.3e}")]
    NotPsd { min: f64, max: f64 },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("not available: {0}")]
    NotAvailable(String),

    #[error("root isolation failed for k = {k}: {reason}")]
    RootIsolation { k: usize, reason: String },

    #[error("evaluation at a removable singularity without a limit path: zeta = {0}")]
    Singularity(num_complex::Complex64),

    #[error("floating-point range exceeded: {0}")]
    Range(String),

    #[error("product does not converge: {0}")]
    Divergence(String),

    #[error("quadrature did not reach the requested precision (achieved {achieved:.3e})")]
    Precision { achieved: f64 },

    #[error("eigensolver failure: {0}")]
    Eigensolver(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
