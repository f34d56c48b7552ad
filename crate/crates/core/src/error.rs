use alloc::string::String;

/// Errors produced by the geometry core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("function `{name}` takes {expected} argument(s), got {got}")]
    Arity { name: String, expected: usize, got: usize },
    #[error("domain error in `{subexpr}`: {reason}")]
    Domain { subexpr: String, reason: String },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("input is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("outside the Siegel domain (margin {0:e})")]
    OutsideSiegel(f64),
    #[error("not a compatible complex structure: {0}")]
    NotCompatible(String),
    #[error("wrong signature: {0}")]
    Signature(String),
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("connection is not symplectic: {0}")]
    NotSymplectic(String),
    #[error("connection has torsion: {0}")]
    Torsion(String),
    #[error("not admissible: {0}")]
    NotAdmissible(String),
    #[error("point outside domain: {0}")]
    OutsideDomain(String),
    #[error("not flat: {0}")]
    NotFlat(String),
    #[error("not horizontal: {0}")]
    NotHorizontal(String),
    #[error("basis is not orthonormal (defect {0:e})")]
    NotOrthonormal(f64),
    #[error("chart unavailable: {0}")]
    ChartUnavailable(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T> = core::result::Result<T, Error>;
