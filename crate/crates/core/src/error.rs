use thiserror::Error;

use crate::scenario::Diagnostic;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Conditioning on a branch of (numerically) zero probability.
    #[error("impossible outcome: {0}")]
    ImpossibleOutcome(String),

    #[error("operator is not hermitian: {0}")]
    NotHermitian(String),

    #[error("operator is not positive semidefinite (smallest eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("density operator trace {0} differs from 1")]
    NotNormalized(f64),

    #[error("ket norm {0} differs from 1")]
    NotUnitNorm(f64),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("scenario failed validation: {}", render_diagnostics(.0))]
    Validation(Vec<Diagnostic>),

    #[error("branch count {count} exceeds cap {cap}")]
    BranchExplosion { count: u128, cap: u128 },

    #[error("empty ensemble: {0}")]
    EmptyEnsemble(String),

    #[error("hilbert space dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

fn render_diagnostics(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
