//! Shared error type for the geometric pipeline.

use crate::jets::JetError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeomError {
    #[error(transparent)]
    Jet(#[from] JetError),

    #[error("singular linear system while {context} (pivot magnitude {pivot:.3e})")]
    Singular { context: &'static str, pivot: f64 },

    #[error("radical of the induced metric has rank {found}, expected {expected}")]
    RadicalRank { found: usize, expected: usize },

    #[error(
        "degenerate inner product during orthonormalization at step {step} \
         (|<v,v>| = {mag:.3e})"
    )]
    DegeneratePivot { step: usize, mag: f64 },

    #[error("screen transversal is degenerate (|<W,W>| = {mag:.3e})")]
    DegenerateTransversal { mag: f64 },

    #[error("screen override vector {index} is not tangent (residual {residual:.3e})")]
    OverrideNotTangent { index: usize, residual: f64 },

    #[error("screen override must supply {expected} vectors, got {got}")]
    OverrideCount { expected: usize, got: usize },

    #[error("dimension mismatch: {context} (got {got}, expected {expected})")]
    Dimension { context: &'static str, got: usize, expected: usize },

    #[error("normal section <L,L> = {value:.3e} is not positive at the sample point")]
    NullNormalSection { value: f64 },

    #[error("{0}")]
    Unsupported(String),
}
