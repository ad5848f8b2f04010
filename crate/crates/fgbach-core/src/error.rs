//! Error type shared by every module of the engine.

use alloc::string::String;
use thiserror::Error;

/// Failures surfaced by tensor algebra, jet arithmetic and the solvers.
#[derive(Debug, Clone, Error)]
pub enum CoreError {
    /// Two fields from different chart backends met in one operation.
    #[error("backend mismatch: {0}")]
    BackendMismatch(String),

    /// Operation applied to a field of the wrong rank.
    #[error("rank mismatch: {0}")]
    RankMismatch(String),

    /// A metric failed the pointwise positive-definiteness check.
    #[error("metric not positive definite at grid point {point}")]
    NotPositiveDefinite { point: usize },

    /// Exact division by a power of x hit a non-negligible low coefficient.
    #[error("inexact division by x^{power}: |coefficient at order {order}| = {norm:.3e} exceeds tol {tol:.3e}")]
    InexactDivision {
        power: i32,
        order: i32,
        norm: f64,
        tol: f64,
    },

    /// The homogeneous backend cannot represent the requested operation.
    #[error("unsupported on homogeneous backend: {0}")]
    UnsupportedHomogeneous(String),

    /// An iterative solve did not reach its tolerance.
    #[error("{op} failed to converge: residual {residual:.3e} after {iters} iterations")]
    ConvergenceFailure {
        op: &'static str,
        residual: f64,
        iters: usize,
    },

    /// The conformal-gauge equation became singular (e.g. vanishing boundary
    /// scalar curvature, or a trace multiplier below threshold).
    #[error("gauge singular: {0}")]
    GaugeSingular(String),

    /// A probe pair responded nonlinearly beyond tolerance.
    #[error("probe nonlinearity at order {order}: relative deviation {relative:.3e}")]
    ProbeNonlinear { order: usize, relative: f64 },

    /// An affine solve multiplier vanished where theory says it cannot.
    #[error("internal: vanishing solve multiplier at order {order} ({context})")]
    VanishingMultiplier { order: usize, context: String },

    /// Free data outside the supported regime (e.g. h'(0) != 0 for n >= 5).
    #[error("unsupported data: {0}")]
    UnsupportedData(String),

    /// A user-facing specification failed validation.
    #[error("invalid spec field `{field}`: {message}")]
    InvalidSpec { field: String, message: String },

    /// Jet arithmetic truncated a result to an empty coefficient window.
    #[error("jet window exhausted: result would span orders {lo}..{hi}")]
    WindowExhausted { lo: i32, hi: i32 },
}
