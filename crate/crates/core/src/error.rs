use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("field is not zero within the {margin}-cell boundary margin (max |value| {max_abs:.3e} there)")]
    SupportMargin { margin: usize, max_abs: f64 },

    #[error("sinogram has non-negligible values at p = ±pmax (max |value| {max_abs:.3e})")]
    BoundaryValues { max_abs: f64 },

    #[error("frequency {lambda} exceeds the p-grid Nyquist limit {nyquist}")]
    Aliasing { lambda: f64, nyquist: f64 },

    #[error("covector must be non-zero")]
    ZeroCovector,

    #[error("seed is not characteristic: |p0| = {value:.3e} exceeds {tol:.1e}")]
    NonCharacteristicSeed { value: f64, tol: f64 },

    #[error("profile depends on the line direction (spread {spread:.3e} > {tol:.1e}); inputs are not radial")]
    AngularDependence { spread: f64, tol: f64 },

    #[error("profile does not decay at the end of its grid (tail {tail:.3e})")]
    NonDecayingTail { tail: f64 },

    #[error("input must be non-zero")]
    ZeroInput,

    #[error("CGLS diverged at iteration {iteration}: residual rose from {previous:.6e} to {current:.6e}")]
    Divergence {
        iteration: usize,
        previous: f64,
        current: f64,
    },

    #[error("iteration did not converge: {0}")]
    NoConvergence(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("scenario schema: {0}")]
    Schema(String),

    #[error("{what} reaches {extent:.4} but the support margin allows {limit:.4}")]
    OutsideMargin { what: String, extent: f64, limit: f64 },

    #[error("numerical guard failed: {0}")]
    Guard(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
