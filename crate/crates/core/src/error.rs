//! Crate-wide error type for geometric and numerical operations.

use alloc::string::String;
use alloc::vec::Vec;
use thiserror::Error;

use crate::expr;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Chart construction rejected (empty, unordered bounds, infinite period, ...).
    #[error("invalid chart: {0}")]
    InvalidChart(String),

    /// A queried base point lies outside the chart domain.
    #[error("point {point:?} outside chart domain (coordinate `{name}` not in ({lo}, {hi}))")]
    OutOfDomain {
        point: Vec<f64>,
        name: String,
        lo: f64,
        hi: f64,
    },

    /// An evaluated metric failed the symmetry tolerance.
    #[error("metric not symmetric at {point:?}: |g[{i}][{j}] - g[{j}][{i}]| = {defect:e}")]
    NotSymmetric {
        point: Vec<f64>,
        i: usize,
        j: usize,
        defect: f64,
    },

    /// Cholesky factorization failed; the matrix is not positive definite.
    #[error("matrix not positive definite at {point:?} (smallest pivot {pivot:e})")]
    NotPositiveDefinite { point: Vec<f64>, pivot: f64 },

    /// A matrix that must be invertible is numerically singular.
    #[error("singular matrix in {context} at {point:?}")]
    Singular { context: String, point: Vec<f64> },

    /// An embedding Jacobian lost full column rank.
    #[error("embedding Jacobian rank-deficient at {point:?} (sigma_min/sigma_max = {ratio:e})")]
    RankDeficient { point: Vec<f64>, ratio: f64 },

    /// Expression parsing failed.
    #[error(transparent)]
    Parse(#[from] expr::ParseError),

    /// Expression evaluation hit a domain error.
    #[error(transparent)]
    Eval(#[from] expr::EvalError),

    /// Gradients of quadratic integrals vanish near `p = 0`; rank is not reported there.
    #[error("degenerate phase point: |p| = {p_norm:e} is too small for rank analysis")]
    DegeneratePhasePoint { p_norm: f64 },

    /// A zero vector was passed where a direction is required.
    #[error("zero vector passed to {0}")]
    ZeroVector(String),

    /// Invalid numeric parameter (non-positive step, bad grid size, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The eigensolver did not converge.
    #[error("symmetric eigensolver failed to converge after {0} sweeps")]
    EigenFailure(usize),
}
