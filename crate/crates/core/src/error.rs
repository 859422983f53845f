//! Crate-wide error type.

use alloc::string::String;
use thiserror::Error;

/// Which block of a joint covariance failed a check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceBlock {
    SigmaA,
    SigmaB,
    /// The full `[[sigma_a, sigma_ab], [sigma_ab^T, sigma_b]]` matrix.
    Joint,
}

impl core::fmt::Display for CovarianceBlock {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            CovarianceBlock::SigmaA => "sigma_a",
            CovarianceBlock::SigmaB => "sigma_b",
            CovarianceBlock::Joint => "joint block",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("covariance block {0} is not positive definite")]
    NotPositiveDefinite(CovarianceBlock),

    #[error("covariance block {0} is asymmetric beyond tolerance")]
    AsymmetryBeyondTolerance(CovarianceBlock),

    /// A correlation at (or within tolerance of) 1: the likelihood ratio and
    /// the mutual information both diverge.
    #[error("correlation indistinguishable from 1; mutual information diverges")]
    PerfectCorrelation,

    /// A correlation outside (0, 1) that is not the perfect-correlation case.
    #[error("invalid correlation {value}; canonical correlations lie strictly in (0, 1)")]
    InvalidCorrelation { value: f64 },

    #[error("non-finite input: {0}")]
    NonFiniteInput(&'static str),

    #[error("non-finite score at row {row}, column {col}")]
    NonFiniteScore { row: usize, col: usize },

    #[error("instance size {n} exceeds the brute-force cap of {cap}")]
    InstanceTooLarge { n: usize, cap: usize },

    #[error("identifier mismatch: {0}")]
    IdentifierMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
