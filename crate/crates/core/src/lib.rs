//! Alignment of databases with jointly Gaussian features.
//!
//! Two databases hold one feature row per user. Matched rows are drawn from a
//! joint Gaussian distribution; unmatched rows are independent. The hidden
//! bijection between the two user sets is recovered either exactly, by
//! maximum-weight matching on per-pair log-likelihood-ratio scores
//! ([`align::map_align`]), or partially, by thresholding those scores
//! ([`align::bht_align`]).
//!
//! The crate is organized around a reduction: every valid joint-Gaussian model
//! is equivalent to a canonical one in which both marginals are standard and
//! the cross-covariance is `diag(rho)` ([`model::canonicalize`]). All scoring,
//! sampling, and closed-form analysis ([`measures`], [`synth`], [`theory`])
//! then work from the correlation vector `rho` alone.
//!
//! Everything here is pure computation over immutable inputs; the crate is
//! `no_std` (with `alloc`). File formats, CLI, and experiment orchestration
//! live in the companion `dbalign-cli` crate.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod align;
pub mod error;
pub mod measures;
pub mod model;
pub mod synth;
pub mod theory;

pub use error::{CovarianceBlock, Error, Result};

// Re-exported so downstream crates construct matrices with the same version.
pub use nalgebra;
