//! Correlation measures and the per-pair log-likelihood ratio.
//!
//! Two scalars summarize how much an aligned pair of feature rows reveals:
//! the mutual information `I = -1/2 * sum ln(1 - rho_i^2)` and the standard
//! deviation `sigma = sqrt(sum rho_i^2)` of the log-likelihood ratio under
//! the joint distribution. Both are reported in nats; every threshold and
//! regime comparison in this crate is against natural-log quantities.

use alloc::vec::Vec;

use nalgebra::DMatrix;
// Float supplies ln/sqrt/abs and friends in no_std builds; the std inherent
// methods shadow it when tests compile with std.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{CovarianceBlock, Error, Result};
use crate::model::{validate_covariance, CanonicalModel, CorrelationModel};

/// Mutual information and log-likelihood-ratio standard deviation, in nats.
///
/// Invariants: both non-negative, and `sigma <= sqrt(2 * mutual_information)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationSummary {
    pub mutual_information: f64,
    pub sigma: f64,
}

/// Per-coordinate polynomial coefficients of the log-likelihood ratio,
/// hoisted out so the score matrix shares the exact evaluation path with
/// [`log_likelihood_ratio`] (entries come out bit-identical).
pub(crate) struct LlrCoefficients {
    /// `sum_i -1/2 ln(1 - rho_i^2)`, the value of the LLR at the origin.
    constant: f64,
    /// `rho_i^2 / (2 (1 - rho_i^2))`, multiplying `-(x_i^2 + y_i^2)`.
    quad: Vec<f64>,
    /// `rho_i / (1 - rho_i^2)`, multiplying `x_i * y_i`.
    cross: Vec<f64>,
}

impl LlrCoefficients {
    pub(crate) fn new(model: &CanonicalModel) -> Self {
        let mut constant = 0.0;
        let mut quad = Vec::with_capacity(model.dimension());
        let mut cross = Vec::with_capacity(model.dimension());
        for &rho in model.rho() {
            // 1 - rho^2 as (1 - rho)(1 + rho) keeps precision near rho = 1.
            let one_minus_sq = (1.0 - rho) * (1.0 + rho);
            constant += -0.5 * one_minus_sq.ln();
            quad.push(rho * rho / (2.0 * one_minus_sq));
            cross.push(rho / one_minus_sq);
        }
        Self { constant, quad, cross }
    }

    /// Unchecked evaluation; callers guarantee `x` and `y` have length `d`.
    pub(crate) fn evaluate(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut acc = self.constant;
        for k in 0..self.quad.len() {
            acc += self.cross[k] * x[k] * y[k] - self.quad[k] * (x[k] * x[k] + y[k] * y[k]);
        }
        acc
    }
}

/// `I = -1/2 * sum ln(1 - rho_i^2)` in nats; 0 for the empty model.
pub fn mutual_information(model: &CanonicalModel) -> f64 {
    model
        .rho()
        .iter()
        .map(|&rho| -0.5 * ((1.0 - rho) * (1.0 + rho)).ln())
        .sum()
}

/// `sigma = sqrt(sum rho_i^2)`, the standard deviation of the LLR under the
/// joint distribution.
pub fn sigma(model: &CanonicalModel) -> f64 {
    model.rho().iter().map(|&rho| rho * rho).sum::<f64>().sqrt()
}

pub fn summary(model: &CanonicalModel) -> CorrelationSummary {
    CorrelationSummary { mutual_information: mutual_information(model), sigma: sigma(model) }
}

fn log_det_cholesky(m: &DMatrix<f64>, block: CovarianceBlock) -> Result<f64> {
    let chol = m.clone().cholesky().ok_or(Error::NotPositiveDefinite(block))?;
    Ok(2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

/// Mutual information straight from the block covariance:
/// `-1/2 * ln[det Sigma / (det sigma_a * det sigma_b)]`.
///
/// Agrees with `mutual_information(canonicalize(model))` to within 1e-8 for
/// valid models. A joint block that is singular (only possible with a
/// perfectly correlated coordinate, given valid marginals) is an error.
pub fn mutual_information_general(model: &CorrelationModel) -> Result<f64> {
    validate_covariance(model)?;
    let log_det_a = log_det_cholesky(&model.sigma_a, CovarianceBlock::SigmaA)?;
    let log_det_b = log_det_cholesky(&model.sigma_b, CovarianceBlock::SigmaB)?;

    let (da, db) = model.dims();
    let mut joint = DMatrix::zeros(da + db, da + db);
    joint.view_mut((0, 0), (da, da)).copy_from(&model.sigma_a);
    joint.view_mut((0, da), (da, db)).copy_from(&model.sigma_ab);
    joint.view_mut((da, 0), (db, da)).copy_from(&model.sigma_ab.transpose());
    joint.view_mut((da, da), (db, db)).copy_from(&model.sigma_b);
    let log_det_joint = joint
        .cholesky()
        .ok_or(Error::PerfectCorrelation)?
        .l_dirty()
        .diagonal()
        .iter()
        .map(|d| 2.0 * d.ln())
        .sum::<f64>();

    Ok(-0.5 * (log_det_joint - log_det_a - log_det_b))
}

/// `sigma` straight from the block covariance:
/// `sqrt(tr(sigma_a^{-1} sigma_ab sigma_b^{-1} sigma_ab^T))`.
pub fn sigma_general(model: &CorrelationModel) -> Result<f64> {
    validate_covariance(model)?;
    let chol_a = model
        .sigma_a
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite(CovarianceBlock::SigmaA))?;
    let chol_b = model
        .sigma_b
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite(CovarianceBlock::SigmaB))?;
    let left = chol_a.solve(&model.sigma_ab); // sigma_a^{-1} sigma_ab
    let right = chol_b.solve(&model.sigma_ab.transpose()); // sigma_b^{-1} sigma_ab^T
    let mut trace = 0.0;
    for i in 0..left.nrows() {
        for j in 0..left.ncols() {
            trace += left[(i, j)] * right[(j, i)];
        }
    }
    Ok(trace.sqrt())
}

/// The per-pair statistic `ln p_XY(x, y) - ln p_X(x) - ln p_Y(y)` in
/// canonical coordinates:
///
/// `sum_i [ -1/2 ln(1 - rho_i^2) - (rho_i^2 (x_i^2 + y_i^2) - 2 rho_i x_i y_i) / (2 (1 - rho_i^2)) ]`
///
/// At the origin this equals the mutual information exactly.
pub fn log_likelihood_ratio(model: &CanonicalModel, x: &[f64], y: &[f64]) -> Result<f64> {
    let d = model.dimension();
    if x.len() != d || y.len() != d {
        return Err(Error::DimensionMismatch(alloc::format!(
            "feature rows have lengths {} and {}, expected {d}",
            x.len(),
            y.len()
        )));
    }
    if !x.iter().chain(y.iter()).all(|v| v.is_finite()) {
        return Err(Error::NonFiniteInput("feature rows must be finite"));
    }
    Ok(LlrCoefficients::new(model).evaluate(x, y))
}
