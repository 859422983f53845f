//! The two estimators: exact alignment by maximum-weight matching over
//! pairwise log-likelihood-ratio scores, and partial alignment by
//! thresholding individual scores. A brute-force reference implementation
//! and error scoring round out the module.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::time::Duration;

use nalgebra::DMatrix;
// Float supplies ln/sqrt/abs and friends in no_std builds; the std inherent
// methods shadow it when tests compile with std.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::measures::{CorrelationSummary, LlrCoefficients};
use crate::model::{CanonicalModel, DatabasePair, Matching};
use crate::synth::TrialSeed;
use crate::theory::{self, ThresholdWindow};

mod hungarian;

/// Exhaustive search refuses instances larger than this.
pub const BRUTE_FORCE_CAP: usize = 9;

/// Pairwise log-likelihood-ratio scores between the rows of the two sides.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    scores: DMatrix<f64>,
    row_ids: Vec<String>,
    col_ids: Vec<String>,
}

impl ScoreMatrix {
    /// Wraps precomputed scores. Entries must be finite and identifier lists
    /// must match the matrix shape, with no duplicates per side.
    pub fn new(scores: DMatrix<f64>, row_ids: Vec<String>, col_ids: Vec<String>) -> Result<Self> {
        if scores.nrows() != row_ids.len() || scores.ncols() != col_ids.len() {
            return Err(Error::DimensionMismatch(alloc::format!(
                "{}x{} scores with {} row and {} column identifiers",
                scores.nrows(),
                scores.ncols(),
                row_ids.len(),
                col_ids.len()
            )));
        }
        for ids in [&row_ids, &col_ids] {
            let distinct: BTreeSet<&str> = ids.iter().map(String::as_str).collect();
            if distinct.len() != ids.len() {
                return Err(Error::IdentifierMismatch("score identifiers are not unique".into()));
            }
        }
        for j in 0..scores.ncols() {
            for i in 0..scores.nrows() {
                if !scores[(i, j)].is_finite() {
                    return Err(Error::NonFiniteScore { row: i, col: j });
                }
            }
        }
        Ok(Self { scores, row_ids, col_ids })
    }

    pub fn scores(&self) -> &DMatrix<f64> {
        &self.scores
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn col_ids(&self) -> &[String] {
        &self.col_ids
    }

    pub fn is_square(&self) -> bool {
        self.scores.nrows() == self.scores.ncols()
    }

    fn require_square(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.scores.nrows())
        } else {
            Err(Error::DimensionMismatch(alloc::format!(
                "bijective alignment needs a square score matrix, got {}x{}",
                self.scores.nrows(),
                self.scores.ncols()
            )))
        }
    }
}

/// Everything one alignment run produced, ready for serialization.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct AlignmentReport {
    pub predicted: Matching,
    pub truth: Option<Matching>,
    pub false_negatives: Option<usize>,
    pub false_positives: Option<usize>,
    pub exact: Option<bool>,
    /// For bijective alignment the achieved matching weight; for threshold
    /// alignment the sum of the retained scores.
    pub total_score: f64,
    /// Threshold used, for threshold alignment only.
    pub threshold: Option<f64>,
    pub wall_time: Duration,
    pub seed: TrialSeed,
}

/// `scores[u][v] = log_likelihood_ratio(model, A_u, B_v)` for every pair,
/// O(n^2 d) arithmetic. Both sides must already be in canonical coordinates.
///
/// Entries are bit-identical to calling the scalar log-likelihood ratio on
/// the same rows: both paths share one coefficient evaluation.
pub fn score_matrix(databases: &DatabasePair, model: &CanonicalModel) -> Result<ScoreMatrix> {
    let d = model.dimension();
    if databases.a().ncols() != d || databases.b().ncols() != d {
        return Err(Error::DimensionMismatch(alloc::format!(
            "databases carry {} and {} feature columns, model has {d}",
            databases.a().ncols(),
            databases.b().ncols()
        )));
    }
    let n = databases.n();
    // Feature matrices are column-major; copy rows out once so the hot loop
    // walks contiguous memory.
    let rows_of = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
        (0..n).map(|i| m.row(i).iter().copied().collect()).collect()
    };
    let a_rows = rows_of(databases.a());
    let b_rows = rows_of(databases.b());
    let coefficients = LlrCoefficients::new(model);

    let mut scores = DMatrix::zeros(n, n);
    for u in 0..n {
        for v in 0..n {
            scores[(u, v)] = coefficients.evaluate(&a_rows[u], &b_rows[v]);
        }
    }
    ScoreMatrix::new(scores, databases.users_a().to_vec(), databases.users_b().to_vec())
}

/// Total weight of an assignment, summed in ascending row order. Shared by
/// the fast and the brute-force aligners so equal matchings report
/// bit-identical weights.
fn assignment_weight(scores: &DMatrix<f64>, assignment: &[usize]) -> f64 {
    assignment.iter().enumerate().map(|(i, &j)| scores[(i, j)]).sum()
}

fn matching_from_assignment(scores: &ScoreMatrix, assignment: &[usize]) -> Matching {
    Matching::bijective(
        assignment
            .iter()
            .enumerate()
            .map(|(i, &j)| (scores.row_ids()[i].clone(), scores.col_ids()[j].clone())),
    )
    .expect("an assignment over unique identifiers is a bijection")
}

/// The most likely bijective alignment: maximizes the summed scores over all
/// bijections, O(n^3). Returns the matching and its achieved weight.
///
/// With a uniform prior over matchings the per-pair marginal terms cancel,
/// so maximizing summed log-likelihood ratios is exactly the posterior
/// maximizer. Ties (within a 1e-9 relative reduced-cost tolerance) resolve
/// to the lexicographically smallest matching in (row, column) order.
pub fn map_align(scores: &ScoreMatrix) -> Result<(Matching, f64)> {
    scores.require_square()?;
    let assignment = hungarian::max_weight_assignment(scores.scores());
    let weight = assignment_weight(scores.scores(), &assignment);
    Ok((matching_from_assignment(scores, &assignment), weight))
}

/// Exhaustive maximum over all n! bijections, same tie-break contract as
/// [`map_align`]: permutations are visited in lexicographic order and
/// replaced only on strict improvement.
pub fn brute_force_align(scores: &ScoreMatrix) -> Result<(Matching, f64)> {
    let n = scores.require_square()?;
    if n > BRUTE_FORCE_CAP {
        return Err(Error::InstanceTooLarge { n, cap: BRUTE_FORCE_CAP });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = perm.clone();
    let mut best_weight = assignment_weight(scores.scores(), &perm);
    while next_permutation(&mut perm) {
        let weight = assignment_weight(scores.scores(), &perm);
        if weight > best_weight {
            best_weight = weight;
            best.copy_from_slice(&perm);
        }
    }
    Ok((matching_from_assignment(scores, &best), best_weight))
}

/// Advances `perm` to its lexicographic successor; false once `perm` is the
/// final (descending) permutation.
fn next_permutation(perm: &mut [usize]) -> bool {
    let len = perm.len();
    if len < 2 {
        return false;
    }
    let mut pivot = len - 1;
    while pivot > 0 && perm[pivot - 1] >= perm[pivot] {
        pivot -= 1;
    }
    if pivot == 0 {
        return false;
    }
    let mut swap = len - 1;
    while perm[swap] <= perm[pivot - 1] {
        swap -= 1;
    }
    perm.swap(pivot - 1, swap);
    perm[pivot..].reverse();
    true
}

/// Partial alignment: every pair whose score reaches the threshold, O(n^2).
/// The matrix need not be square. A NaN threshold retains nothing (no score
/// compares greater-or-equal to it).
pub fn bht_align(scores: &ScoreMatrix, tau: f64) -> Matching {
    let mut pairs = Vec::new();
    for u in 0..scores.scores().nrows() {
        for v in 0..scores.scores().ncols() {
            if scores.scores()[(u, v)] >= tau {
                pairs.push((scores.row_ids()[u].clone(), scores.col_ids()[v].clone()));
            }
        }
    }
    Matching::partial(pairs)
}

/// Threshold choice meeting expected false-negative and false-positive
/// budgets, when the admissible window is nonempty. Thin wrapper over
/// [`theory::bht_threshold_window`].
pub fn select_threshold(
    summary: CorrelationSummary,
    n: usize,
    eps_fn: f64,
    eps_fp: f64,
) -> Result<ThresholdWindow> {
    theory::bht_threshold_window(summary, n, eps_fn, eps_fp)
}

/// `(false_negatives, false_positives, exact)` of a prediction against a
/// bijective ground truth: pairs missed, pairs invented, and set equality.
pub fn score_alignment(predicted: &Matching, truth: &Matching) -> Result<(usize, usize, bool)> {
    if !truth.is_bijective() {
        return Err(Error::InvalidParameter("ground truth must be bijective"));
    }
    let truth_u: BTreeSet<&str> = truth.pairs().iter().map(|(u, _)| u.as_str()).collect();
    let truth_v: BTreeSet<&str> = truth.pairs().iter().map(|(_, v)| v.as_str()).collect();
    for (u, v) in predicted.pairs() {
        if !truth_u.contains(u.as_str()) || !truth_v.contains(v.as_str()) {
            return Err(Error::IdentifierMismatch(alloc::format!(
                "predicted pair ({u:?}, {v:?}) mentions identifiers outside the ground truth"
            )));
        }
    }
    let false_negatives = truth.pairs().difference(predicted.pairs()).count();
    let false_positives = predicted.pairs().difference(truth.pairs()).count();
    Ok((false_negatives, false_positives, predicted.pairs() == truth.pairs()))
}
