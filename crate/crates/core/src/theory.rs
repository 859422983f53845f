//! Closed-form predictions: cycle decompositions, circulant determinants,
//! Bhattacharyya coefficients between matchings, and the achievability and
//! converse bounds that locate the phase transition.
//!
//! All thresholds compare mutual information against multiples of `ln n`.
//! The regime predicates return margins in nats plus a verdict rather than a
//! bare boolean: the underlying results are asymptotic, so callers get the
//! distance to the threshold and decide how to interpret near-boundary cells.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use nalgebra::DMatrix;
// Float supplies ln/sqrt/abs and friends in no_std builds; the std inherent
// methods shadow it when tests compile with std.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::measures::{mutual_information, CorrelationSummary};
use crate::model::{CanonicalModel, Matching};

/// Cycle-length histogram of the permutation relating two bijective
/// matchings: `counts[ell]` is the number of cycles of length `ell`.
///
/// Invariants: `sum ell * counts[ell] = n` and `counts[1]` is the number of
/// pairs the two matchings agree on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleType {
    counts: BTreeMap<usize, usize>,
}

impl CycleType {
    /// Builds a histogram from `(length, count)` entries. Zero-length cycles
    /// are rejected; zero counts are dropped; duplicate lengths accumulate.
    pub fn new(entries: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut counts = BTreeMap::new();
        for (ell, k) in entries {
            if ell == 0 {
                return Err(Error::InvalidParameter("cycle length must be at least 1"));
            }
            if k > 0 {
                *counts.entry(ell).or_insert(0) += k;
            }
        }
        Ok(Self { counts })
    }

    /// The cycle type of the identity permutation on `n` elements.
    pub fn identity(n: usize) -> Self {
        let mut counts = BTreeMap::new();
        if n > 0 {
            counts.insert(1, n);
        }
        Self { counts }
    }

    pub fn counts(&self) -> &BTreeMap<usize, usize> {
        &self.counts
    }

    /// Number of permuted elements, `sum ell * counts[ell]`.
    pub fn n(&self) -> usize {
        self.counts.iter().map(|(ell, k)| ell * k).sum()
    }

    /// `counts[1]`: the number of pairs on which the two matchings agree.
    pub fn fixed_points(&self) -> usize {
        self.counts.get(&1).copied().unwrap_or(0)
    }
}

/// Which side of a threshold a configuration falls on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Verdict {
    Achievable,
    Converse,
    Gap,
}

/// A regime comparison: the dimensionless ratio `I / ln n`, the verdict, and
/// the signed distance to the relevant threshold in nats.
///
/// `quantity` is meaningful for `n >= 2`; at `n = 1` the ratio degenerates
/// to a division by zero and follows IEEE semantics.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RegimeVerdict {
    pub quantity: f64,
    pub verdict: Verdict,
    pub margin: f64,
}

/// Exact-alignment achievability: the verdict plus, when it converges, a
/// geometric-series bound on the misalignment probability.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MapAchievability {
    pub regime: RegimeVerdict,
    /// `x / (1 - x)` with `x = n * exp(-I/2)`, an upper bound on the
    /// probability of any misalignment, reported only when `x < 1`.
    pub failure_probability_bound: Option<f64>,
}

/// Exact-alignment converse: the verdict plus a reminder that the underlying
/// result is asymptotic in the feature dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MapConverse {
    pub regime: RegimeVerdict,
    /// Always true: the converse holds in the limit of growing dimension, so
    /// at fixed d the verdict is an indicator, not a certainty.
    pub asymptotic_in_dimension: bool,
}

/// The admissible threshold interval for partial alignment, or the gap by
/// which the two requirements fail to meet.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(tag = "status", rename_all = "snake_case"))]
pub enum ThresholdWindow {
    Feasible { lower: f64, upper: f64, midpoint: f64 },
    Infeasible { gap: f64 },
}

impl ThresholdWindow {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Self::Feasible { .. })
    }

    pub fn midpoint(&self) -> Option<f64> {
        match self {
            Self::Feasible { midpoint, .. } => Some(*midpoint),
            Self::Infeasible { .. } => None,
        }
    }
}

/// Cycle-length histogram of the permutation `m1` composed with the inverse
/// of `m2`. Both matchings must be bijective over the same identifier sets.
pub fn cycle_type(m1: &Matching, m2: &Matching) -> Result<CycleType> {
    if !m1.is_bijective() || !m2.is_bijective() {
        return Err(Error::InvalidParameter("cycle type needs two bijective matchings"));
    }
    if m1.len() != m2.len() {
        return Err(Error::IdentifierMismatch(alloc::format!(
            "matchings cover {} and {} pairs",
            m1.len(),
            m2.len()
        )));
    }

    // BTreeSet iteration orders pairs by u, so both maps index the same
    // sorted list of left identifiers.
    let forward: Vec<(&str, &str)> =
        m1.pairs().iter().map(|(u, v)| (u.as_str(), v.as_str())).collect();
    let mut v_to_index: BTreeMap<&str, usize> = BTreeMap::new();
    for (index, (u, v)) in m2.pairs().iter().enumerate() {
        if forward.get(index).map(|(fu, _)| *fu) != Some(u.as_str()) {
            return Err(Error::IdentifierMismatch(alloc::format!(
                "left identifier {u:?} is not shared by both matchings"
            )));
        }
        v_to_index.insert(v.as_str(), index);
    }

    let mut successor = Vec::with_capacity(forward.len());
    for &(_, v) in &forward {
        let index = v_to_index.get(v).ok_or_else(|| {
            Error::IdentifierMismatch(alloc::format!(
                "right identifier {v:?} is not shared by both matchings"
            ))
        })?;
        successor.push(*index);
    }

    let mut visited = alloc::vec![false; successor.len()];
    let mut counts = BTreeMap::new();
    for start in 0..successor.len() {
        if visited[start] {
            continue;
        }
        let mut length = 0;
        let mut at = start;
        while !visited[at] {
            visited[at] = true;
            length += 1;
            at = successor[at];
        }
        *counts.entry(length).or_insert(0) += 1;
    }
    Ok(CycleType { counts })
}

/// The `ell x ell` matrix `s I - (t/2)(P + P^T)` where `P` is the cyclic
/// shift; for `ell = 1` the two shifts coincide with the identity, giving
/// the 1x1 matrix `[s - t]`.
pub fn shifted_laplacian_matrix(ell: usize, s: f64, t: f64) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(ell, ell);
    for i in 0..ell {
        m[(i, i)] += s;
        m[(i, (i + 1) % ell)] += -0.5 * t;
        m[(i, (i + ell - 1) % ell)] += -0.5 * t;
    }
    m
}

fn eigenvalue(j: usize, ell: usize, s: f64, t: f64) -> f64 {
    // cos(2 pi j / ell) is exactly -1 at the half turn and +1 at the full
    // turn; special-casing those keeps s +/- t exact.
    if j == ell {
        s - t
    } else if 2 * j == ell {
        s + t
    } else {
        s - t * (core::f64::consts::TAU * j as f64 / ell as f64).cos()
    }
}

/// Determinant of [`shifted_laplacian_matrix`] via its eigenvalue product
/// `prod_{j in 1..=ell} (s - t cos(2 pi j / ell))`.
///
/// For `s > |t|` (all eigenvalues positive) the product is evaluated in log
/// space so long cycles cannot underflow; otherwise it is formed directly
/// and may be zero or negative.
pub fn shifted_laplacian_det(ell: usize, s: f64, t: f64) -> f64 {
    match ell {
        0 => 1.0,
        1 => s - t,
        2 => (s - t) * (s + t),
        _ => {
            if s > t.abs() {
                log_shifted_laplacian_det(ell, s, t)
                    .expect("s > |t| was just checked")
                    .exp()
            } else {
                (1..=ell).map(|j| eigenvalue(j, ell, s, t)).product()
            }
        }
    }
}

/// `ln det` of the shifted Laplacian, defined only when `s > |t|` so that
/// every eigenvalue is positive.
pub fn log_shifted_laplacian_det(ell: usize, s: f64, t: f64) -> Option<f64> {
    if !(s > t.abs()) {
        return None;
    }
    Some((1..=ell).map(|j| eigenvalue(j, ell, s, t).ln()).sum())
}

/// Per-cycle log determinant at `s = (1 + u)/2`, `t = (1 - u)/2` where
/// `u = 1 - rho^2`. Here `s - t = u` and `s + t = 1` hold exactly, so the
/// corresponding eigenvalues reuse `ln u` and 0; this makes the coefficient
/// between a matching and itself come out as exactly 1.
fn log_det_for_cycle(ell: usize, ln_u: f64, s: f64, t: f64) -> f64 {
    let mut acc = 0.0;
    for j in 1..=ell {
        acc += if j == ell {
            ln_u
        } else if 2 * j == ell {
            0.0
        } else {
            (s - t * (core::f64::consts::TAU * j as f64 / ell as f64).cos()).ln()
        };
    }
    acc
}

/// `ln R(m1, m2)`: per coordinate,
/// `(n/2) ln(1 - rho^2) - sum_ell (k_ell / 2) ln det L^ell((1+u)/2, (1-u)/2)`
/// with `u = 1 - rho^2`, summed over coordinates.
pub fn log_bhattacharyya_r(cycles: &CycleType, model: &CanonicalModel) -> f64 {
    let half_n = cycles.n() as f64 / 2.0;
    let mut total = 0.0;
    for &rho in model.rho() {
        let u = (1.0 - rho) * (1.0 + rho);
        let ln_u = u.ln();
        let s = 0.5 * (1.0 + u);
        let t = 0.5 * (1.0 - u);
        let mut coordinate = half_n * ln_u;
        for (&ell, &count) in &cycles.counts {
            coordinate -= (count as f64 / 2.0) * log_det_for_cycle(ell, ln_u, s, t);
        }
        total += coordinate;
    }
    total
}

/// The overlap coefficient `R(m1, m2)` between the observation distributions
/// induced by two matchings, in `(0, 1]` with 1 exactly when the cycle type
/// is all fixed points (the matchings coincide).
pub fn bhattacharyya_r(cycles: &CycleType, model: &CanonicalModel) -> f64 {
    log_bhattacharyya_r(cycles, model).exp()
}

/// Exact-alignment achievability: margin `I - 2 ln n`, achievable when
/// positive. The attached failure bound sums the union bound
/// `sum_{k >= 1} (n e^{-I/2})^k` in closed form when the ratio is below 1.
pub fn map_achievability_margin(model: &CanonicalModel, n: usize) -> MapAchievability {
    let i_xy = mutual_information(model);
    let ln_n = (n as f64).ln();
    let margin = i_xy - 2.0 * ln_n;
    let verdict = if margin > 0.0 { Verdict::Achievable } else { Verdict::Gap };
    let x = n as f64 * (-0.5 * i_xy).exp();
    let failure_probability_bound = if x < 1.0 { Some(x / (1.0 - x)) } else { None };
    MapAchievability {
        regime: RegimeVerdict { quantity: i_xy / ln_n, verdict, margin },
        failure_probability_bound,
    }
}

/// Exact-alignment converse for a constant-correlation model: margin
/// `2 ln n - I`, in the converse regime when positive. The boundary
/// `I = 2 ln n` is reported as a gap.
pub fn map_converse_predicate(rho_const: f64, d: usize, n: usize) -> Result<MapConverse> {
    let model = CanonicalModel::constant(rho_const, d)?;
    let i_xy = mutual_information(&model);
    let ln_n = (n as f64).ln();
    let margin = 2.0 * ln_n - i_xy;
    let verdict = if margin > 0.0 { Verdict::Converse } else { Verdict::Gap };
    Ok(MapConverse {
        regime: RegimeVerdict { quantity: i_xy / ln_n, verdict, margin },
        asymptotic_in_dimension: true,
    })
}

/// Threshold window for partial alignment with expected false-positive and
/// false-negative budgets: feasible when
/// `ln(n^2 / eps_fp) <= I - sigma sqrt(n / eps_fn)`.
pub fn bht_threshold_window(
    summary: CorrelationSummary,
    n: usize,
    eps_fn: f64,
    eps_fp: f64,
) -> Result<ThresholdWindow> {
    if n == 0 {
        return Err(Error::InvalidParameter("threshold window needs at least one user"));
    }
    if !(eps_fn > 0.0 && eps_fn.is_finite()) || !(eps_fp > 0.0 && eps_fp.is_finite()) {
        return Err(Error::InvalidParameter("error budgets must be positive and finite"));
    }
    if !summary.mutual_information.is_finite() || !summary.sigma.is_finite() {
        return Err(Error::NonFiniteInput("correlation summary must be finite"));
    }
    let n = n as f64;
    let lower = (n * n / eps_fp).ln();
    let upper = summary.mutual_information - summary.sigma * (n / eps_fn).sqrt();
    if lower <= upper {
        Ok(ThresholdWindow::Feasible { lower, upper, midpoint: 0.5 * (lower + upper) })
    } else {
        Ok(ThresholdWindow::Infeasible { gap: lower - upper })
    }
}

/// Lower bound `max(0, (n/2)(ln n - I)/(2 ln n + 1))` on the total expected
/// false negatives plus false positives of any thresholding test. Vacuous
/// (zero) once `I >= ln n`, and for `n < 2`.
pub fn bht_converse_bound(mutual_information: f64, n: usize) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let n = n as f64;
    let ln_n = n.ln();
    let bound = (n / 2.0) * (ln_n - mutual_information) / (2.0 * ln_n + 1.0);
    bound.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{sigma, summary};
    use approx::assert_abs_diff_eq;

    fn matching(pairs: &[(&str, &str)]) -> Matching {
        Matching::bijective(pairs.iter().map(|&(u, v)| (u.into(), v.into()))).unwrap()
    }

    fn ids(n: usize) -> Vec<(alloc::string::String, alloc::string::String)> {
        (1..=n).map(|i| (alloc::format!("u{i}"), alloc::format!("v{i}"))).collect()
    }

    #[test]
    fn cycle_type_of_equal_matchings_is_all_fixed_points() {
        let m = Matching::bijective(ids(5)).unwrap();
        let cycles = cycle_type(&m, &m).unwrap();
        assert_eq!(cycles, CycleType::identity(5));
        assert_eq!(cycles.n(), 5);
        assert_eq!(cycles.fixed_points(), 5);
    }

    #[test]
    fn cycle_type_of_a_transposition() {
        let m1 = matching(&[("u1", "v1"), ("u2", "v2"), ("u3", "v3"), ("u4", "v4")]);
        let m2 = matching(&[("u1", "v2"), ("u2", "v1"), ("u3", "v3"), ("u4", "v4")]);
        let cycles = cycle_type(&m1, &m2).unwrap();
        assert_eq!(cycles.counts(), CycleType::new([(1, 2), (2, 1)]).unwrap().counts());
        assert_eq!(cycles.fixed_points(), 2);
        assert_eq!(cycles.n(), 4);
    }

    #[test]
    fn cycle_type_matches_union_find_oracle() {
        // Permutations of 6 elements with distinct cycle structures.
        let perms: [[usize; 6]; 4] = [
            [1, 2, 0, 4, 3, 5],
            [5, 4, 3, 2, 1, 0],
            [1, 2, 3, 4, 5, 0],
            [0, 1, 2, 3, 4, 5],
        ];
        for perm in perms {
            let m1 = Matching::bijective(ids(6)).unwrap();
            let m2 = Matching::bijective(
                perm.iter()
                    .enumerate()
                    .map(|(i, &j)| (alloc::format!("u{}", i + 1), alloc::format!("v{}", j + 1))),
            )
            .unwrap();
            let cycles = cycle_type(&m1, &m2).unwrap();

            // Union-find over indices as an independent decomposition.
            let mut parent: Vec<usize> = (0..6).collect();
            fn root(parent: &mut Vec<usize>, mut i: usize) -> usize {
                while parent[i] != i {
                    parent[i] = parent[parent[i]];
                    i = parent[i];
                }
                i
            }
            for (i, &j) in perm.iter().enumerate() {
                let (a, b) = (root(&mut parent, i), root(&mut parent, j));
                parent[a] = b;
            }
            let mut sizes: BTreeMap<usize, usize> = BTreeMap::new();
            for i in 0..6 {
                let r = root(&mut parent, i);
                *sizes.entry(r).or_insert(0) += 1;
            }
            let mut histogram: BTreeMap<usize, usize> = BTreeMap::new();
            for (_, size) in sizes {
                *histogram.entry(size).or_insert(0) += 1;
            }
            assert_eq!(cycles.counts(), &histogram, "permutation {perm:?}");
        }
    }

    #[test]
    fn cycle_type_is_symmetric_in_its_arguments() {
        let m1 = matching(&[("u1", "v2"), ("u2", "v3"), ("u3", "v1"), ("u4", "v4")]);
        let m2 = matching(&[("u1", "v1"), ("u2", "v2"), ("u3", "v4"), ("u4", "v3")]);
        assert_eq!(cycle_type(&m1, &m2).unwrap(), cycle_type(&m2, &m1).unwrap());
    }

    #[test]
    fn cycle_type_rejects_mismatched_identifier_sets() {
        let m1 = matching(&[("u1", "v1")]);
        let m2 = matching(&[("u1", "w1")]);
        assert!(matches!(cycle_type(&m1, &m2), Err(Error::IdentifierMismatch(_))));
        let partial = Matching::partial([("u1".into(), "v1".into())]);
        assert!(matches!(cycle_type(&m1, &partial), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn laplacian_determinant_small_cases() {
        assert_eq!(shifted_laplacian_det(1, 1.3, 0.4), 1.3 - 0.4);
        assert_eq!(shifted_laplacian_det(2, 1.3, 0.4), (1.3 - 0.4) * (1.3 + 0.4));
        assert_abs_diff_eq!(shifted_laplacian_det(3, 1.0, 0.5), 0.78125, epsilon = 1e-14);
    }

    #[test]
    fn laplacian_determinant_matches_dense_lu() {
        // Deterministic pseudo-random (s, t) pairs spanning s > |t| and
        // s <= |t|, checked against nalgebra's LU determinant.
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for ell in 1..=64 {
            for _ in 0..4 {
                let s = 0.1 + 2.0 * next();
                let t = 2.4 * next() - 1.2;
                let fast = shifted_laplacian_det(ell, s, t);
                let dense = shifted_laplacian_matrix(ell, s, t).lu().determinant();
                let scale = fast.abs().max(dense.abs()).max(1e-12);
                assert!(
                    (fast - dense).abs() <= 1e-9 * scale,
                    "ell={ell} s={s} t={t}: {fast} vs {dense}"
                );
            }
        }
    }

    #[test]
    fn laplacian_log_determinant_requires_dominant_diagonal() {
        assert_eq!(log_shifted_laplacian_det(3, 0.5, 0.5), None);
        assert_eq!(log_shifted_laplacian_det(3, 0.5, 0.8), None);
        let value = log_shifted_laplacian_det(3, 1.0, 0.5).unwrap();
        assert_abs_diff_eq!(value.exp(), 0.78125, epsilon = 1e-14);
    }

    #[test]
    fn cycle_determinants_stay_above_the_power_lower_bound() {
        // det L^ell(s, t) >= (s^2 - t^2)^{ell/2} for s > |t|.
        let pairs = [(1.0, 0.5), (0.9, 0.1), (2.0, 1.9), (1.5, -1.2)];
        for (s, t) in pairs {
            for ell in 2..=32 {
                let det = shifted_laplacian_det(ell, s, t);
                let bound = ((s - t) * (s + t)).powf(ell as f64 / 2.0);
                assert!(det >= bound * (1.0 - 1e-12), "ell={ell} s={s} t={t}");
            }
        }
    }

    #[test]
    fn overlap_of_a_matching_with_itself_is_exactly_one() {
        for n in [1usize, 2, 7, 40] {
            for rho in [[0.3].as_slice(), &[0.9, 0.5], &[0.99, 0.2, 0.0001]] {
                let model = CanonicalModel::new(rho.to_vec()).unwrap();
                assert_eq!(bhattacharyya_r(&CycleType::identity(n), &model), 1.0);
            }
        }
    }

    #[test]
    fn overlap_across_a_transposition_is_root_one_minus_rho_squared() {
        for n in [2usize, 5, 9] {
            let cycles = CycleType::new([(1, n - 2), (2, 1)]).unwrap();
            let model = CanonicalModel::new(vec![0.6]).unwrap();
            assert_abs_diff_eq!(bhattacharyya_r(&cycles, &model), 0.8, epsilon = 1e-12);
        }
    }

    #[test]
    fn overlap_respects_the_per_coordinate_bound() {
        // R <= prod_i (1 - rho_i^2)^{(n - k_1)/4}.
        let cases = [
            CycleType::new([(2, 3)]).unwrap(),
            CycleType::new([(1, 4), (3, 2)]).unwrap(),
            CycleType::new([(5, 1), (7, 1)]).unwrap(),
            CycleType::new([(1, 1), (2, 1), (9, 3)]).unwrap(),
        ];
        for cycles in cases {
            for rho in [[0.5].as_slice(), &[0.9, 0.3], &[0.7, 0.7, 0.7]] {
                let model = CanonicalModel::new(rho.to_vec()).unwrap();
                let r = bhattacharyya_r(&cycles, &model);
                assert!(r > 0.0 && r <= 1.0);
                let exponent = (cycles.n() - cycles.fixed_points()) as f64 / 4.0;
                let bound: f64 = model
                    .rho()
                    .iter()
                    .map(|&rho| ((1.0 - rho) * (1.0 + rho)).powf(exponent))
                    .product();
                assert!(r <= bound * (1.0 + 1e-12), "{cycles:?} rho={rho:?}: {r} vs {bound}");
            }
        }
    }

    #[test]
    fn achievability_margin_frozen_values() {
        let empty = CanonicalModel::new(vec![]).unwrap();
        let verdict = map_achievability_margin(&empty, 2);
        assert_abs_diff_eq!(verdict.regime.margin, -2.0 * 2.0f64.ln(), epsilon = 1e-15);
        assert_eq!(verdict.regime.verdict, Verdict::Gap);
        assert_eq!(verdict.failure_probability_bound, None);

        let achievable = map_achievability_margin(&CanonicalModel::constant(0.5, 83).unwrap(), 100);
        assert_eq!(achievable.regime.verdict, Verdict::Achievable);
        assert_abs_diff_eq!(achievable.regime.margin, 2.728465634772723, epsilon = 1e-9);
        assert_abs_diff_eq!(
            achievable.failure_probability_bound.unwrap(),
            0.3433216909204141,
            epsilon = 1e-9
        );

        let below = map_achievability_margin(&CanonicalModel::constant(0.5, 38).unwrap(), 100);
        assert_eq!(below.regime.verdict, Verdict::Gap);
        assert_abs_diff_eq!(below.regime.margin, -3.744380995392347, epsilon = 1e-9);
        assert_eq!(below.failure_probability_bound, None);
    }

    #[test]
    fn converse_predicate_frozen_values() {
        let converse = map_converse_predicate(0.5, 38, 100).unwrap();
        assert_eq!(converse.regime.verdict, Verdict::Converse);
        assert_abs_diff_eq!(converse.regime.margin, 3.744380995392347, epsilon = 1e-9);
        assert!(converse.asymptotic_in_dimension);

        let outside = map_converse_predicate(0.5, 83, 100).unwrap();
        assert_eq!(outside.regime.verdict, Verdict::Gap);
        assert!(outside.regime.margin < 0.0);

        // Exact boundary: d = 0 and n = 1 give I = 2 ln n = 0.
        let boundary = map_converse_predicate(0.5, 0, 1).unwrap();
        assert_eq!(boundary.regime.margin, 0.0);
        assert_eq!(boundary.regime.verdict, Verdict::Gap);
    }

    #[test]
    fn threshold_window_degenerate_sigma() {
        let window = bht_threshold_window(
            CorrelationSummary { mutual_information: 3.0, sigma: 0.0 },
            10,
            1.0,
            100.0,
        )
        .unwrap();
        assert_eq!(
            window,
            ThresholdWindow::Feasible { lower: 0.0, upper: 3.0, midpoint: 1.5 }
        );
    }

    #[test]
    fn threshold_window_frozen_values() {
        let wide = summary(&CanonicalModel::constant(0.9, 200).unwrap());
        assert_abs_diff_eq!(wide.mutual_information, 166.0731206821651, epsilon = 1e-9);
        assert_abs_diff_eq!(wide.sigma, 12.727922061357855, epsilon = 1e-12);
        match bht_threshold_window(wide, 100, 1.0, 1.0).unwrap() {
            ThresholdWindow::Feasible { lower, upper, midpoint } => {
                assert_abs_diff_eq!(lower, 9.210340371976184, epsilon = 1e-12);
                assert_abs_diff_eq!(upper, 38.79390006858654, epsilon = 1e-9);
                assert_abs_diff_eq!(midpoint, 24.002120220281363, epsilon = 1e-9);
            }
            other => panic!("expected a feasible window, got {other:?}"),
        }

        let narrow = summary(&CanonicalModel::constant(0.9, 40).unwrap());
        match bht_threshold_window(narrow, 100, 1.0, 1.0).unwrap() {
            ThresholdWindow::Infeasible { gap } => {
                assert_abs_diff_eq!(gap, 32.91671411857399, epsilon = 1e-9);
            }
            other => panic!("expected an infeasible window, got {other:?}"),
        }
    }

    #[test]
    fn threshold_window_rejects_bad_budgets() {
        let s = CorrelationSummary { mutual_information: 1.0, sigma: 0.5 };
        assert!(bht_threshold_window(s, 0, 1.0, 1.0).is_err());
        assert!(bht_threshold_window(s, 10, 0.0, 1.0).is_err());
        assert!(bht_threshold_window(s, 10, 1.0, -2.0).is_err());
        assert!(bht_threshold_window(s, 10, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn converse_bound_frozen_values() {
        assert_eq!(bht_converse_bound(100.0f64.ln(), 100), 0.0);
        assert_eq!(bht_converse_bound(5.0, 100), 0.0);
        assert_abs_diff_eq!(bht_converse_bound(0.0, 100), 22.551501802171426, epsilon = 1e-12);
        assert_abs_diff_eq!(
            bht_converse_bound(10.0f64.ln(), 100),
            11.275750901085713,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            bht_converse_bound(0.5 * 200.0f64.ln(), 200),
            22.844202169388716,
            epsilon = 1e-12
        );
        assert_eq!(bht_converse_bound(0.0, 1), 0.0);
    }

    #[test]
    fn sigma_consistency_for_constant_models() {
        // sqrt(d) * rho, used throughout the frozen window values.
        let model = CanonicalModel::constant(0.9, 200).unwrap();
        assert_abs_diff_eq!(sigma(&model), 0.9 * 200.0f64.sqrt(), epsilon = 1e-12);
    }
}
