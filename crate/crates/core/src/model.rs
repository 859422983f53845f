//! The joint-Gaussian feature model, its validation, and the reduction to
//! canonical form.
//!
//! A general model consists of per-side means and a block covariance. The
//! canonical form keeps only what alignment needs: a vector `rho` of
//! per-coordinate correlations, reached by whitening each side (Cholesky) and
//! rotating onto the singular vectors of the whitened cross-covariance. The
//! two affine maps that perform this reduction are returned alongside `rho`
//! so raw feature rows can be moved into canonical coordinates.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
// Float supplies ln/sqrt/abs and friends in no_std builds; the std inherent
// methods shadow it when tests compile with std.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{CovarianceBlock, Error, Result};

/// Singular values at or below this are treated as zero and dropped; values
/// within this distance of 1 are treated as perfect correlation.
pub const DEFAULT_DROP_TOLERANCE: f64 = 1e-10;

/// Relative tolerance for the symmetry and positive-definiteness checks,
/// scaled by the largest entry magnitude of the block under test.
const VALIDATION_TOLERANCE: f64 = 1e-10;

/// A general joint-Gaussian feature model.
///
/// Matched feature rows `(x, y)` are jointly Gaussian with mean
/// `(mu_a, mu_b)` and covariance `[[sigma_a, sigma_ab], [sigma_ab^T,
/// sigma_b]]`. The marginal blocks must be symmetric positive definite and
/// the full block matrix positive semidefinite; [`validate_covariance`]
/// enforces this, and every consumer of a `CorrelationModel` validates first.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationModel {
    pub mu_a: DVector<f64>,
    pub mu_b: DVector<f64>,
    pub sigma_a: DMatrix<f64>,
    pub sigma_b: DMatrix<f64>,
    pub sigma_ab: DMatrix<f64>,
}

impl CorrelationModel {
    pub fn new(
        mu_a: DVector<f64>,
        sigma_a: DMatrix<f64>,
        mu_b: DVector<f64>,
        sigma_b: DMatrix<f64>,
        sigma_ab: DMatrix<f64>,
    ) -> Self {
        Self { mu_a, mu_b, sigma_a, sigma_b, sigma_ab }
    }

    /// Feature dimensions `(d_a, d_b)` as implied by the mean vectors.
    pub fn dims(&self) -> (usize, usize) {
        (self.mu_a.len(), self.mu_b.len())
    }
}

/// The canonical model: standard marginals, cross-covariance `diag(rho)`.
///
/// Invariants enforced at construction: every correlation lies strictly in
/// `(0, 1)`, is below `1 - DEFAULT_DROP_TOLERANCE` (anything closer to 1 is
/// indistinguishable from perfect correlation and makes the mutual
/// information diverge), and the vector is sorted non-increasing. The empty
/// vector is valid and describes independent databases.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalModel {
    rho: Vec<f64>,
}

impl CanonicalModel {
    pub fn new(mut rho: Vec<f64>) -> Result<Self> {
        for &value in &rho {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::InvalidCorrelation { value });
            }
            if value >= 1.0 - DEFAULT_DROP_TOLERANCE {
                return Err(Error::PerfectCorrelation);
            }
        }
        rho.sort_unstable_by(|a, b| b.total_cmp(a));
        Ok(Self { rho })
    }

    /// `d` copies of a single correlation value.
    pub fn constant(rho: f64, d: usize) -> Result<Self> {
        Self::new(alloc::vec![rho; d])
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    /// The number of retained canonical coordinates.
    pub fn dimension(&self) -> usize {
        self.rho.len()
    }
}

/// One side's affine map into canonical coordinates:
/// `row -> linear_map * (row - offset)`.
///
/// `linear_map` is `d x d_side` with full row rank `d` by construction (rows
/// are left/right singular vectors composed with an inverse Cholesky factor).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTransform {
    pub offset: DVector<f64>,
    pub linear_map: DMatrix<f64>,
}

impl FeatureTransform {
    /// The identity transform on `dim` coordinates.
    pub fn identity(dim: usize) -> Self {
        Self { offset: DVector::zeros(dim), linear_map: DMatrix::identity(dim, dim) }
    }

    /// Output dimension (number of canonical coordinates).
    pub fn output_dim(&self) -> usize {
        self.linear_map.nrows()
    }
}

/// Eigenvalue margins gathered while validating a covariance.
///
/// `min_eigenvalue_a` / `min_eigenvalue_b` must clear a positive tolerance;
/// `min_eigenvalue_joint` may sit at zero (perfectly correlated coordinates
/// are legal here and rejected later, during canonicalization).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceCheck {
    pub min_eigenvalue_a: f64,
    pub min_eigenvalue_b: f64,
    pub min_eigenvalue_joint: f64,
}

/// A set of `(identifier_a, identifier_b)` pairs, bijective or partial.
///
/// Bijective matchings (MAP output, planted truth) pair every identifier on
/// each side exactly once. Partial matchings (threshold-test output) are an
/// arbitrary subset of the identifier product.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Matching {
    pairs: BTreeSet<(String, String)>,
    bijective: bool,
}

impl Matching {
    /// A bijective matching. Fails if any identifier repeats on either side.
    pub fn bijective(pairs: impl IntoIterator<Item = (String, String)>) -> Result<Self> {
        let pairs: BTreeSet<_> = pairs.into_iter().collect();
        let mut left = BTreeSet::new();
        let mut right = BTreeSet::new();
        for (u, v) in &pairs {
            if !left.insert(u.as_str()) {
                return Err(Error::IdentifierMismatch(format!(
                    "left identifier {u:?} appears more than once in a bijective matching"
                )));
            }
            if !right.insert(v.as_str()) {
                return Err(Error::IdentifierMismatch(format!(
                    "right identifier {v:?} appears more than once in a bijective matching"
                )));
            }
        }
        Ok(Self { pairs, bijective: true })
    }

    /// A partial matching; duplicates collapse, no bijectivity required.
    pub fn partial(pairs: impl IntoIterator<Item = (String, String)>) -> Self {
        Self { pairs: pairs.into_iter().collect(), bijective: false }
    }

    pub fn pairs(&self) -> &BTreeSet<(String, String)> {
        &self.pairs
    }

    pub fn is_bijective(&self) -> bool {
        self.bijective
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, u: &str, v: &str) -> bool {
        self.pairs.iter().any(|(a, b)| a == u && b == v)
    }
}

/// Two databases over the same number of users.
///
/// Feature rows follow the order of the identifier lists. Identifiers are
/// unique within each side; the column counts of the two sides may differ
/// (they agree only once the rows are in canonical coordinates).
#[derive(Debug, Clone, PartialEq)]
pub struct DatabasePair {
    users_a: Vec<String>,
    users_b: Vec<String>,
    a: DMatrix<f64>,
    b: DMatrix<f64>,
}

impl DatabasePair {
    pub fn new(
        users_a: Vec<String>,
        a: DMatrix<f64>,
        users_b: Vec<String>,
        b: DMatrix<f64>,
    ) -> Result<Self> {
        let n = users_a.len();
        if n == 0 {
            return Err(Error::DimensionMismatch("a database pair needs at least one user".into()));
        }
        if users_b.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "side A has {n} users but side B has {}",
                users_b.len()
            )));
        }
        if a.nrows() != n || b.nrows() != n {
            return Err(Error::DimensionMismatch(format!(
                "feature rows ({} and {}) do not match the {} identifiers per side",
                a.nrows(),
                b.nrows(),
                n
            )));
        }
        for (side, users) in [("A", &users_a), ("B", &users_b)] {
            let distinct: BTreeSet<&str> = users.iter().map(String::as_str).collect();
            if distinct.len() != n {
                return Err(Error::IdentifierMismatch(format!(
                    "side {side} identifiers are not unique"
                )));
            }
        }
        Ok(Self { users_a, users_b, a, b })
    }

    pub fn n(&self) -> usize {
        self.users_a.len()
    }

    pub fn users_a(&self) -> &[String] {
        &self.users_a
    }

    pub fn users_b(&self) -> &[String] {
        &self.users_b
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, &x| acc.max(x.abs()))
}

fn all_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|x| x.is_finite())
}

fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    // Symmetrize first so the eigensolver sees an exactly symmetric input.
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |acc, &x| acc.min(x))
}

fn joint_covariance(model: &CorrelationModel) -> DMatrix<f64> {
    let (da, db) = model.dims();
    let mut joint = DMatrix::zeros(da + db, da + db);
    joint.view_mut((0, 0), (da, da)).copy_from(&model.sigma_a);
    joint.view_mut((0, da), (da, db)).copy_from(&model.sigma_ab);
    joint.view_mut((da, 0), (db, da)).copy_from(&model.sigma_ab.transpose());
    joint.view_mut((da, da), (db, db)).copy_from(&model.sigma_b);
    joint
}

/// Checks that a model satisfies the covariance assumptions: dimensional
/// consistency, symmetry of the marginal blocks (within tolerance), strict
/// positive definiteness of `sigma_a` and `sigma_b`, and positive
/// semidefiniteness of the full block matrix. Returns the minimum eigenvalue
/// of each block so callers can see how much margin the model has.
pub fn validate_covariance(model: &CorrelationModel) -> Result<CovarianceCheck> {
    let (da, db) = model.dims();
    if da == 0 || db == 0 {
        return Err(Error::DimensionMismatch("feature dimensions must be at least 1".into()));
    }
    if model.sigma_a.shape() != (da, da) {
        return Err(Error::DimensionMismatch(format!(
            "sigma_a is {:?}, expected ({da}, {da}) to match mu_a",
            model.sigma_a.shape()
        )));
    }
    if model.sigma_b.shape() != (db, db) {
        return Err(Error::DimensionMismatch(format!(
            "sigma_b is {:?}, expected ({db}, {db}) to match mu_b",
            model.sigma_b.shape()
        )));
    }
    if model.sigma_ab.shape() != (da, db) {
        return Err(Error::DimensionMismatch(format!(
            "sigma_ab is {:?}, expected ({da}, {db})",
            model.sigma_ab.shape()
        )));
    }
    if !model.mu_a.iter().chain(model.mu_b.iter()).all(|x| x.is_finite()) {
        return Err(Error::NonFiniteInput("model means must be finite"));
    }
    for block in [&model.sigma_a, &model.sigma_b, &model.sigma_ab] {
        if !all_finite(block) {
            return Err(Error::NonFiniteInput("covariance entries must be finite"));
        }
    }

    for (block, name) in
        [(&model.sigma_a, CovarianceBlock::SigmaA), (&model.sigma_b, CovarianceBlock::SigmaB)]
    {
        if max_asymmetry(block) > VALIDATION_TOLERANCE * max_abs(block) {
            return Err(Error::AsymmetryBeyondTolerance(name));
        }
    }

    let min_a = min_symmetric_eigenvalue(&model.sigma_a);
    if min_a <= VALIDATION_TOLERANCE * max_abs(&model.sigma_a) {
        return Err(Error::NotPositiveDefinite(CovarianceBlock::SigmaA));
    }
    let min_b = min_symmetric_eigenvalue(&model.sigma_b);
    if min_b <= VALIDATION_TOLERANCE * max_abs(&model.sigma_b) {
        return Err(Error::NotPositiveDefinite(CovarianceBlock::SigmaB));
    }

    let joint = joint_covariance(model);
    let min_joint = min_symmetric_eigenvalue(&joint);
    if min_joint < -VALIDATION_TOLERANCE * max_abs(&joint) {
        return Err(Error::NotPositiveDefinite(CovarianceBlock::Joint));
    }

    Ok(CovarianceCheck {
        min_eigenvalue_a: min_a,
        min_eigenvalue_b: min_b,
        min_eigenvalue_joint: min_joint,
    })
}

/// Reduces a valid general model to canonical form.
///
/// With `L_a L_a^T = sigma_a` and `L_b L_b^T = sigma_b`, the singular values
/// of `L_a^{-1} sigma_ab L_b^{-T}` are the canonical correlations. Values at
/// most `drop_tolerance` carry no information and are dropped; any value
/// within `drop_tolerance` of 1 (or above) means a perfectly correlated
/// coordinate and is an error. Signs are absorbed into the right singular
/// vectors (singular values are non-negative), so the returned correlations
/// are all positive.
///
/// Returns `(rho, transform_a, transform_b)`. Applying the transforms to
/// jointly sampled rows yields zero-mean coordinates with identity marginal
/// covariance and cross-covariance `diag(rho)`. The computation is
/// deterministic: identical inputs give bitwise-identical outputs.
///
/// Note: `drop_tolerance` values below [`DEFAULT_DROP_TOLERANCE`] still
/// cannot admit correlations within `DEFAULT_DROP_TOLERANCE` of 1, because
/// [`CanonicalModel`] construction rejects those unconditionally.
pub fn canonicalize(
    model: &CorrelationModel,
    drop_tolerance: f64,
) -> Result<(CanonicalModel, FeatureTransform, FeatureTransform)> {
    if !(drop_tolerance.is_finite() && drop_tolerance >= 0.0) {
        return Err(Error::InvalidParameter("drop_tolerance must be finite and non-negative"));
    }
    validate_covariance(model)?;

    let l_a = model
        .sigma_a
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite(CovarianceBlock::SigmaA))?
        .unpack();
    let l_b = model
        .sigma_b
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite(CovarianceBlock::SigmaB))?
        .unpack();

    // whitened = L_a^{-1} sigma_ab L_b^{-T}, via two triangular solves.
    let half = l_a
        .solve_lower_triangular(&model.sigma_ab)
        .ok_or(Error::NotPositiveDefinite(CovarianceBlock::SigmaA))?;
    let whitened = l_b
        .solve_lower_triangular(&half.transpose())
        .ok_or(Error::NotPositiveDefinite(CovarianceBlock::SigmaB))?
        .transpose();

    let svd = whitened.svd(true, true);
    let singular_values = svd.singular_values.as_slice();
    if singular_values.iter().any(|&s| s >= 1.0 - drop_tolerance) {
        return Err(Error::PerfectCorrelation);
    }
    // Values are sorted non-increasing, so the retained set is a prefix.
    let retained = singular_values.iter().take_while(|&&s| s > drop_tolerance).count();
    let rho = singular_values[..retained].to_vec();

    let u = svd.u.expect("left singular vectors were requested");
    let v_t = svd.v_t.expect("right singular vectors were requested");

    // map_a = U_r^T L_a^{-1}, computed as (L_a^{-T} U_r)^T.
    let u_r = u.columns(0, retained).into_owned();
    let map_a = l_a
        .transpose()
        .solve_upper_triangular(&u_r)
        .ok_or(Error::NotPositiveDefinite(CovarianceBlock::SigmaA))?
        .transpose();
    // map_b = V_r^T L_b^{-1}, with V_r^T the first rows of v_t.
    let v_r = v_t.rows(0, retained).transpose().into_owned();
    let map_b = l_b
        .transpose()
        .solve_upper_triangular(&v_r)
        .ok_or(Error::NotPositiveDefinite(CovarianceBlock::SigmaB))?
        .transpose();

    let canonical = CanonicalModel::new(rho)?;
    let transform_a = FeatureTransform { offset: model.mu_a.clone(), linear_map: map_a };
    let transform_b = FeatureTransform { offset: model.mu_b.clone(), linear_map: map_b };
    Ok((canonical, transform_a, transform_b))
}

/// Applies an affine transform row-wise: each output row is
/// `linear_map * (row - offset)`.
pub fn apply_transform(t: &FeatureTransform, rows: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if rows.ncols() != t.offset.len() {
        return Err(Error::DimensionMismatch(format!(
            "rows have {} columns but the transform expects {}",
            rows.ncols(),
            t.offset.len()
        )));
    }
    let mut centered = rows.clone();
    let offset_row = t.offset.transpose();
    for mut row in centered.row_iter_mut() {
        row -= &offset_row;
    }
    Ok(centered * t.linear_map.transpose())
}
