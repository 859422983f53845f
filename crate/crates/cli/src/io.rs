//! On-disk formats: block-covariance models as JSON, databases and
//! matchings as CSV. All floats are written with 17 significant digits so
//! values survive a write/read round trip bit for bit.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use dbalign_core::model::{CorrelationModel, Matching};
use dbalign_core::nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::{validation, ValidationError};

/// 17 significant digits: enough to reproduce any f64 exactly on parse.
pub fn format_float(value: f64) -> String {
    format!("{value:.16e}")
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    mu_a: Vec<f64>,
    sigma_a: Vec<Vec<f64>>,
    mu_b: Vec<f64>,
    sigma_b: Vec<Vec<f64>>,
    sigma_ab: Vec<Vec<f64>>,
}

fn matrix_from_rows(name: &str, rows: &[Vec<f64>], want: (usize, usize)) -> Result<DMatrix<f64>> {
    let (nrows, ncols) = want;
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return validation(format!("{name} must be a {nrows}x{ncols} array of arrays"));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(nrows, ncols, &flat))
}

/// Reads a block-covariance model from JSON: `mu_a`, `sigma_a`, `mu_b`,
/// `sigma_b` and the cross block `sigma_ab` (row-major nested arrays).
pub fn read_model(path: &Path) -> Result<CorrelationModel> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading model file {}", path.display()))?;
    let file: ModelFile = serde_json::from_str(&text)
        .map_err(|e| ValidationError(format!("model file {}: {e}", path.display())))?;
    let da = file.mu_a.len();
    let db = file.mu_b.len();
    if da == 0 || db == 0 {
        return validation("mu_a and mu_b must be non-empty");
    }
    Ok(CorrelationModel::new(
        DVector::from_row_slice(&file.mu_a),
        matrix_from_rows("sigma_a", &file.sigma_a, (da, da))?,
        DVector::from_row_slice(&file.mu_b),
        matrix_from_rows("sigma_b", &file.sigma_b, (db, db))?,
        matrix_from_rows("sigma_ab", &file.sigma_ab, (da, db))?,
    ))
}

/// Writes one side of a database: header `id,f1,...,fd`, one row per user.
pub fn write_database_csv(path: &Path, ids: &[String], features: &DMatrix<f64>) -> Result<()> {
    let d = features.ncols();
    let mut out = String::from("id");
    for k in 1..=d {
        out.push_str(&format!(",f{k}"));
    }
    out.push('\n');
    for (i, id) in ids.iter().enumerate() {
        out.push_str(id);
        for k in 0..d {
            out.push(',');
            out.push_str(&format_float(features[(i, k)]));
        }
        out.push('\n');
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Reads one side of a database written by [`write_database_csv`].
pub fn read_database_csv(path: &Path) -> Result<(Vec<String>, DMatrix<f64>)> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("reading database {}", path.display()))?;
    let headers = reader.headers().context("reading CSV header")?.clone();
    if headers.get(0) != Some("id") {
        return validation(format!("{}: first column must be `id`", path.display()));
    }
    let d = headers.len() - 1;
    for (k, field) in headers.iter().skip(1).enumerate() {
        if field != format!("f{}", k + 1) {
            return validation(format!(
                "{}: column {} is {field:?}, expected `f{}`",
                path.display(),
                k + 2,
                k + 1
            ));
        }
    }

    let mut ids = Vec::new();
    let mut values = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("reading {} row {}", path.display(), line + 2))?;
        if record.len() != d + 1 {
            return validation(format!(
                "{} row {}: {} fields, expected {}",
                path.display(),
                line + 2,
                record.len(),
                d + 1
            ));
        }
        ids.push(record[0].to_string());
        for field in record.iter().skip(1) {
            let value: f64 = field.parse().map_err(|_| {
                ValidationError(format!(
                    "{} row {}: {field:?} is not a number",
                    path.display(),
                    line + 2
                ))
            })?;
            values.push(value);
        }
    }
    if ids.is_empty() {
        return validation(format!("{}: no data rows", path.display()));
    }
    Ok((ids.clone(), DMatrix::from_row_slice(ids.len(), d, &values)))
}

/// Writes a matching: header `u,v`, one pair per row, in sorted pair order.
pub fn write_matching_csv(path: &Path, matching: &Matching) -> Result<()> {
    let mut out = String::from("u,v\n");
    for (u, v) in matching.pairs() {
        out.push_str(&format!("{u},{v}\n"));
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Reads the pairs of a matching CSV; the caller decides whether to require
/// bijectivity.
pub fn read_matching_pairs(path: &Path) -> Result<Vec<(String, String)>> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("reading matching {}", path.display()))?;
    let headers = reader.headers().context("reading CSV header")?;
    if headers.get(0) != Some("u") || headers.get(1) != Some("v") || headers.len() != 2 {
        return validation(format!("{}: header must be `u,v`", path.display()));
    }
    let mut pairs = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("reading {} row {}", path.display(), line + 2))?;
        if record.len() != 2 {
            return validation(format!("{} row {}: expected two fields", path.display(), line + 2));
        }
        pairs.push((record[0].to_string(), record[1].to_string()));
    }
    Ok(pairs)
}

/// Reads a matching that must be a bijection (such as a ground truth file).
pub fn read_bijective_matching(path: &Path) -> Result<Matching> {
    let pairs = read_matching_pairs(path)?;
    Matching::bijective(pairs)
        .map_err(|e| anyhow::Error::new(ValidationError(format!("{}: {e}", path.display()))))
}
