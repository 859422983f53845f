//! Sweep driver: a grid of (n, model, threshold) cells, each aggregating
//! many planted-instance trials. All cells reuse the same per-trial seeds,
//! so results are comparable across the grid and extending a sweep never
//! perturbs cells that were already present.
//!
//! A config file looks like:
//!
//! ```json
//! {
//!   "n_values": [50, 100],
//!   "rho": [{"constant": {"rho": 0.5, "d": 60}}],
//!   "algorithm": "map",
//!   "trials": 100,
//!   "master_seed": 7,
//!   "output_dir": "out"
//! }
//! ```

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use dbalign_core::align::{
    bht_align, map_align, score_alignment, score_matrix, AlignmentReport, ScoreMatrix,
};
use dbalign_core::measures;
use dbalign_core::model::{canonicalize, CanonicalModel, Matching, DEFAULT_DROP_TOLERANCE};
use dbalign_core::synth::{derive_trial_seed, sample_instance, GENERATOR_PROVENANCE};
use dbalign_core::theory::{self, ThresholdWindow, Verdict};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{io, plot, stats, validation};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub n_values: Vec<usize>,
    pub rho: Vec<RhoSpec>,
    pub algorithm: Algorithm,
    #[serde(default)]
    pub tau_policy: Option<TauPolicy>,
    #[serde(default)]
    pub trials: Option<usize>,
    pub master_seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl SweepConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading sweep config {}", path.display()))?;
        let config: Self = serde_json::from_str(&text)
            .map_err(|e| crate::ValidationError(format!("sweep config {}: {e}", path.display())))?;
        Ok(config)
    }

    pub fn trials(&self) -> usize {
        self.trials.unwrap_or(match self.algorithm {
            Algorithm::Map | Algorithm::Both => 100,
            Algorithm::Bht => 20,
        })
    }
}

/// One point on the correlation axis of the grid.
#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum RhoSpec {
    /// `d` coordinates all sharing one correlation.
    Constant { rho: f64, d: usize },
    /// An explicit canonical correlation vector.
    Vector { rho: Vec<f64> },
    /// A general block-covariance model, canonicalized on load.
    ModelFile { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Map,
    Bht,
    Both,
}

/// How the retention threshold is chosen for each cell.
#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TauPolicy {
    /// Midpoint of the admissible window for the given error budgets;
    /// cells with an empty window skip threshold alignment.
    WindowMidpoint { eps_fn: f64, eps_fp: f64 },
    Explicit { tau: f64 },
    /// One cell per threshold value.
    Grid { taus: Vec<f64> },
}

/// A fully resolved cell: everything a trial needs except the trial index.
#[derive(Debug, Clone)]
pub struct CellPlan {
    pub index: usize,
    pub n: usize,
    pub model: CanonicalModel,
    pub rho_label: String,
    pub rho_constant: Option<f64>,
    pub tau: Option<f64>,
    pub window_status: Option<String>,
}

/// One row of `cells.csv`. Field order is column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub cell: usize,
    pub algorithm: Algorithm,
    pub n: usize,
    pub d: usize,
    pub rho: String,
    pub trials: usize,
    pub errors: usize,
    pub i_xy: f64,
    pub sigma_xy: f64,
    pub i_over_ln_n: f64,
    pub achievability_verdict: String,
    pub achievability_margin: f64,
    pub converse_verdict: Option<String>,
    pub converse_margin: Option<f64>,
    pub bht_error_floor: f64,
    pub window_status: Option<String>,
    pub tau: Option<f64>,
    pub map_success_rate: Option<f64>,
    pub map_success_half_width: Option<f64>,
    pub map_mean_errors: Option<f64>,
    pub map_mean_errors_half_width: Option<f64>,
    pub bht_mean_fn: Option<f64>,
    pub bht_mean_fn_half_width: Option<f64>,
    pub bht_mean_fp: Option<f64>,
    pub bht_mean_fp_half_width: Option<f64>,
}

fn verdict_label(verdict: Verdict) -> &'static str {
    match verdict {
        Verdict::Achievable => "achievable",
        Verdict::Converse => "converse",
        Verdict::Gap => "gap",
    }
}

fn resolve_model(spec: &RhoSpec) -> Result<(CanonicalModel, String, Option<f64>)> {
    match spec {
        RhoSpec::Constant { rho, d } => {
            let model = CanonicalModel::constant(*rho, *d)?;
            Ok((model, format!("{rho}"), Some(*rho)))
        }
        RhoSpec::Vector { rho } => {
            let model = CanonicalModel::new(rho.clone())?;
            let label = join_rho(model.rho());
            Ok((model, label, None))
        }
        RhoSpec::ModelFile { path } => {
            let general = io::read_model(path)?;
            let (model, _, _) = canonicalize(&general, DEFAULT_DROP_TOLERANCE)?;
            let label = join_rho(model.rho());
            Ok((model, label, None))
        }
    }
}

fn join_rho(rho: &[f64]) -> String {
    let parts: Vec<String> = rho.iter().map(|v| format!("{v}")).collect();
    parts.join(";")
}

/// Expands the config into the ordered cell list. New `n_values`, `rho`
/// entries or grid thresholds appended to a config extend this list without
/// renumbering existing cells.
pub fn plan_cells(config: &SweepConfig) -> Result<Vec<CellPlan>> {
    if config.n_values.is_empty() {
        return validation("n_values must be non-empty");
    }
    if config.n_values.iter().any(|&n| n == 0) {
        return validation("n_values must be positive");
    }
    if config.rho.is_empty() {
        return validation("rho must list at least one model");
    }
    if config.trials == Some(0) {
        return validation("trials must be positive");
    }
    let needs_tau = matches!(config.algorithm, Algorithm::Bht | Algorithm::Both);
    match (&config.tau_policy, needs_tau) {
        (None, true) => {
            return validation("threshold alignment needs a tau_policy");
        }
        (Some(_), false) => {
            return validation("tau_policy is only used with the bht or both algorithms");
        }
        _ => {}
    }
    match &config.tau_policy {
        Some(TauPolicy::WindowMidpoint { eps_fn, eps_fp }) => {
            if !(eps_fn.is_finite() && *eps_fn > 0.0 && eps_fp.is_finite() && *eps_fp > 0.0) {
                return validation("error budgets must be positive and finite");
            }
        }
        Some(TauPolicy::Explicit { tau }) => {
            if !tau.is_finite() {
                return validation("tau must be finite");
            }
        }
        Some(TauPolicy::Grid { taus }) => {
            if taus.is_empty() || taus.iter().any(|t| !t.is_finite()) {
                return validation("a tau grid must list finite values");
            }
        }
        None => {}
    }

    let mut models = Vec::new();
    for spec in &config.rho {
        models.push(resolve_model(spec)?);
    }

    let mut cells = Vec::new();
    for &n in &config.n_values {
        for (model, label, constant) in &models {
            let thresholds: Vec<(Option<f64>, Option<String>)> = match &config.tau_policy {
                None => vec![(None, None)],
                Some(TauPolicy::WindowMidpoint { eps_fn, eps_fp }) => {
                    let window =
                        theory::bht_threshold_window(measures::summary(model), n, *eps_fn, *eps_fp)?;
                    match window {
                        ThresholdWindow::Feasible { midpoint, .. } => {
                            vec![(Some(midpoint), Some("feasible".to_string()))]
                        }
                        ThresholdWindow::Infeasible { .. } => {
                            vec![(None, Some("infeasible".to_string()))]
                        }
                    }
                }
                Some(TauPolicy::Explicit { tau }) => {
                    vec![(Some(*tau), Some("explicit".to_string()))]
                }
                Some(TauPolicy::Grid { taus }) => taus
                    .iter()
                    .map(|&tau| (Some(tau), Some("grid".to_string())))
                    .collect(),
            };
            for (tau, window_status) in thresholds {
                cells.push(CellPlan {
                    index: cells.len(),
                    n,
                    model: model.clone(),
                    rho_label: label.clone(),
                    rho_constant: *constant,
                    tau,
                    window_status,
                });
            }
        }
    }
    Ok(cells)
}

struct TrialOutcome {
    map: Option<AlignmentReport>,
    bht: Option<AlignmentReport>,
}

/// Sum of the scores of the retained pairs, the `total_score` of a
/// threshold alignment.
pub fn retained_score_sum(scores: &ScoreMatrix, matching: &Matching) -> f64 {
    let row_index: std::collections::HashMap<&str, usize> =
        scores.row_ids().iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let col_index: std::collections::HashMap<&str, usize> =
        scores.col_ids().iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    matching
        .pairs()
        .iter()
        .map(|(u, v)| scores.scores()[(row_index[u.as_str()], col_index[v.as_str()])])
        .sum()
}

fn run_trial(
    cell: &CellPlan,
    algorithm: Algorithm,
    master_seed: u64,
    trial: u64,
) -> dbalign_core::Result<TrialOutcome> {
    let seed = derive_trial_seed(master_seed, trial);
    let instance = sample_instance(cell.n, &cell.model, seed)?;
    let scores = score_matrix(&instance.databases, &instance.model)?;

    let map = if matches!(algorithm, Algorithm::Map | Algorithm::Both) {
        let started = Instant::now();
        let (predicted, weight) = map_align(&scores)?;
        let wall_time = started.elapsed();
        let (fn_count, fp_count, exact) = score_alignment(&predicted, &instance.truth)?;
        Some(AlignmentReport {
            predicted,
            truth: Some(instance.truth.clone()),
            false_negatives: Some(fn_count),
            false_positives: Some(fp_count),
            exact: Some(exact),
            total_score: weight,
            threshold: None,
            wall_time,
            seed,
        })
    } else {
        None
    };

    let bht = match (algorithm, cell.tau) {
        (Algorithm::Bht | Algorithm::Both, Some(tau)) => {
            let started = Instant::now();
            let predicted = bht_align(&scores, tau);
            let wall_time = started.elapsed();
            let (fn_count, fp_count, exact) = score_alignment(&predicted, &instance.truth)?;
            let total_score = retained_score_sum(&scores, &predicted);
            Some(AlignmentReport {
                predicted,
                truth: Some(instance.truth.clone()),
                false_negatives: Some(fn_count),
                false_positives: Some(fp_count),
                exact: Some(exact),
                total_score,
                threshold: Some(tau),
                wall_time,
                seed,
            })
        }
        _ => None,
    };

    Ok(TrialOutcome { map, bht })
}

#[derive(Serialize)]
struct TrialReportFile<'a> {
    cell: usize,
    trial: u64,
    algorithm: &'a str,
    generator: &'a str,
    #[serde(flatten)]
    report: &'a AlignmentReport,
}

#[derive(Serialize)]
struct TrialErrorFile<'a> {
    cell: usize,
    trial: u64,
    error: &'a str,
}

fn write_report(
    reports_dir: &Path,
    cell: usize,
    trial: u64,
    algorithm: &str,
    report: &AlignmentReport,
) -> Result<()> {
    let path = reports_dir.join(format!("cell{cell:03}_trial{trial:04}_{algorithm}.json"));
    let file = TrialReportFile { cell, trial, algorithm, generator: GENERATOR_PROVENANCE, report };
    let text = serde_json::to_string_pretty(&file).context("serializing trial report")?;
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn aggregate_cell(
    plan: &CellPlan,
    config: &SweepConfig,
    outcomes: &[Result<TrialOutcome, String>],
) -> SweepCell {
    let model = &plan.model;
    let summary = measures::summary(model);
    let achievability = theory::map_achievability_margin(model, plan.n);
    let converse = plan
        .rho_constant
        .and_then(|rho| theory::map_converse_predicate(rho, model.dimension(), plan.n).ok());

    let errors = outcomes.iter().filter(|o| o.is_err()).count();
    let successes: Vec<&TrialOutcome> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();

    let map_reports: Vec<&AlignmentReport> =
        successes.iter().filter_map(|o| o.map.as_ref()).collect();
    let (map_success_rate, map_success_half_width, map_mean_errors, map_mean_errors_half_width) =
        if map_reports.is_empty() {
            (None, None, None, None)
        } else {
            let exact: Vec<f64> = map_reports
                .iter()
                .map(|r| if r.exact == Some(true) { 1.0 } else { 0.0 })
                .collect();
            let misses: Vec<f64> =
                map_reports.iter().map(|r| r.false_negatives.unwrap_or(0) as f64).collect();
            let rate = stats::mean(&exact);
            (
                Some(rate),
                Some(stats::rate_half_width(rate, exact.len())),
                Some(stats::mean(&misses)),
                Some(stats::mean_half_width(&misses)),
            )
        };

    let bht_reports: Vec<&AlignmentReport> =
        successes.iter().filter_map(|o| o.bht.as_ref()).collect();
    let (bht_mean_fn, bht_mean_fn_half_width, bht_mean_fp, bht_mean_fp_half_width) =
        if bht_reports.is_empty() {
            (None, None, None, None)
        } else {
            let fns: Vec<f64> =
                bht_reports.iter().map(|r| r.false_negatives.unwrap_or(0) as f64).collect();
            let fps: Vec<f64> =
                bht_reports.iter().map(|r| r.false_positives.unwrap_or(0) as f64).collect();
            (
                Some(stats::mean(&fns)),
                Some(stats::mean_half_width(&fns)),
                Some(stats::mean(&fps)),
                Some(stats::mean_half_width(&fps)),
            )
        };

    SweepCell {
        cell: plan.index,
        algorithm: config.algorithm,
        n: plan.n,
        d: model.dimension(),
        rho: plan.rho_label.clone(),
        trials: outcomes.len(),
        errors,
        i_xy: summary.mutual_information,
        sigma_xy: summary.sigma,
        i_over_ln_n: achievability.regime.quantity,
        achievability_verdict: verdict_label(achievability.regime.verdict).to_string(),
        achievability_margin: achievability.regime.margin,
        converse_verdict: converse.as_ref().map(|c| verdict_label(c.regime.verdict).to_string()),
        converse_margin: converse.as_ref().map(|c| c.regime.margin),
        bht_error_floor: theory::bht_converse_bound(summary.mutual_information, plan.n),
        window_status: plan.window_status.clone(),
        tau: plan.tau,
        map_success_rate,
        map_success_half_width,
        map_mean_errors,
        map_mean_errors_half_width,
        bht_mean_fn,
        bht_mean_fn_half_width,
        bht_mean_fp,
        bht_mean_fp_half_width,
    }
}

pub fn write_cells_csv(path: &Path, cells: &[SweepCell]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    for cell in cells {
        writer.serialize(cell).context("writing sweep cell")?;
    }
    writer.flush().context("flushing cells.csv")?;
    Ok(())
}

pub fn read_cells_csv(path: &Path) -> Result<Vec<SweepCell>> {
    let mut reader =
        csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut cells = Vec::new();
    for record in reader.deserialize() {
        cells.push(record.with_context(|| format!("parsing {}", path.display()))?);
    }
    Ok(cells)
}

/// Runs the whole grid and writes `cells.csv`, per-trial reports and plots
/// under `out`. Trials within a cell run in parallel; aggregation order is
/// fixed, so outputs are byte-identical across runs and thread counts.
pub fn run_sweep(config: &SweepConfig, out: &Path) -> Result<Vec<SweepCell>> {
    let plans = plan_cells(config)?;
    let reports_dir = out.join("reports");
    fs::create_dir_all(&reports_dir)
        .with_context(|| format!("creating {}", reports_dir.display()))?;

    let trials = config.trials();
    let mut cells = Vec::with_capacity(plans.len());
    for plan in &plans {
        let outcomes: Vec<Result<TrialOutcome, String>> = (0..trials as u64)
            .into_par_iter()
            .map(|trial| {
                run_trial(plan, config.algorithm, config.master_seed, trial)
                    .map_err(|e| e.to_string())
            })
            .collect();

        for (trial, outcome) in outcomes.iter().enumerate() {
            let trial = trial as u64;
            match outcome {
                Ok(result) => {
                    if let Some(report) = &result.map {
                        write_report(&reports_dir, plan.index, trial, "map", report)?;
                    }
                    if let Some(report) = &result.bht {
                        write_report(&reports_dir, plan.index, trial, "bht", report)?;
                    }
                }
                Err(error) => {
                    let path = reports_dir
                        .join(format!("cell{:03}_trial{trial:04}_error.json", plan.index));
                    let text = serde_json::to_string_pretty(&TrialErrorFile {
                        cell: plan.index,
                        trial,
                        error,
                    })?;
                    fs::write(&path, text)
                        .with_context(|| format!("writing {}", path.display()))?;
                }
            }
        }

        cells.push(aggregate_cell(plan, config, &outcomes));
    }

    write_cells_csv(&out.join("cells.csv"), &cells)?;

    match config.algorithm {
        Algorithm::Map => {
            plot::emit_plot(&out.join("plot.svg"), &cells, plot::PlotKind::SuccessVsInformation)?;
        }
        Algorithm::Bht => {
            plot::emit_plot(&out.join("plot.svg"), &cells, plot::PlotKind::ErrorsVsInformation)?;
        }
        Algorithm::Both => {
            plot::emit_plot(&out.join("plot.svg"), &cells, plot::PlotKind::SuccessVsInformation)?;
            plot::emit_plot(
                &out.join("plot_errors.svg"),
                &cells,
                plot::PlotKind::ErrorsVsInformation,
            )?;
        }
    }
    Ok(cells)
}
