use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dbalign_core::align::{
    bht_align, map_align, score_alignment, score_matrix, select_threshold, AlignmentReport,
};
use dbalign_core::measures;
use dbalign_core::model::{
    canonicalize, CanonicalModel, DatabasePair, Matching, DEFAULT_DROP_TOLERANCE,
};
use dbalign_core::synth::{derive_trial_seed, sample_instance};
use dbalign_core::theory::ThresholdWindow;
use dbalign_cli::sweep::{retained_score_sum, run_sweep, SweepConfig};
use dbalign_cli::{exit_code, io, plot, validation};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "dbalign",
    version,
    about = "Planted database alignment: instance synthesis, scoring, alignment and sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// The correlation structure, given one of three ways.
#[derive(Args)]
struct ModelArgs {
    /// Canonical correlation(s): a single value or a comma-separated list.
    #[arg(long)]
    rho: Option<String>,
    /// Feature dimension; with a single --rho value, replicates it d times.
    #[arg(long)]
    d: Option<usize>,
    /// JSON file with a general block-covariance model (canonicalized on load).
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a planted instance; writes a.csv, b.csv and truth.csv.
    Generate {
        /// Number of users per side.
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        model: ModelArgs,
        /// Master seed; the instance is fully determined by it.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory, created if missing.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the canonical form of a model as JSON: correlations, mutual
    /// information and the score standard deviation.
    Canonicalize {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Maximum-weight bijective alignment of two database files.
    AlignMap {
        /// First database CSV.
        #[arg(long)]
        a: PathBuf,
        /// Second database CSV.
        #[arg(long)]
        b: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        /// Ground-truth matching CSV; enables error scoring in the report.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Seed recorded in the report for provenance.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the predicted matching to this CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Threshold alignment: keep every pair scoring at least tau.
    AlignBht {
        /// First database CSV.
        #[arg(long)]
        a: PathBuf,
        /// Second database CSV.
        #[arg(long)]
        b: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        /// Explicit threshold, in nats.
        #[arg(long)]
        tau: Option<f64>,
        /// Expected false-negative budget; with --eps-fp, picks the window
        /// midpoint threshold.
        #[arg(long)]
        eps_fn: Option<f64>,
        /// Expected false-positive budget.
        #[arg(long)]
        eps_fp: Option<f64>,
        /// Ground-truth matching CSV; enables error scoring in the report.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Seed recorded in the report for provenance.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the predicted matching to this CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a sweep config: writes cells.csv, per-trial reports and plots.
    Sweep {
        /// Sweep configuration JSON.
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides output_dir from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for trial execution (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Re-plot an existing cells.csv.
    Report {
        /// cells.csv written by a sweep.
        #[arg(long)]
        cells: PathBuf,
        /// Which quantity to plot.
        #[arg(long, value_enum)]
        kind: ReportKind,
        /// Output SVG path.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ReportKind {
    /// Exact-match rate of bijective alignment.
    Success,
    /// Mean false negatives and false positives of threshold alignment.
    Errors,
}

#[derive(Serialize)]
struct CanonicalOut<'a> {
    rho: &'a [f64],
    #[serde(rename = "I")]
    i: f64,
    sigma: f64,
}

fn resolve_model(args: &ModelArgs) -> Result<CanonicalModel> {
    match (&args.rho, &args.model) {
        (Some(_), Some(_)) => validation("pass either --rho or --model, not both"),
        (None, None) => validation("a model is required: --rho (optionally with --d) or --model"),
        (None, Some(path)) => {
            if args.d.is_some() {
                return validation("--d only applies together with --rho");
            }
            let general = io::read_model(path)?;
            let (canonical, _, _) = canonicalize(&general, DEFAULT_DROP_TOLERANCE)?;
            Ok(canonical)
        }
        (Some(text), None) => {
            let mut values = Vec::new();
            for part in text.split(',') {
                let value: f64 = part.trim().parse().map_err(|_| {
                    dbalign_cli::ValidationError(format!("--rho: {part:?} is not a number"))
                })?;
                values.push(value);
            }
            if values.len() == 1 {
                Ok(CanonicalModel::constant(values[0], args.d.unwrap_or(1))?)
            } else {
                if let Some(d) = args.d {
                    if d != values.len() {
                        return validation(format!(
                            "--d {d} disagrees with the {} values in --rho",
                            values.len()
                        ));
                    }
                }
                Ok(CanonicalModel::new(values)?)
            }
        }
    }
}

fn load_pair(a: &Path, b: &Path) -> Result<DatabasePair> {
    let (users_a, features_a) = io::read_database_csv(a)?;
    let (users_b, features_b) = io::read_database_csv(b)?;
    Ok(DatabasePair::new(users_a, features_a, users_b, features_b)?)
}

fn score_against_truth(
    predicted: &Matching,
    truth: Option<&Path>,
) -> Result<(Option<Matching>, Option<usize>, Option<usize>, Option<bool>)> {
    match truth {
        None => Ok((None, None, None, None)),
        Some(path) => {
            let truth = io::read_bijective_matching(path)?;
            let (fn_count, fp_count, exact) = score_alignment(predicted, &truth)?;
            Ok((Some(truth), Some(fn_count), Some(fp_count), Some(exact)))
        }
    }
}

/// Prints a line to stdout, treating a closed pipe as a normal end of
/// output rather than an error.
fn print_line(text: &str) -> Result<()> {
    use std::io::Write;
    let mut stdout = std::io::stdout().lock();
    match writeln!(stdout, "{text}") {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        Err(e) => Err(e).context("writing to stdout"),
    }
}

fn print_report(report: &AlignmentReport) -> Result<()> {
    print_line(&serde_json::to_string_pretty(report).context("serializing report")?)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { n, model, seed, out } => {
            let model = resolve_model(&model)?;
            let instance = sample_instance(n, &model, derive_trial_seed(seed, 0))?;
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let databases = &instance.databases;
            io::write_database_csv(&out.join("a.csv"), databases.users_a(), databases.a())?;
            io::write_database_csv(&out.join("b.csv"), databases.users_b(), databases.b())?;
            io::write_matching_csv(&out.join("truth.csv"), &instance.truth)?;
            Ok(())
        }
        Command::Canonicalize { model } => {
            let model = resolve_model(&model)?;
            let summary = measures::summary(&model);
            let out = CanonicalOut {
                rho: model.rho(),
                i: summary.mutual_information,
                sigma: summary.sigma,
            };
            print_line(&serde_json::to_string(&out).context("serializing model summary")?)
        }
        Command::AlignMap { a, b, model, truth, seed, out } => {
            let model = resolve_model(&model)?;
            let pair = load_pair(&a, &b)?;
            let scores = score_matrix(&pair, &model)?;
            let started = Instant::now();
            let (predicted, weight) = map_align(&scores)?;
            let wall_time = started.elapsed();
            let (truth, false_negatives, false_positives, exact) =
                score_against_truth(&predicted, truth.as_deref())?;
            if let Some(path) = out {
                io::write_matching_csv(&path, &predicted)?;
            }
            print_report(&AlignmentReport {
                predicted,
                truth,
                false_negatives,
                false_positives,
                exact,
                total_score: weight,
                threshold: None,
                wall_time,
                seed: derive_trial_seed(seed, 0),
            })
        }
        Command::AlignBht { a, b, model, tau, eps_fn, eps_fp, truth, seed, out } => {
            let model = resolve_model(&model)?;
            let pair = load_pair(&a, &b)?;
            let tau = match (tau, eps_fn, eps_fp) {
                (Some(tau), None, None) => tau,
                (None, Some(eps_fn), Some(eps_fp)) => {
                    let window =
                        select_threshold(measures::summary(&model), pair.n(), eps_fn, eps_fp)?;
                    match window {
                        ThresholdWindow::Feasible { midpoint, .. } => midpoint,
                        ThresholdWindow::Infeasible { gap } => {
                            return validation(format!(
                                "no admissible threshold: the window is empty by {gap:.6} nats; \
                                 raise the budgets or use a more informative model"
                            ));
                        }
                    }
                }
                _ => return validation("pass either --tau or both --eps-fn and --eps-fp"),
            };
            let scores = score_matrix(&pair, &model)?;
            let started = Instant::now();
            let predicted = bht_align(&scores, tau);
            let wall_time = started.elapsed();
            let total_score = retained_score_sum(&scores, &predicted);
            let (truth, false_negatives, false_positives, exact) =
                score_against_truth(&predicted, truth.as_deref())?;
            if let Some(path) = out {
                io::write_matching_csv(&path, &predicted)?;
            }
            print_report(&AlignmentReport {
                predicted,
                truth,
                false_negatives,
                false_positives,
                exact,
                total_score,
                threshold: Some(tau),
                wall_time,
                seed: derive_trial_seed(seed, 0),
            })
        }
        Command::Sweep { config, out, threads } => {
            let config = SweepConfig::from_file(&config)?;
            let out = match out.or_else(|| config.output_dir.clone()) {
                Some(out) => out,
                None => {
                    return validation(
                        "no output directory: pass --out or set output_dir in the config",
                    );
                }
            };
            let cells = match threads {
                None => run_sweep(&config, &out)?,
                Some(threads) => {
                    if threads == 0 {
                        return validation("--threads must be positive");
                    }
                    let pool = rayon::ThreadPoolBuilder::new()
                        .num_threads(threads)
                        .build()
                        .context("building the worker pool")?;
                    pool.install(|| run_sweep(&config, &out))?
                }
            };
            eprintln!("wrote {} cells under {}", cells.len(), out.display());
            Ok(())
        }
        Command::Report { cells, kind, out } => {
            let cells = dbalign_cli::sweep::read_cells_csv(&cells)?;
            let kind = match kind {
                ReportKind::Success => plot::PlotKind::SuccessVsInformation,
                ReportKind::Errors => plot::PlotKind::ErrorsVsInformation,
            };
            plot::emit_plot(&out, &cells, kind)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(error) = run(cli) {
        eprintln!("error: {error:#}");
        std::process::exit(exit_code(&error));
    }
}
