//! Subcommand implementations behind the `nsi` binary.

use std::io::Write;
use std::path::Path;

use log::info;
use serde::Serialize;

use nsi_core::metrics::evaluate;
use nsi_core::precision::PrecisionEstimate;
use nsi_core::simulate::{gen_instance, SimulationInstance};
use nsi_core::tuning::{cv_lambda, default_lambda_grid};
use nsi_core::{CoefficientEstimate, Dataset, MetricsReport, TrueModel};

use crate::config::{Command, RunConfig};
use crate::harness::{aggregate, check_failures, run_records, write_records};
use crate::io::{ensure_dir, load_matrix_csv, load_vector_csv, write_file, write_matrix_csv, write_vector_csv};
use crate::screen::holdout_eval;
use crate::table::{emit_table, render_table, TableFormat};
use crate::{Error, Result};

pub const MANIFEST: &str = "manifest.toml";
pub const RECORDS: &str = "records.jsonl";

/// Runs the resolved command, writing the manifest first. Summaries go to
/// stdout.
pub fn execute(cfg: &RunConfig) -> Result<()> {
    execute_to(cfg, &mut std::io::stdout().lock())
}

/// [`execute`] with the human-readable summary sent to `echo`.
pub fn execute_to(cfg: &RunConfig, echo: &mut dyn Write) -> Result<()> {
    let out = &cfg.file.run.out;
    ensure_dir(out)?;
    write_file(out.join(MANIFEST), cfg.manifest()?.as_bytes())?;
    info!("{} -> {}", cfg.command.name(), out.display());
    match cfg.command {
        Command::Simulate => simulate(cfg, out, echo),
        Command::Fit => fit(cfg, out, echo),
        Command::Cv => cv(cfg, out, echo),
        Command::Bench => bench(cfg, out, echo),
        Command::Screen => screen(cfg, out, echo),
    }
}

fn simulate(cfg: &RunConfig, out: &Path, echo: &mut dyn Write) -> Result<()> {
    let inst = gen_instance(&cfg.simulation())?;
    crate::io::export_instance(out, &inst)?;
    if let Some(omega) = &inst.truth.omega {
        write_matrix_csv(out.join("omega_w.csv"), omega.as_matrix())?;
    }
    say(
        echo,
        format_args!(
            "wrote instance n={} p={} q={} to {}\n",
            inst.data.n(),
            inst.data.p(),
            inst.data.q(),
            out.display()
        ),
    )
}

/// The dataset from `[data]` or, without paths, a simulated instance.
fn load_problem(cfg: &RunConfig) -> Result<(Dataset, Option<TrueModel>, PrecisionEstimate)> {
    let d = &cfg.file.data;
    match (&d.y, &d.z, &d.w) {
        (Some(y), Some(z), Some(w)) => {
            let data = Dataset::new(load_vector_csv(y)?, load_matrix_csv(z)?, load_matrix_csv(w)?)?;
            let omega = cfg.file.precision.estimate_without_truth(data.w())?;
            Ok((data, None, omega))
        }
        _ => {
            let inst: SimulationInstance = gen_instance(&cfg.simulation())?;
            let omega = cfg.file.precision.estimate_for(&inst)?;
            Ok((inst.data, Some(inst.truth), omega))
        }
    }
}

#[derive(Serialize)]
struct FitSummary<'a> {
    method: &'a str,
    lambda: f64,
    iterations: usize,
    converged: bool,
    objective: f64,
    metrics: Option<MetricsJson>,
}

#[derive(Serialize)]
struct MetricsJson {
    l1: f64,
    l2: f64,
    fpr: Option<f64>,
    tpr: Option<f64>,
    nz: usize,
}

impl From<MetricsReport> for MetricsJson {
    fn from(m: MetricsReport) -> Self {
        MetricsJson {
            l1: m.l1,
            l2: m.l2,
            fpr: m.fpr,
            tpr: m.tpr,
            nz: m.nz,
        }
    }
}

fn write_estimate(
    cfg: &RunConfig,
    out: &Path,
    est: &CoefficientEstimate,
    truth: Option<&TrueModel>,
    echo: &mut dyn Write,
) -> Result<()> {
    write_vector_csv(out.join("beta_hat.csv"), &est.beta_hat)?;
    write_vector_csv(out.join("gamma_hat.csv"), &est.gamma_hat)?;
    let metrics = truth
        .map(|t| evaluate(est, t, cfg.file.fit.zero_tol, None))
        .transpose()?
        .map(MetricsJson::from);
    let summary = FitSummary {
        method: cfg.method()?.name(),
        lambda: est.lambda,
        iterations: est.n_iterations,
        converged: est.converged,
        objective: est.final_objective,
        metrics,
    };
    let json = serde_json::to_string_pretty(&summary)?;
    write_file(out.join("fit.json"), json.as_bytes())?;
    say(echo, format_args!("{json}\n"))
}

fn fit(cfg: &RunConfig, out: &Path, echo: &mut dyn Write) -> Result<()> {
    let (data, truth, omega) = load_problem(cfg)?;
    let est = cfg.method()?.fit(&data, &omega, &cfg.nsi_config())?;
    write_estimate(cfg, out, &est, truth.as_ref(), echo)
}

#[derive(Serialize)]
struct CvSummary<'a> {
    method: &'a str,
    folds: usize,
    seed: u64,
    lambda_grid: &'a [f64],
    cv_error: &'a [f64],
    best_lambda: f64,
    best_index: usize,
}

fn cv(cfg: &RunConfig, out: &Path, echo: &mut dyn Write) -> Result<()> {
    let (data, truth, omega) = load_problem(cfg)?;
    let method = cfg.method()?;
    let c = &cfg.file.cv;
    let grid = default_lambda_grid(&data, c.grid_len, c.grid_min_ratio)?;
    let base = cfg.nsi_config();
    let res = cv_lambda(&data, &omega, &grid, c.folds, cfg.file.run.seed, method, &base)?;
    let summary = CvSummary {
        method: method.name(),
        folds: c.folds,
        seed: cfg.file.run.seed,
        lambda_grid: &res.lambda_grid,
        cv_error: &res.cv_error,
        best_lambda: res.best_lambda,
        best_index: res.best_index,
    };
    write_file(out.join("cv.json"), serde_json::to_string_pretty(&summary)?.as_bytes())?;
    let est = method.fit(
        &data,
        &omega,
        &nsi_core::nsi::NsiConfig {
            lambda: res.best_lambda,
            ..base
        },
    )?;
    write_estimate(cfg, out, &est, truth.as_ref(), echo)
}

fn bench(cfg: &RunConfig, out: &Path, echo: &mut dyn Write) -> Result<()> {
    let spec = cfg.experiment_spec()?;
    let records = run_records(&spec, cfg.file.run.threads)?;
    write_records(out.join(RECORDS), &records)?;
    check_failures(&records, spec.replications)?;
    let rows = aggregate(&records);
    emit_table(&rows, out.join("table.csv"), TableFormat::Csv)?;
    emit_table(&rows, out.join("table.md"), TableFormat::Markdown)?;
    say(echo, format_args!("{}", render_table(&rows, TableFormat::Markdown)?))
}

fn screen(cfg: &RunConfig, out: &Path, echo: &mut dyn Write) -> Result<()> {
    let d = &cfg.file.data;
    let (xp, yp) = match (&d.x, &d.y) {
        (Some(x), Some(y)) => (x, y),
        _ => return Err(Error::Usage("screen requires data.x and data.y".into())),
    };
    let x = load_matrix_csv(xp)?;
    let y = load_vector_csv(yp)?;
    let report = holdout_eval(&x, &y, &cfg.holdout_config()?)?;
    let json = serde_json::to_string_pretty(&report)?;
    write_file(out.join("screen.json"), json.as_bytes())?;
    say(
        echo,
        format_args!(
            "{} sparse / {} dense columns, {} fit rows, {} held out\n",
            report.z_columns.len(),
            report.w_columns.len(),
            report.train_rows.len(),
            report.test_rows.len()
        ),
    )?;
    for r in &report.rows {
        say(
            echo,
            format_args!("{:>8}  lambda={:<12.6}  test_mse={:.6}\n", r.method, r.lambda, r.test_mse),
        )?;
    }
    Ok(())
}

fn say(echo: &mut dyn Write, text: std::fmt::Arguments) -> Result<()> {
    echo.write_fmt(text).map_err(|e| Error::io("<stdout>", e))
}
