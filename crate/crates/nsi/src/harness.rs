//! Replicated simulation experiments.
//!
//! A spec expands into sweep settings. Every replication draws one instance
//! per setting from the seed `mix_seed(base_seed, r)`, tunes each method by
//! k-fold CV on that instance, refits at the chosen λ and scores the fit.
//! Records come back in (setting, replication, method) order whatever the
//! thread count, and each replication owns its random streams, so output is
//! bitwise independent of parallelism.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use nsi_core::metrics::evaluate;
use nsi_core::nsi::NsiConfig;
use nsi_core::precision::{
    known_precision, GlassoRuleParams, LogExponentParse, PrecisionEstimate, PrecisionSource,
};
use nsi_core::rng::mix_seed;
use nsi_core::simulate::{gen_instance, make_tridiagonal_precision, sparsity_split, SimulationConfig, SimulationInstance};
use nsi_core::tuning::{cv_lambda, default_lambda_grid, Method};
use nsi_core::Matrix;

use crate::table::{AggregateRow, Summary};
use crate::{Error, Result};

/// Salt separating the CV fold stream from the instance stream.
const CV_SALT: u64 = 0xc5_f01d;

/// Largest tolerated share of failed replications per (setting, method).
pub const MAX_FAILURE_SHARE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    /// Share of `p + q` given to the dense block.
    Ratio,
    Rho,
    N,
    /// Total dimension `p + q`, keeping the current dense share.
    Total,
}

impl SweepParam {
    fn name(self) -> &'static str {
        match self {
            SweepParam::Ratio => "ratio",
            SweepParam::Rho => "rho",
            SweepParam::N => "n",
            SweepParam::Total => "total",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

/// Precision matrix handed to NSI and the plug-in fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase", deny_unknown_fields)]
pub enum PrecisionChoice {
    /// The generator's true precision of the `W` block.
    Known,
    Identity,
    Ridge {
        eps: f64,
    },
    Glasso {
        #[serde(default = "one")]
        m: f64,
        #[serde(default = "one")]
        alpha: f64,
        #[serde(default = "default_tau")]
        tau: f64,
        #[serde(default)]
        parse: LogParse,
        #[serde(default = "default_glasso_iter")]
        max_iter: usize,
        #[serde(default = "default_glasso_tol")]
        tol: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn default_tau() -> f64 {
    GlassoRuleParams::default().tau
}

fn default_glasso_iter() -> usize {
    100
}

fn default_glasso_tol() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LogParse {
    #[default]
    PowerOfLog,
    LogOfPower,
}

impl PrecisionChoice {
    pub fn default_glasso() -> Self {
        let r = GlassoRuleParams::default();
        PrecisionChoice::Glasso {
            m: r.m,
            alpha: r.alpha,
            tau: r.tau,
            parse: LogParse::PowerOfLog,
            max_iter: default_glasso_iter(),
            tol: default_glasso_tol(),
        }
    }

    /// The estimator for data without a known truth. `Known` has none.
    pub fn source(&self) -> Option<PrecisionSource> {
        Some(match *self {
            PrecisionChoice::Known => return None,
            PrecisionChoice::Identity => PrecisionSource::Identity,
            PrecisionChoice::Ridge { eps } => PrecisionSource::RidgeInverse { eps },
            PrecisionChoice::Glasso {
                m,
                alpha,
                tau,
                parse,
                max_iter,
                tol,
            } => PrecisionSource::GraphicalLasso {
                rule: GlassoRuleParams { m, alpha, tau },
                parse: match parse {
                    LogParse::PowerOfLog => LogExponentParse::PowerOfLog,
                    LogParse::LogOfPower => LogExponentParse::LogOfPower,
                },
                max_iter,
                tol,
            },
        })
    }

    pub fn estimate_for(&self, inst: &SimulationInstance) -> Result<PrecisionEstimate> {
        match self.source() {
            Some(src) => Ok(src.estimate(inst.data.w())?),
            None => {
                let omega = inst.truth.omega.clone().ok_or_else(|| {
                    Error::Experiment("known precision requested but the design has no W block".into())
                })?;
                Ok(known_precision(omega)?)
            }
        }
    }

    pub fn estimate_without_truth(&self, w: &Matrix) -> Result<PrecisionEstimate> {
        match self.source() {
            Some(src) => Ok(src.estimate(w)?),
            None => Err(Error::Usage(
                "precision.source `known` needs simulated data; use glasso, ridge or identity".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub design: SimulationConfig,
    pub sweep: Vec<SweepAxis>,
    pub methods: Vec<Method>,
    pub replications: usize,
    pub base_seed: u64,
    pub cv_folds: usize,
    pub grid_len: usize,
    pub grid_min_ratio: f64,
    pub precision: PrecisionChoice,
    pub fit: NsiConfig,
    pub zero_tol: f64,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            design: SimulationConfig::default(),
            sweep: Vec::new(),
            methods: vec![Method::Nsi, Method::Lasso],
            replications: 100,
            base_seed: 0,
            cv_folds: 10,
            grid_len: 50,
            grid_min_ratio: 1e-3,
            precision: PrecisionChoice::Known,
            fit: NsiConfig::default(),
            zero_tol: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Setting {
    pub label: String,
    pub design: SimulationConfig,
}

impl ExperimentSpec {
    /// Cartesian product of the sweep axes, first axis outermost. Ratios are
    /// applied after every other axis so they split the final `p + q`.
    pub fn settings(&self) -> Result<Vec<Setting>> {
        let mut combos: Vec<Vec<(SweepParam, f64)>> = vec![Vec::new()];
        for axis in &self.sweep {
            if axis.values.is_empty() {
                return Err(Error::Usage(format!("sweep axis `{}` has no values", axis.param.name())));
            }
            combos = combos
                .into_iter()
                .flat_map(|c| {
                    axis.values.iter().map(move |&v| {
                        let mut c = c.clone();
                        c.push((axis.param, v));
                        c
                    })
                })
                .collect();
        }
        combos
            .into_iter()
            .map(|c| {
                let mut d = self.design;
                let mut ratio = None;
                for &(param, v) in &c {
                    match param {
                        SweepParam::Rho => d.rho = v,
                        SweepParam::N => d.n = whole(v, "n")?,
                        SweepParam::Total => {
                            let share = d.q as f64 / (d.p + d.q) as f64;
                            let (p, q) = sparsity_split(whole(v, "total")?, share)?;
                            d.p = p;
                            d.q = q;
                        }
                        SweepParam::Ratio => ratio = Some(v),
                    }
                }
                if let Some(r) = ratio {
                    let (p, q) = sparsity_split(d.p + d.q, r)?;
                    d.p = p;
                    d.q = q;
                }
                let label = if c.is_empty() {
                    format!("p={},q={},n={}", d.p, d.q, d.n)
                } else {
                    c.iter()
                        .map(|(param, v)| format!("{}={}", param.name(), v))
                        .collect::<Vec<_>>()
                        .join(",")
                };
                Ok(Setting { label, design: d })
            })
            .collect()
    }

    pub fn validate(&self) -> Result<Vec<Setting>> {
        if self.replications == 0 {
            return Err(Error::Usage("replications must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Usage("no methods selected".into()));
        }
        if self.cv_folds < 2 {
            return Err(Error::Usage("cv folds must be at least 2".into()));
        }
        if self.grid_len == 0 || !(self.grid_min_ratio > 0.0 && self.grid_min_ratio < 1.0) {
            return Err(Error::Usage("grid needs len >= 1 and min_ratio in (0, 1)".into()));
        }
        let settings = self.settings()?;
        for s in &settings {
            s.design.validate()?;
            make_tridiagonal_precision(s.design.p + s.design.q, s.design.rho)?;
            if self.cv_folds > s.design.n {
                return Err(Error::Usage(format!(
                    "setting {}: {} folds exceed n = {}",
                    s.label, self.cv_folds, s.design.n
                )));
            }
        }
        Ok(settings)
    }
}

fn whole(v: f64, name: &str) -> Result<usize> {
    if v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
        Ok(v as usize)
    } else {
        Err(Error::Usage(format!("sweep value {v} for `{name}` must be a positive integer")))
    }
}

/// One (setting, method, replication) outcome, persisted as a JSON line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub setting: String,
    pub setting_index: usize,
    pub method: String,
    pub replication: usize,
    pub seed: u64,
    pub lambda: Option<f64>,
    pub cv_index: Option<usize>,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    pub l1: Option<f64>,
    pub l2: Option<f64>,
    pub fpr: Option<f64>,
    pub tpr: Option<f64>,
    pub nz: Option<usize>,
    pub error: Option<String>,
}

impl ReplicationRecord {
    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub records: Vec<ReplicationRecord>,
    pub rows: Vec<AggregateRow>,
}

/// Runs every replication and aggregates. Failing replications are kept in
/// `records` with their error; more than [`MAX_FAILURE_SHARE`] failures for
/// any (setting, method) is an experiment error.
pub fn run_replications(spec: &ExperimentSpec, threads: usize) -> Result<ExperimentOutput> {
    let records = run_records(spec, threads)?;
    check_failures(&records, spec.replications)?;
    let rows = aggregate(&records);
    Ok(ExperimentOutput { records, rows })
}

/// Per-replication records without the failure check. `threads == 0` uses
/// every available core.
pub fn run_records(spec: &ExperimentSpec, threads: usize) -> Result<Vec<ReplicationRecord>> {
    let settings = spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Experiment(format!("thread pool: {e}")))?;
    let tasks: Vec<(usize, usize)> = (0..settings.len())
        .flat_map(|s| (0..spec.replications).map(move |r| (s, r)))
        .collect();
    info!(
        "running {} settings x {} replications x {} methods on {} threads",
        settings.len(),
        spec.replications,
        spec.methods.len(),
        pool.current_num_threads()
    );
    let per_task: Vec<Vec<ReplicationRecord>> = pool.install(|| {
        use rayon::prelude::*;
        tasks
            .par_iter()
            .map(|&(s, r)| run_one(spec, s, &settings[s], r))
            .collect()
    });
    let records: Vec<ReplicationRecord> = per_task.into_iter().flatten().collect();
    for rec in records.iter().filter(|r| !r.succeeded()) {
        warn!(
            "replication {} ({}, {}) failed with seed {}: {}",
            rec.replication,
            rec.setting,
            rec.method,
            rec.seed,
            rec.error.as_deref().unwrap_or("")
        );
    }
    Ok(records)
}

fn run_one(spec: &ExperimentSpec, s: usize, setting: &Setting, r: usize) -> Vec<ReplicationRecord> {
    let seed = mix_seed(spec.base_seed, r as u64);
    let blank = |method: Method| ReplicationRecord {
        setting: setting.label.clone(),
        setting_index: s,
        method: method.name().to_string(),
        replication: r,
        seed,
        lambda: None,
        cv_index: None,
        iterations: None,
        converged: None,
        l1: None,
        l2: None,
        fpr: None,
        tpr: None,
        nz: None,
        error: None,
    };
    let prepared = (|| -> Result<_> {
        let inst = gen_instance(&SimulationConfig {
            seed,
            ..setting.design
        })?;
        let omega = spec.precision.estimate_for(&inst)?;
        let grid = default_lambda_grid(&inst.data, spec.grid_len, spec.grid_min_ratio)?;
        Ok((inst, omega, grid))
    })();
    let (inst, omega, grid) = match prepared {
        Ok(v) => v,
        Err(e) => {
            let msg = e.to_string();
            return spec
                .methods
                .iter()
                .map(|&m| ReplicationRecord {
                    error: Some(msg.clone()),
                    ..blank(m)
                })
                .collect();
        }
    };
    let cv_seed = mix_seed(seed, CV_SALT);
    spec.methods
        .iter()
        .map(|&method| {
            let mut rec = blank(method);
            let outcome = (|| -> Result<()> {
                let cv = cv_lambda(&inst.data, &omega, &grid, spec.cv_folds, cv_seed, method, &spec.fit)?;
                rec.lambda = Some(cv.best_lambda);
                rec.cv_index = Some(cv.best_index);
                let cfg = NsiConfig {
                    lambda: cv.best_lambda,
                    ..spec.fit
                };
                let est = method.fit(&inst.data, &omega, &cfg)?;
                let m = evaluate(&est, &inst.truth, spec.zero_tol, None)?;
                rec.iterations = Some(est.n_iterations);
                rec.converged = Some(est.converged);
                rec.l1 = Some(m.l1);
                rec.l2 = Some(m.l2);
                rec.fpr = m.fpr;
                rec.tpr = m.tpr;
                rec.nz = Some(m.nz);
                Ok(())
            })();
            if let Err(e) = outcome {
                rec.error = Some(e.to_string());
            }
            rec
        })
        .collect()
}

/// Errors when some (setting, method) lost more than the tolerated share of
/// its `replications` runs.
pub fn check_failures(records: &[ReplicationRecord], replications: usize) -> Result<()> {
    for (setting, method, group) in groups(records) {
        let failed = group.iter().filter(|r| !r.succeeded()).count();
        if failed as f64 > MAX_FAILURE_SHARE * replications as f64 {
            return Err(Error::Experiment(format!(
                "{failed} of {replications} replications failed for {setting} / {method}"
            )));
        }
    }
    Ok(())
}

fn groups(records: &[ReplicationRecord]) -> Vec<(String, String, Vec<&ReplicationRecord>)> {
    let mut out: Vec<(usize, String, String, Vec<&ReplicationRecord>)> = Vec::new();
    for rec in records {
        match out
            .iter_mut()
            .find(|(s, _, m, _)| *s == rec.setting_index && *m == rec.method)
        {
            Some(g) => g.3.push(rec),
            None => out.push((rec.setting_index, rec.setting.clone(), rec.method.clone(), vec![rec])),
        }
    }
    out.into_iter().map(|(_, s, m, g)| (s, m, g)).collect()
}

/// Mean and sample sd per (setting, method) over successful records, in
/// order of first appearance. Undefined rates are skipped.
pub fn aggregate(records: &[ReplicationRecord]) -> Vec<AggregateRow> {
    groups(records)
        .into_iter()
        .map(|(setting, method, group)| {
            let ok: Vec<&ReplicationRecord> = group.into_iter().filter(|r| r.succeeded()).collect();
            let collect = |f: &dyn Fn(&ReplicationRecord) -> Option<f64>| -> Vec<f64> {
                ok.iter().filter_map(|r| f(r)).collect()
            };
            AggregateRow {
                setting,
                method,
                replications: ok.len(),
                l2: Summary::of(&collect(&|r| r.l2)),
                l1: Summary::of(&collect(&|r| r.l1)),
                fpr: Summary::of(&collect(&|r| r.fpr)),
                tpr: Summary::of(&collect(&|r| r.tpr)),
                nz: Summary::of(&collect(&|r| r.nz.map(|v| v as f64))),
            }
        })
        .collect()
}

/// Median of the finite values; NaN when there are none.
pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

pub fn write_records(path: impl AsRef<Path>, records: &[ReplicationRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for rec in records {
        serde_json::to_writer(&mut w, rec)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_records(path: impl AsRef<Path>) -> Result<Vec<ReplicationRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            row: i + 1,
            column: e.column(),
            message: e.to_string(),
        })?);
    }
    Ok(out)
}
