//! Run configuration: command-line flags merged over a TOML file over
//! defaults.
//!
//! The resolved configuration is written as `manifest.toml` next to every
//! run's outputs and can be passed back through `--config`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use nsi_core::nsi::NsiConfig;
use nsi_core::simulate::SimulationConfig;
use nsi_core::tuning::Method;

use crate::harness::{ExperimentSpec, PrecisionChoice, SweepAxis};
use crate::screen::HoldoutConfig;
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "nsi", version, about = "Sparse/non-sparse regression estimators and simulation benchmarks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Draw one simulated instance and write it as CSV files.
    Simulate(Flags),
    /// Fit one method at a fixed λ.
    Fit(Flags),
    /// Choose λ by k-fold cross-validation, then refit.
    Cv(Flags),
    /// Replicated simulation study with aggregate tables.
    Bench(Flags),
    /// Correlation screen plus hold-out evaluation on CSV data.
    Screen(Flags),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for `bench` (0 = all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// nsi, lasso or plugin.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Correlation threshold for `screen`.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Replications for `bench`.
    #[arg(long)]
    pub reps: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Fit,
    Cv,
    Bench,
    Screen,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Fit => "fit",
            Command::Cv => "cv",
            Command::Bench => "bench",
            Command::Screen => "screen",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FileConfig {
    pub run: RunSection,
    pub design: DesignSection,
    pub bench: BenchSection,
    pub fit: FitSection,
    pub cv: CvSection,
    pub precision: PrecisionChoice,
    pub data: DataSection,
    pub screen: ScreenSection,
    pub sweep: Vec<SweepAxis>,
}

impl Default for FileConfig {
    fn default() -> Self {
        FileConfig {
            run: RunSection::default(),
            design: DesignSection::default(),
            bench: BenchSection::default(),
            fit: FitSection::default(),
            cv: CvSection::default(),
            precision: PrecisionChoice::Known,
            data: DataSection::default(),
            screen: ScreenSection::default(),
            sweep: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    /// Version of the tool that wrote the manifest.
    pub version: String,
    pub seed: u64,
    /// 0 uses every available core.
    pub threads: usize,
    pub out: PathBuf,
    pub method: String,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: 0,
            threads: 0,
            out: PathBuf::from("nsi-out"),
            method: "nsi".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DesignSection {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub rho: f64,
    pub beta_value: f64,
    pub beta_support: usize,
    pub gamma_value: f64,
    pub sigma: f64,
}

impl Default for DesignSection {
    fn default() -> Self {
        let d = SimulationConfig::default();
        DesignSection {
            n: d.n,
            p: d.p,
            q: d.q,
            rho: d.rho,
            beta_value: d.beta_value,
            beta_support: d.beta_support,
            gamma_value: d.gamma_value,
            sigma: d.sigma,
        }
    }
}

impl DesignSection {
    pub fn simulation(&self, seed: u64) -> SimulationConfig {
        SimulationConfig {
            n: self.n,
            p: self.p,
            q: self.q,
            rho: self.rho,
            beta_value: self.beta_value,
            beta_support: self.beta_support,
            gamma_value: self.gamma_value,
            sigma: self.sigma,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchSection {
    pub replications: usize,
    pub methods: Vec<String>,
}

impl Default for BenchSection {
    fn default() -> Self {
        BenchSection {
            replications: 100,
            methods: vec!["nsi".into(), "lasso".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSection {
    pub lambda: Option<f64>,
    pub max_outer_iter: usize,
    pub tol: f64,
    pub standardize: bool,
    /// Magnitude at or below which a coefficient counts as zero.
    pub zero_tol: f64,
    pub init_max_sweeps: usize,
}

impl Default for FitSection {
    fn default() -> Self {
        let d = NsiConfig::default();
        FitSection {
            lambda: None,
            max_outer_iter: d.max_outer_iter,
            tol: d.tol,
            standardize: d.standardize,
            zero_tol: d.zero_tol,
            init_max_sweeps: d.init_max_sweeps,
        }
    }
}

impl FitSection {
    pub fn nsi_config(&self) -> NsiConfig {
        NsiConfig {
            lambda: self.lambda.unwrap_or(0.0),
            max_outer_iter: self.max_outer_iter,
            tol: self.tol,
            standardize: self.standardize,
            zero_tol: self.zero_tol,
            init_max_sweeps: self.init_max_sweeps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CvSection {
    pub folds: usize,
    pub grid_len: usize,
    pub grid_min_ratio: f64,
}

impl Default for CvSection {
    fn default() -> Self {
        CvSection {
            folds: 10,
            grid_len: 50,
            grid_min_ratio: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    pub y: Option<PathBuf>,
    pub z: Option<PathBuf>,
    pub w: Option<PathBuf>,
    /// Unsplit design for `screen`.
    pub x: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScreenSection {
    pub threshold: f64,
    pub split_fraction: f64,
    pub dense_margin: f64,
}

impl Default for ScreenSection {
    fn default() -> Self {
        ScreenSection {
            threshold: 0.5,
            split_fraction: 0.7,
            dense_margin: 0.05,
        }
    }
}

/// Fully resolved invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub config_path: Option<PathBuf>,
    pub file: FileConfig,
}

/// Parses `argv` (program name first) and resolves it against the
/// configuration file it names.
pub fn parse_args<I, T>(argv: I) -> Result<RunConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| Error::Usage(e.render().to_string()))?;
    resolve(cli)
}

pub fn resolve(cli: Cli) -> Result<RunConfig> {
    let (command, flags) = match cli.command {
        CliCommand::Simulate(f) => (Command::Simulate, f),
        CliCommand::Fit(f) => (Command::Fit, f),
        CliCommand::Cv(f) => (Command::Cv, f),
        CliCommand::Bench(f) => (Command::Bench, f),
        CliCommand::Screen(f) => (Command::Screen, f),
    };
    if command == Command::Bench && flags.config.is_none() {
        return Err(Error::Usage("bench requires --config <FILE>".into()));
    }
    let mut file = match &flags.config {
        Some(path) => load_config(path)?,
        None => FileConfig::default(),
    };
    apply_flags(&mut file, &flags);
    file.run.version = env!("CARGO_PKG_VERSION").to_string();
    let cfg = RunConfig {
        command,
        config_path: flags.config,
        file,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text).map_err(|e| match e {
        Error::Usage(msg) => Error::Usage(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_config(text: &str) -> Result<FileConfig> {
    let file: FileConfig = toml::from_str(text).map_err(|e| Error::Usage(e.to_string()))?;
    let current = env!("CARGO_PKG_VERSION");
    if file.run.version != current {
        log::warn!(
            "configuration was written by version {}, running {}",
            file.run.version,
            current
        );
    }
    Ok(file)
}

fn apply_flags(file: &mut FileConfig, flags: &Flags) {
    if let Some(v) = flags.seed {
        file.run.seed = v;
    }
    if let Some(v) = flags.threads {
        file.run.threads = v;
    }
    if let Some(v) = &flags.method {
        file.run.method = v.clone();
    }
    if let Some(v) = flags.lambda {
        file.fit.lambda = Some(v);
    }
    if let Some(v) = flags.threshold {
        file.screen.threshold = v;
    }
    if let Some(v) = &flags.out {
        file.run.out = v.clone();
    }
    if let Some(v) = flags.reps {
        file.bench.replications = v;
    }
}

fn parse_method(key: &str, name: &str) -> Result<Method> {
    Method::parse(name).ok_or_else(|| {
        Error::Usage(format!("{key}: unknown method `{name}` (expected nsi, lasso or plugin)"))
    })
}

impl RunConfig {
    pub fn method(&self) -> Result<Method> {
        parse_method("method", &self.file.run.method)
    }

    pub fn bench_methods(&self) -> Result<Vec<Method>> {
        self.file
            .bench
            .methods
            .iter()
            .map(|m| parse_method("bench.methods", m))
            .collect()
    }

    pub fn nsi_config(&self) -> NsiConfig {
        self.file.fit.nsi_config()
    }

    pub fn simulation(&self) -> SimulationConfig {
        self.file.design.simulation(self.file.run.seed)
    }

    pub fn experiment_spec(&self) -> Result<ExperimentSpec> {
        let f = &self.file;
        Ok(ExperimentSpec {
            design: self.simulation(),
            sweep: f.sweep.clone(),
            methods: self.bench_methods()?,
            replications: f.bench.replications,
            base_seed: f.run.seed,
            cv_folds: f.cv.folds,
            grid_len: f.cv.grid_len,
            grid_min_ratio: f.cv.grid_min_ratio,
            precision: f.precision.clone(),
            fit: self.nsi_config(),
            zero_tol: f.fit.zero_tol,
        })
    }

    pub fn holdout_config(&self) -> Result<HoldoutConfig> {
        let f = &self.file;
        Ok(HoldoutConfig {
            split_fraction: f.screen.split_fraction,
            threshold: f.screen.threshold,
            dense_margin: f.screen.dense_margin,
            methods: self.bench_methods()?,
            seed: f.run.seed,
            cv_folds: f.cv.folds,
            grid_len: f.cv.grid_len,
            grid_min_ratio: f.cv.grid_min_ratio,
            precision: f.precision.clone(),
            fit: self.nsi_config(),
        })
    }

    pub fn manifest(&self) -> Result<String> {
        toml::to_string(&self.file).map_err(|e| Error::Usage(format!("manifest encoding: {e}")))
    }

    fn validate(&self) -> Result<()> {
        let f = &self.file;
        let usage = |msg: String| Err(Error::Usage(msg));
        if matches!(self.command, Command::Fit | Command::Cv) {
            self.method()?;
        }
        if matches!(self.command, Command::Bench | Command::Screen) {
            self.bench_methods()?;
        }
        if f.bench.replications == 0 {
            return usage("--reps / bench.replications must be at least 1".into());
        }
        if let Some(l) = f.fit.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return usage(format!("--lambda / fit.lambda must be finite and >= 0, got {l}"));
            }
        }
        if !(f.fit.tol > 0.0) {
            return usage("fit.tol must be positive".into());
        }
        if !(0.0..=1.0).contains(&f.screen.threshold) {
            return usage(format!(
                "--threshold / screen.threshold must lie in [0, 1], got {}",
                f.screen.threshold
            ));
        }
        if !(f.screen.split_fraction > 0.0 && f.screen.split_fraction < 1.0) {
            return usage("screen.split_fraction must lie in (0, 1)".into());
        }
        if f.cv.folds < 2 {
            return usage("cv.folds must be at least 2".into());
        }
        if f.cv.grid_len == 0 || !(f.cv.grid_min_ratio > 0.0 && f.cv.grid_min_ratio < 1.0) {
            return usage("cv.grid_len must be >= 1 and cv.grid_min_ratio in (0, 1)".into());
        }
        let d = &f.data;
        match self.command {
            Command::Fit if f.fit.lambda.is_none() => {
                return usage("fit requires --lambda (or fit.lambda)".into())
            }
            Command::Screen => {
                if d.x.is_none() {
                    return usage("screen requires data.x".into());
                }
                if d.y.is_none() {
                    return usage("screen requires data.y".into());
                }
            }
            _ => {}
        }
        if matches!(self.command, Command::Fit | Command::Cv) && d.y.is_some() {
            if d.z.is_none() {
                return usage("data.y is set but data.z is missing".into());
            }
            if d.w.is_none() {
                return usage("data.y is set but data.w is missing".into());
            }
        }
        if self.command == Command::Simulate || (d.y.is_none() && self.command != Command::Screen) {
            self.simulation().validate()?;
        }
        Ok(())
    }
}
