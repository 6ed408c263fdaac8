//! The alternating sparse/non-sparse iteration.
//!
//! Step 1 starts the dense block from the precision plug-in
//! `γ̂⁰ = Ω̂ Wᵀy / n` and fits the sparse block by lasso with `W γ̂⁰` held as
//! an offset. Step 2 then sweeps, until the coefficients stop moving:
//!
//! * every `γ_j` in ascending order: `γ_j ← W_jᵀ(y − ŷ₋ⱼ)/n`, the exact
//!   least-squares coordinate minimizer;
//! * every `β_k` in ascending order: `β_k ← S(Z_kᵀ(y − ŷ₋ₖ)/n, λ)`.
//!
//! Both updates assume unit-norm columns, so with `standardize` set the
//! columns of `Z` and `W` are rescaled to `X_kᵀX_k/n = 1` and coefficients
//! are mapped back on return. Each update exactly minimizes
//!
//! ```text
//! (1/2n) ‖y − Zβ − Wγ‖² + λ ‖β‖₁
//! ```
//!
//! in one coordinate, so this global loss (evaluated on the working scale)
//! never increases. `Ω̂` only shapes the starting point.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::{axpy, Matrix};
use crate::precision::PrecisionEstimate;
use crate::sparse::{
    half_mean_square, l1_norm, lasso_cd_with_trace, lasso_kkt_from_residual, LassoConfig,
    WorkingDesign,
};
use crate::types::{CoefficientEstimate, Dataset};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NsiConfig {
    pub lambda: f64,
    pub max_outer_iter: usize,
    pub tol: f64,
    pub standardize: bool,
    pub zero_tol: f64,
    /// Sweep cap for the Step-1 lasso.
    pub init_max_sweeps: usize,
}

impl Default for NsiConfig {
    fn default() -> Self {
        NsiConfig {
            lambda: 0.0,
            max_outer_iter: 500,
            tol: 1e-7,
            standardize: true,
            zero_tol: 0.0,
            init_max_sweeps: 1000,
        }
    }
}

impl NsiConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        NsiConfig {
            lambda,
            ..Default::default()
        }
    }

    fn lasso(&self) -> LassoConfig {
        LassoConfig {
            lambda: self.lambda,
            max_sweeps: self.init_max_sweeps,
            tol: self.tol,
            standardize: self.standardize,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.max_outer_iter == 0 {
            return Err(Error::input("max_outer_iter must be at least 1"));
        }
        if !(self.zero_tol >= 0.0) {
            return Err(Error::input("zero_tol must be non-negative"));
        }
        // lambda and tol are checked by the lasso config
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub estimate: CoefficientEstimate,
    /// Global loss after Step 1 and after every Step-2 sweep.
    pub objective_trace: Vec<f64>,
    /// `max_j |W_jᵀ r| / n` at exit, on the working (standardized) columns.
    pub gamma_stationarity: f64,
    /// Lasso KKT violation of `β̂` at exit, on the working columns.
    pub beta_kkt: f64,
}

fn check_omega(data: &Dataset, omega: &PrecisionEstimate) -> Result<()> {
    if data.q() > 0 {
        Error::check_dim("precision dimension vs q", data.q(), omega.dim())?;
    }
    Ok(())
}

/// `Ω̂ Wᵀ v / n`.
fn precision_plugin(w: &Matrix, omega: &PrecisionEstimate, v: &[f64]) -> Result<Vec<f64>> {
    if w.cols() == 0 {
        return Ok(Vec::new());
    }
    let n = v.len() as f64;
    let mut wtv = w.tr_mul_vec(v)?;
    wtv.iter_mut().for_each(|x| *x /= n);
    omega.omega_hat.as_matrix().mul_vec(&wtv)
}

/// Step 1, plus the lasso objective trace.
fn initialize(
    data: &Dataset,
    omega: &PrecisionEstimate,
    config: &NsiConfig,
) -> Result<(CoefficientEstimate, Vec<f64>)> {
    config.validate()?;
    check_omega(data, omega)?;
    let gamma0 = precision_plugin(data.w(), omega, data.y())?;
    let offset = data.w().mul_vec(&gamma0)?;
    let (lasso, trace) = lasso_cd_with_trace(data.y(), data.z(), &offset, &config.lasso())?;
    let estimate = CoefficientEstimate {
        beta_hat: lasso.beta_hat,
        gamma_hat: gamma0,
        lambda: config.lambda,
        n_iterations: lasso.n_iterations,
        converged: lasso.converged,
        final_objective: lasso.final_objective,
    };
    Ok((estimate, trace))
}

/// Step 1: `γ̂⁰ = Ω̂ Wᵀy/n`, then `β̂⁰` by lasso with offset `W γ̂⁰`.
pub fn nsi_init(
    data: &Dataset,
    omega: &PrecisionEstimate,
    config: &NsiConfig,
) -> Result<CoefficientEstimate> {
    initialize(data, omega, config).map(|(est, _)| est)
}

/// The non-iterative plug-in baseline: Step 1 alone.
pub fn plugin_fit(
    data: &Dataset,
    omega: &PrecisionEstimate,
    config: &NsiConfig,
) -> Result<CoefficientEstimate> {
    nsi_init(data, omega, config)
}

fn working_residual(
    y: &[f64],
    wz: &WorkingDesign,
    b: &[f64],
    ww: &WorkingDesign,
    g: &[f64],
) -> Vec<f64> {
    let mut r = y.to_vec();
    for (k, &bk) in b.iter().enumerate() {
        if bk != 0.0 {
            axpy(-bk, wz.cols.col(k), &mut r);
        }
    }
    for (j, &gj) in g.iter().enumerate() {
        if gj != 0.0 {
            axpy(-gj, ww.cols.col(j), &mut r);
        }
    }
    r
}

/// Step 1 followed by Step-2 sweeps.
pub fn nsi_fit(data: &Dataset, omega: &PrecisionEstimate, config: &NsiConfig) -> Result<FitResult> {
    let (init, lasso_trace) = initialize(data, omega, config)?;
    let wz = WorkingDesign::new(data.z(), config.standardize);
    let lambda = config.lambda;

    if data.q() == 0 {
        // Step 2 would only repeat the lasso sweeps Step 1 already ran to
        // convergence.
        let r = working_residual(data.y(), &wz, &wz.to_working(&init.beta_hat), &wz, &[]);
        let beta_kkt = lasso_kkt_from_residual(&wz.cols, &r, &wz.to_working(&init.beta_hat), lambda);
        return Ok(FitResult {
            estimate: init,
            objective_trace: lasso_trace,
            gamma_stationarity: 0.0,
            beta_kkt,
        });
    }

    let ww = WorkingDesign::new(data.w(), config.standardize);
    let mut b = wz.to_working(&init.beta_hat);
    let mut g = ww.to_working(&init.gamma_hat);
    let mut r = working_residual(data.y(), &wz, &b, &ww, &g);
    let objective = |r: &[f64], b: &[f64]| half_mean_square(r) + lambda * l1_norm(b);

    let mut trace = alloc::vec![objective(&r, &b)];
    let mut converged = false;
    let mut outer = 0;
    while outer < config.max_outer_iter {
        outer += 1;
        let mut max_change: f64 = 0.0;
        for (j, gj) in g.iter_mut().enumerate() {
            let new = ww.free_step(j, *gj, &mut r);
            max_change = max_change.max(libm::fabs(new - *gj));
            *gj = new;
        }
        for (k, bk) in b.iter_mut().enumerate() {
            let new = wz.penalized_step(k, *bk, &mut r, lambda);
            max_change = max_change.max(libm::fabs(new - *bk));
            *bk = new;
        }
        let obj = objective(&r, &b);
        if !obj.is_finite() {
            return Err(Error::NonFinite {
                context: "non-sparse iteration",
                iteration: outer,
            });
        }
        trace.push(obj);
        if max_change < config.tol {
            converged = true;
            break;
        }
    }

    let r = working_residual(data.y(), &wz, &b, &ww, &g);
    let estimate = CoefficientEstimate {
        beta_hat: wz.to_original(&b),
        gamma_hat: ww.to_original(&g),
        lambda,
        n_iterations: outer,
        converged,
        final_objective: *trace.last().expect("trace starts non-empty"),
    };
    Ok(FitResult {
        estimate,
        objective_trace: trace,
        gamma_stationarity: ww.max_abs_gradient(&r),
        beta_kkt: lasso_kkt_from_residual(&wz.cols, &r, &b, lambda),
    })
}

/// Reference estimator built from the true dense coefficients:
/// `β̂ᵒ` is the lasso with offset `W γ`, then `γ̂ᵒ = Ω̂ Wᵀ(y − Z β̂ᵒ)/n`.
pub fn oracle_fit(
    data: &Dataset,
    true_gamma: &[f64],
    omega: &PrecisionEstimate,
    config: &NsiConfig,
) -> Result<CoefficientEstimate> {
    config.validate()?;
    check_omega(data, omega)?;
    Error::check_dim("oracle_fit: true gamma length", data.q(), true_gamma.len())?;
    let offset = data.w().mul_vec(true_gamma)?;
    let (lasso, _) = lasso_cd_with_trace(data.y(), data.z(), &offset, &config.lasso())?;
    let fitted_sparse = data.z().mul_vec(&lasso.beta_hat)?;
    let partial: Vec<f64> = data.y().iter().zip(&fitted_sparse).map(|(a, b)| a - b).collect();
    let gamma_hat = precision_plugin(data.w(), omega, &partial)?;
    Ok(CoefficientEstimate {
        gamma_hat,
        ..lasso
    })
}
