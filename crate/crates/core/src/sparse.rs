//! Soft-thresholding and the lasso coordinate-descent solver.
//!
//! `lasso_cd` minimizes
//!
//! ```text
//! (1/2n) ‖y − offset − X β‖² + λ ‖β‖₁
//! ```
//!
//! by cyclic coordinate descent in ascending column order. With
//! `standardize` set, columns are rescaled to `X_kᵀX_k/n = 1` before
//! fitting, so the coordinate update is exactly
//! `β_k ← S(X_kᵀ r₋ₖ / n, λ)`, and the coefficients are mapped back to the
//! original column scale on return. The penalty then acts on the
//! standardized coefficients, as in glmnet.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::{axpy, dot, Matrix};
use crate::types::CoefficientEstimate;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LassoConfig {
    pub lambda: f64,
    pub max_sweeps: usize,
    /// Convergence threshold on the largest coefficient change in a sweep
    /// (working scale).
    pub tol: f64,
    pub standardize: bool,
}

impl Default for LassoConfig {
    fn default() -> Self {
        LassoConfig {
            lambda: 0.0,
            max_sweeps: 1000,
            tol: 1e-7,
            standardize: true,
        }
    }
}

impl LassoConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        LassoConfig {
            lambda,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::input("lambda must be finite and non-negative"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::input("tol must be positive"));
        }
        if self.max_sweeps == 0 {
            return Err(Error::input("max_sweeps must be at least 1"));
        }
        Ok(())
    }
}

/// `sign(α) · max(|α| − t, 0)`.
#[inline]
pub fn soft_threshold(alpha: f64, threshold: f64) -> f64 {
    debug_assert!(threshold >= 0.0);
    if alpha > threshold {
        alpha - threshold
    } else if alpha < -threshold {
        alpha + threshold
    } else {
        0.0
    }
}

/// Scales every column to unit in-sample second moment. Returns the scaled
/// matrix and the per-column scales `sqrt(X_kᵀX_k/n)`. Columns that are
/// identically zero keep scale 0 and stay zero.
pub fn standardize_columns(x: &Matrix) -> (Matrix, Vec<f64>) {
    let design = WorkingDesign::new(x, true);
    (design.cols, design.scale)
}

/// The design a solver actually iterates on.
#[derive(Debug, Clone)]
pub(crate) struct WorkingDesign {
    pub cols: Matrix,
    /// working coefficient = original coefficient × scale
    pub scale: Vec<f64>,
    /// `x_kᵀx_k / n` of the working column; exactly 1 when standardized.
    pub sqnorm: Vec<f64>,
}

impl WorkingDesign {
    pub fn new(x: &Matrix, standardize: bool) -> Self {
        let n = x.rows() as f64;
        let mut cols = x.clone();
        let mut scale = vec![1.0; x.cols()];
        let mut sqnorm = vec![0.0; x.cols()];
        for k in 0..x.cols() {
            let ss = dot(x.col(k), x.col(k)) / n;
            if ss == 0.0 {
                scale[k] = if standardize { 0.0 } else { 1.0 };
                continue;
            }
            if standardize {
                let s = libm::sqrt(ss);
                scale[k] = s;
                cols.col_mut(k).iter_mut().for_each(|v| *v /= s);
                sqnorm[k] = 1.0;
            } else {
                sqnorm[k] = ss;
            }
        }
        WorkingDesign {
            cols,
            scale,
            sqnorm,
        }
    }

    pub fn to_working(&self, original: &[f64]) -> Vec<f64> {
        original.iter().zip(&self.scale).map(|(b, s)| b * s).collect()
    }

    pub fn to_original(&self, working: &[f64]) -> Vec<f64> {
        working
            .iter()
            .zip(&self.scale)
            .map(|(b, &s)| if s == 0.0 { 0.0 } else { b / s })
            .collect()
    }

    /// Exact minimization of the penalized loss in coordinate `k`; keeps the
    /// residual in sync and returns the new value.
    #[inline]
    pub fn penalized_step(&self, k: usize, b_old: f64, r: &mut [f64], lambda: f64) -> f64 {
        let sq = self.sqnorm[k];
        if sq == 0.0 {
            return 0.0;
        }
        let x = self.cols.col(k);
        let z = dot(x, r) / r.len() as f64 + sq * b_old;
        let b_new = if sq == 1.0 {
            soft_threshold(z, lambda)
        } else {
            soft_threshold(z, lambda) / sq
        };
        if b_new != b_old {
            axpy(b_old - b_new, x, r);
        }
        b_new
    }

    /// Exact least-squares minimization in coordinate `k`.
    #[inline]
    pub fn free_step(&self, k: usize, b_old: f64, r: &mut [f64]) -> f64 {
        self.penalized_step(k, b_old, r, 0.0)
    }

    /// `max_k |x_kᵀ r| / n` over working columns.
    pub fn max_abs_gradient(&self, r: &[f64]) -> f64 {
        let n = r.len() as f64;
        (0..self.cols.cols())
            .map(|k| libm::fabs(dot(self.cols.col(k), r)) / n)
            .fold(0.0, f64::max)
    }
}

pub(crate) fn half_mean_square(r: &[f64]) -> f64 {
    dot(r, r) / (2.0 * r.len() as f64)
}

pub(crate) fn l1_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| libm::fabs(*x)).sum()
}

/// `y − offset` with an empty offset read as zero.
pub(crate) fn offset_response(y: &[f64], offset: &[f64]) -> Result<Vec<f64>> {
    if offset.is_empty() {
        return Ok(y.to_vec());
    }
    Error::check_dim("offset length", y.len(), offset.len())?;
    Ok(y.iter().zip(offset).map(|(a, b)| a - b).collect())
}

/// Smallest λ at which the all-zero solution is optimal (working scale).
pub fn lambda_max(y: &[f64], x: &Matrix, offset: &[f64], standardize: bool) -> Result<f64> {
    Error::check_dim("lambda_max: rows of X", y.len(), x.rows())?;
    let target = offset_response(y, offset)?;
    Ok(WorkingDesign::new(x, standardize).max_abs_gradient(&target))
}

pub fn lasso_cd(
    y: &[f64],
    x: &Matrix,
    offset: &[f64],
    config: &LassoConfig,
) -> Result<CoefficientEstimate> {
    lasso_cd_with_trace(y, x, offset, config).map(|(est, _)| est)
}

/// [`lasso_cd`] that also returns the penalized objective (working scale)
/// at the start and after every sweep.
pub fn lasso_cd_with_trace(
    y: &[f64],
    x: &Matrix,
    offset: &[f64],
    config: &LassoConfig,
) -> Result<(CoefficientEstimate, Vec<f64>)> {
    config.validate()?;
    Error::check_dim("lasso_cd: rows of X", y.len(), x.rows())?;
    if y.is_empty() {
        return Err(Error::input("lasso_cd needs at least one observation"));
    }
    if !y.iter().chain(offset).all(|v| v.is_finite()) || !x.is_finite() {
        return Err(Error::input("lasso_cd inputs must be finite"));
    }
    let design = WorkingDesign::new(x, config.standardize);
    let mut r = offset_response(y, offset)?;
    let p = x.cols();
    let mut b = vec![0.0; p];
    let lambda = config.lambda;

    let objective = |r: &[f64], b: &[f64]| half_mean_square(r) + lambda * l1_norm(b);
    let mut trace = vec![objective(&r, &b)];
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < config.max_sweeps {
        sweeps += 1;
        let mut max_change: f64 = 0.0;
        for k in 0..p {
            let old = b[k];
            let new = design.penalized_step(k, old, &mut r, lambda);
            b[k] = new;
            max_change = max_change.max(libm::fabs(new - old));
        }
        let obj = objective(&r, &b);
        if !obj.is_finite() {
            return Err(Error::NonFinite {
                context: "lasso_cd objective",
                iteration: sweeps,
            });
        }
        trace.push(obj);
        if max_change < config.tol {
            converged = true;
            break;
        }
    }

    let estimate = CoefficientEstimate {
        beta_hat: design.to_original(&b),
        gamma_hat: Vec::new(),
        lambda,
        n_iterations: sweeps,
        converged,
        final_objective: *trace.last().expect("trace starts non-empty"),
    };
    Ok((estimate, trace))
}

/// Largest violation of the lasso optimality conditions for
/// `(1/2n)‖y − offset − Xβ‖² + λ‖β‖₁` on the design as given.
pub fn kkt_violation(
    y: &[f64],
    x: &Matrix,
    offset: &[f64],
    beta: &[f64],
    lambda: f64,
) -> Result<f64> {
    Error::check_dim("kkt_violation: rows of X", y.len(), x.rows())?;
    Error::check_dim("kkt_violation: beta length", x.cols(), beta.len())?;
    let mut r = offset_response(y, offset)?;
    for (k, &bk) in beta.iter().enumerate() {
        if bk != 0.0 {
            axpy(-bk, x.col(k), &mut r);
        }
    }
    Ok(lasso_kkt_from_residual(x, &r, beta, lambda))
}

pub(crate) fn lasso_kkt_from_residual(x: &Matrix, r: &[f64], beta: &[f64], lambda: f64) -> f64 {
    let n = r.len() as f64;
    beta.iter()
        .enumerate()
        .map(|(k, &bk)| {
            let g = dot(x.col(k), r) / n;
            if bk > 0.0 {
                libm::fabs(g - lambda)
            } else if bk < 0.0 {
                libm::fabs(g + lambda)
            } else {
                (libm::fabs(g) - lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}
