//! Precision-matrix estimators for the non-sparse block.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{cholesky, sample_covariance, spd_inverse};
use crate::matrix::{Matrix, SymmetricMatrix};
use crate::sparse::soft_threshold;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrecisionMethod {
    Known,
    Identity,
    RidgeInverse,
    GraphicalLasso,
}

/// A positive-definite estimate of `Ω = Σ⁻¹`. Every constructor in this
/// module certifies positive definiteness with a Cholesky factorization.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionEstimate {
    pub omega_hat: SymmetricMatrix,
    pub method: PrecisionMethod,
    pub lambda_star: Option<f64>,
    /// False when an iterative estimator hit its iteration cap.
    pub converged: bool,
    pub iterations: usize,
}

impl PrecisionEstimate {
    pub fn dim(&self) -> usize {
        self.omega_hat.dim()
    }
}

/// Wraps a known precision matrix after checking it is positive definite.
pub fn known_precision(omega: SymmetricMatrix) -> Result<PrecisionEstimate> {
    cholesky(&omega)?;
    Ok(PrecisionEstimate {
        omega_hat: omega,
        method: PrecisionMethod::Known,
        lambda_star: None,
        converged: true,
        iterations: 0,
    })
}

pub fn identity_precision(q: usize) -> Result<PrecisionEstimate> {
    if q == 0 {
        return Err(Error::input("identity precision needs q >= 1"));
    }
    Ok(PrecisionEstimate {
        omega_hat: SymmetricMatrix::identity(q),
        method: PrecisionMethod::Identity,
        lambda_star: None,
        converged: true,
        iterations: 0,
    })
}

/// `(S + eps·I)⁻¹`.
pub fn ridge_inverse_precision(s: &SymmetricMatrix, eps: f64) -> Result<PrecisionEstimate> {
    if !(eps > 0.0) {
        return Err(Error::input("ridge eps must be positive"));
    }
    let mut m = s.as_matrix().clone();
    for i in 0..s.dim() {
        m[(i, i)] += eps;
    }
    let omega_hat = spd_inverse(&SymmetricMatrix::symmetrize(m))?;
    cholesky(&omega_hat)?;
    Ok(PrecisionEstimate {
        omega_hat,
        method: PrecisionMethod::RidgeInverse,
        lambda_star: None,
        converged: true,
        iterations: 0,
    })
}

/// Graphical lasso by block coordinate descent on the covariance estimate,
/// penalizing off-diagonal entries only. Maximizes
/// `log det Ω − tr(SΩ) − λ Σ_{j≠k} |Ω_jk|`.
///
/// Stops when a full pass over the columns moves no entry of the working
/// covariance by `tol` or more; a capped run is returned with
/// `converged = false`.
pub fn graphical_lasso(
    s: &SymmetricMatrix,
    lambda: f64,
    max_iter: usize,
    tol: f64,
) -> Result<PrecisionEstimate> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::input("glasso lambda must be finite and non-negative"));
    }
    if !(tol > 0.0) {
        return Err(Error::input("glasso tol must be positive"));
    }
    let q = s.dim();
    if let Some(j) = (0..q).find(|&j| !(s[(j, j)] > 0.0)) {
        return Err(Error::input(alloc::format!(
            "glasso needs a strictly positive diagonal (entry {} is {})",
            j,
            s[(j, j)]
        )));
    }

    let mut w = s.as_matrix().clone();
    // Column j of `coef` holds the regression of column j on the others.
    let mut coef = Matrix::zeros(q, q);
    let inner_tol = 0.01 * tol;
    let inner_max = 10_000;
    let mut converged = q == 1;
    let mut iterations = 0;
    let mut wb = vec![0.0; q];

    while !converged && iterations < max_iter {
        iterations += 1;
        let mut max_change: f64 = 0.0;
        for j in 0..q {
            // wb = W₁₁ b over k ≠ j, kept in sync as b changes.
            for (k, v) in wb.iter_mut().enumerate() {
                *v = (0..q)
                    .filter(|&l| l != j)
                    .map(|l| w[(k, l)] * coef[(l, j)])
                    .sum();
            }
            for _ in 0..inner_max {
                let mut inner_change: f64 = 0.0;
                for k in (0..q).filter(|&k| k != j) {
                    let old = coef[(k, j)];
                    let partial = s[(k, j)] - (wb[k] - w[(k, k)] * old);
                    let new = soft_threshold(partial, lambda) / w[(k, k)];
                    if new != old {
                        let delta = new - old;
                        for (l, v) in wb.iter_mut().enumerate() {
                            *v += delta * w[(l, k)];
                        }
                        coef[(k, j)] = new;
                        inner_change = inner_change.max(libm::fabs(delta));
                    }
                }
                if inner_change < inner_tol {
                    break;
                }
            }
            for k in (0..q).filter(|&k| k != j) {
                max_change = max_change.max(libm::fabs(w[(k, j)] - wb[k]));
                w[(k, j)] = wb[k];
                w[(j, k)] = wb[k];
            }
        }
        if !w.is_finite() {
            return Err(Error::NonFinite {
                context: "graphical lasso covariance update",
                iteration: iterations,
            });
        }
        converged = max_change < tol;
    }

    let mut omega = Matrix::zeros(q, q);
    for j in 0..q {
        let cross: f64 = (0..q).filter(|&k| k != j).map(|k| w[(k, j)] * coef[(k, j)]).sum();
        let diag = 1.0 / (w[(j, j)] - cross);
        omega[(j, j)] = diag;
        for k in (0..q).filter(|&k| k != j) {
            omega[(k, j)] = -coef[(k, j)] * diag;
        }
    }
    let omega_hat = SymmetricMatrix::symmetrize(omega);
    cholesky(&omega_hat)?;
    Ok(PrecisionEstimate {
        omega_hat,
        method: PrecisionMethod::GraphicalLasso,
        lambda_star: Some(lambda),
        converged,
        iterations,
    })
}

/// Largest violation of the graphical-lasso optimality conditions, with
/// `Σ̂ = Ω̂⁻¹`: `Σ̂_jj = S_jj`; `|Σ̂_jk − S_jk| ≤ λ` where `Ω̂_jk = 0`;
/// `Σ̂_jk − S_jk = λ·sign(Ω̂_jk)` elsewhere.
pub fn glasso_kkt_residual(s: &SymmetricMatrix, omega: &SymmetricMatrix, lambda: f64) -> Result<f64> {
    Error::check_dim("glasso_kkt_residual", s.dim(), omega.dim())?;
    let sigma = spd_inverse(omega)?;
    let q = s.dim();
    let mut worst: f64 = 0.0;
    for j in 0..q {
        for k in 0..q {
            let g = sigma[(j, k)] - s[(j, k)];
            let v = if j == k {
                libm::fabs(g)
            } else if omega[(j, k)] == 0.0 {
                (libm::fabs(g) - lambda).max(0.0)
            } else {
                libm::fabs(g - lambda * libm::copysign(1.0, omega[(j, k)]))
            };
            worst = worst.max(v);
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlassoRuleParams {
    pub m: f64,
    pub alpha: f64,
    pub tau: f64,
}

impl Default for GlassoRuleParams {
    fn default() -> Self {
        GlassoRuleParams {
            m: 1.0,
            alpha: 1.0,
            tau: 1.5,
        }
    }
}

/// How the exponent τ binds in the tuning rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogExponentParse {
    /// `((log(n·d))^τ / n)^{1/2}`
    #[default]
    PowerOfLog,
    /// `(log((n·d)^τ) / n)^{1/2} = (τ·log(n·d) / n)^{1/2}`
    LogOfPower,
}

/// `λ* = 4 (M/α) ((log(n·dim))^τ / n)^{1/2}` (or the alternative parse).
pub fn glasso_lambda_rule(
    n: usize,
    dim: usize,
    params: &GlassoRuleParams,
    parse: LogExponentParse,
) -> Result<f64> {
    if n < 2 || dim < 1 {
        return Err(Error::input("lambda rule needs n >= 2 and dim >= 1"));
    }
    if !(params.m > 0.0) || !(params.alpha > 0.0 && params.alpha <= 1.0) || !(params.tau > 1.0) {
        return Err(Error::input("lambda rule needs M > 0, alpha in (0,1], tau > 1"));
    }
    let log_nd = libm::log(n as f64 * dim as f64);
    Ok(rule_value(log_nd, n as f64, params, parse))
}

fn rule_value(log_nd: f64, n: f64, params: &GlassoRuleParams, parse: LogExponentParse) -> f64 {
    let inner = match parse {
        LogExponentParse::PowerOfLog => libm::pow(log_nd, params.tau),
        LogExponentParse::LogOfPower => params.tau * log_nd,
    };
    4.0 * params.m / params.alpha * libm::sqrt(inner / n)
}

/// Where the precision matrix used by a fit comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum PrecisionSource {
    Known(SymmetricMatrix),
    Identity,
    RidgeInverse { eps: f64 },
    GraphicalLasso {
        rule: GlassoRuleParams,
        parse: LogExponentParse,
        max_iter: usize,
        tol: f64,
    },
}

impl PrecisionSource {
    pub fn default_glasso() -> Self {
        PrecisionSource::GraphicalLasso {
            rule: GlassoRuleParams::default(),
            parse: LogExponentParse::default(),
            max_iter: 100,
            tol: 1e-6,
        }
    }

    /// Builds the estimate for design block `w`. A graphical-lasso failure
    /// (singular input, no PD certificate) falls back to the ridge inverse.
    pub fn estimate(&self, w: &Matrix) -> Result<PrecisionEstimate> {
        match self {
            PrecisionSource::Known(omega) => {
                Error::check_dim("known precision dimension", w.cols(), omega.dim())?;
                known_precision(omega.clone())
            }
            PrecisionSource::Identity => identity_precision(w.cols()),
            PrecisionSource::RidgeInverse { eps } => {
                ridge_inverse_precision(&sample_covariance(w, false)?, *eps)
            }
            PrecisionSource::GraphicalLasso {
                rule,
                parse,
                max_iter,
                tol,
            } => {
                let s = sample_covariance(w, false)?;
                let lambda = glasso_lambda_rule(w.rows(), w.cols(), rule, *parse)?;
                graphical_lasso(&s, lambda, *max_iter, *tol)
                    .or_else(|_| ridge_inverse_precision(&s, 1e-3 * mean_diag(&s).max(1e-12)))
            }
        }
    }
}

fn mean_diag(s: &SymmetricMatrix) -> f64 {
    let d: Vec<f64> = s.diagonal();
    d.iter().sum::<f64>() / d.len().max(1) as f64
}
