//! Estimation and selection metrics over the joint `(β, γ)` vector.
//!
//! A coordinate counts as selected when `|estimate| > zero_tol`; the default
//! tolerance is exact zero. A truth coordinate is null only when it is
//! exactly zero.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::types::{CoefficientEstimate, MetricsReport, TrueModel};

pub const DEFAULT_ZERO_TOL: f64 = 0.0;

fn paired<'a>(
    est: &'a CoefficientEstimate,
    truth: &'a TrueModel,
) -> Result<impl Iterator<Item = (f64, f64)> + 'a> {
    Error::check_dim("metrics: beta length", truth.beta.len(), est.beta_hat.len())?;
    Error::check_dim("metrics: gamma length", truth.gamma.len(), est.gamma_hat.len())?;
    Ok(est
        .beta_hat
        .iter()
        .chain(&est.gamma_hat)
        .copied()
        .zip(truth.beta.iter().chain(&truth.gamma).copied()))
}

pub fn l1_error(est: &CoefficientEstimate, truth: &TrueModel) -> Result<f64> {
    Ok(paired(est, truth)?.map(|(e, t)| libm::fabs(e - t)).sum())
}

pub fn l2_error(est: &CoefficientEstimate, truth: &TrueModel) -> Result<f64> {
    let ss: f64 = paired(est, truth)?.map(|(e, t)| (e - t) * (e - t)).sum();
    Ok(libm::sqrt(ss))
}

pub fn fpr(est: &CoefficientEstimate, truth: &TrueModel, zero_tol: f64) -> Result<f64> {
    let (mut nulls, mut false_pos) = (0usize, 0usize);
    for (e, t) in paired(est, truth)? {
        if t == 0.0 {
            nulls += 1;
            if libm::fabs(e) > zero_tol {
                false_pos += 1;
            }
        }
    }
    if nulls == 0 {
        return Err(Error::UndefinedMetric("FPR"));
    }
    Ok(false_pos as f64 / nulls as f64)
}

pub fn tpr(est: &CoefficientEstimate, truth: &TrueModel, zero_tol: f64) -> Result<f64> {
    let (mut signals, mut true_pos) = (0usize, 0usize);
    for (e, t) in paired(est, truth)? {
        if t != 0.0 {
            signals += 1;
            if libm::fabs(e) > zero_tol {
                true_pos += 1;
            }
        }
    }
    if signals == 0 {
        return Err(Error::UndefinedMetric("TPR"));
    }
    Ok(true_pos as f64 / signals as f64)
}

pub fn nz(est: &CoefficientEstimate, zero_tol: f64) -> usize {
    est.beta_hat
        .iter()
        .chain(&est.gamma_hat)
        .filter(|v| libm::fabs(**v) > zero_tol)
        .count()
}

pub fn mse(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    Error::check_dim("mse: vector length", actual.len(), predicted.len())?;
    if actual.is_empty() {
        return Err(Error::input("mse of empty vectors"));
    }
    let ss: f64 = predicted
        .iter()
        .zip(actual)
        .map(|(p, a)| (p - a) * (p - a))
        .sum();
    Ok(ss / actual.len() as f64)
}

/// All metrics at once. Undefined rates come back as `None`.
pub fn evaluate(
    est: &CoefficientEstimate,
    truth: &TrueModel,
    zero_tol: f64,
    mse: Option<f64>,
) -> Result<MetricsReport> {
    let undefined_to_none = |r: Result<f64>| match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::UndefinedMetric(_)) => Ok(None),
        Err(e) => Err(e),
    };
    Ok(MetricsReport {
        l1: l1_error(est, truth)?,
        l2: l2_error(est, truth)?,
        fpr: undefined_to_none(fpr(est, truth, zero_tol))?,
        tpr: undefined_to_none(tpr(est, truth, zero_tol))?,
        nz: nz(est, zero_tol),
        mse,
    })
}

/// Indices of `(β̂, γ̂)` (joint numbering) whose magnitude exceeds `zero_tol`.
pub fn support(est: &CoefficientEstimate, zero_tol: f64) -> Vec<usize> {
    est.beta_hat
        .iter()
        .chain(&est.gamma_hat)
        .enumerate()
        .filter(|(_, v)| libm::fabs(**v) > zero_tol)
        .map(|(i, _)| i)
        .collect()
}
