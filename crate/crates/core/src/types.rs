use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::cholesky;
use crate::matrix::{Matrix, SymmetricMatrix};

/// Response `y` with the sparse-block design `Z` (n×p) and the non-sparse
/// block design `W` (n×q).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: Vec<f64>,
    z: Matrix,
    w: Matrix,
}

impl Dataset {
    pub fn new(y: Vec<f64>, z: Matrix, w: Matrix) -> Result<Self> {
        let n = y.len();
        if n == 0 {
            return Err(Error::input("dataset needs at least one row"));
        }
        Error::check_dim("Dataset: rows of Z", n, z.rows())?;
        Error::check_dim("Dataset: rows of W", n, w.rows())?;
        if z.cols() + w.cols() == 0 {
            return Err(Error::input("dataset needs at least one predictor"));
        }
        if !y.iter().all(|v| v.is_finite()) || !z.is_finite() || !w.is_finite() {
            return Err(Error::input("dataset contains non-finite values"));
        }
        Ok(Dataset { y, z, w })
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn z(&self) -> &Matrix {
        &self.z
    }

    pub fn w(&self) -> &Matrix {
        &self.w
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.z.cols()
    }

    pub fn q(&self) -> usize {
        self.w.cols()
    }

    /// Rows `idx` of every component, in order.
    pub fn select_rows(&self, idx: &[usize]) -> Result<Dataset> {
        Dataset::new(
            idx.iter().map(|&i| self.y[i]).collect(),
            self.z.select_rows(idx),
            self.w.select_rows(idx),
        )
    }

    /// `Z β + W γ`.
    pub fn predict(&self, beta: &[f64], gamma: &[f64]) -> Result<Vec<f64>> {
        let mut fitted = self.z.mul_vec(beta)?;
        for (f, v) in fitted.iter_mut().zip(self.w.mul_vec(gamma)?) {
            *f += v;
        }
        Ok(fitted)
    }
}

/// Data-generating coefficients and noise level.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueModel {
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub sigma: f64,
    /// Precision of the `W` block, when known.
    pub omega: Option<SymmetricMatrix>,
}

impl TrueModel {
    pub fn new(
        beta: Vec<f64>,
        gamma: Vec<f64>,
        sigma: f64,
        omega: Option<SymmetricMatrix>,
    ) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::input("noise level sigma must be positive and finite"));
        }
        if let Some(om) = &omega {
            Error::check_dim("TrueModel: omega dimension", gamma.len(), om.dim())?;
            cholesky(om)?;
        }
        Ok(TrueModel {
            beta,
            gamma,
            sigma,
            omega,
        })
    }

    /// Same coefficients, without validating sigma. Generators use it for
    /// the noiseless case.
    pub(crate) fn unchecked(
        beta: Vec<f64>,
        gamma: Vec<f64>,
        sigma: f64,
        omega: Option<SymmetricMatrix>,
    ) -> Self {
        TrueModel {
            beta,
            gamma,
            sigma,
            omega,
        }
    }

    /// Truth seen as a (perfect) estimate.
    pub fn as_estimate(&self) -> CoefficientEstimate {
        CoefficientEstimate {
            beta_hat: self.beta.clone(),
            gamma_hat: self.gamma.clone(),
            lambda: 0.0,
            n_iterations: 0,
            converged: true,
            final_objective: 0.0,
        }
    }
}

/// Fitted coefficients of both blocks with solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientEstimate {
    pub beta_hat: Vec<f64>,
    pub gamma_hat: Vec<f64>,
    pub lambda: f64,
    pub n_iterations: usize,
    pub converged: bool,
    pub final_objective: f64,
}

impl CoefficientEstimate {
    /// `(β̂, γ̂)` concatenated.
    pub fn joint(&self) -> Vec<f64> {
        let mut v = self.beta_hat.clone();
        v.extend_from_slice(&self.gamma_hat);
        v
    }
}

/// The evaluation metrics of one fit against the truth. `fpr`/`tpr` are
/// `None` when the truth has no null / no non-null coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub l1: f64,
    pub l2: f64,
    pub fpr: Option<f64>,
    pub tpr: Option<f64>,
    pub nz: usize,
    pub mse: Option<f64>,
}
