//! k-fold cross-validation over a λ grid.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metrics::mse;
use crate::nsi::{nsi_fit, plugin_fit, NsiConfig};
use crate::precision::PrecisionEstimate;
use crate::rng::Stream;
use crate::sparse::{lambda_max, lasso_cd};
use crate::types::{CoefficientEstimate, Dataset};

/// Estimators that can be tuned and benchmarked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Step 1 followed by the alternating iteration.
    Nsi,
    /// Lasso on the joint design `[Z W]`, every coefficient penalized.
    Lasso,
    /// Step 1 only.
    Plugin,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Nsi, Method::Lasso, Method::Plugin];

    pub fn name(self) -> &'static str {
        match self {
            Method::Nsi => "nsi",
            Method::Lasso => "lasso",
            Method::Plugin => "plugin",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.name().eq_ignore_ascii_case(s))
    }

    /// Fits `data` at `config.lambda`.
    pub fn fit(
        self,
        data: &Dataset,
        omega: &PrecisionEstimate,
        config: &NsiConfig,
    ) -> Result<CoefficientEstimate> {
        match self {
            Method::Nsi => nsi_fit(data, omega, config).map(|f| f.estimate),
            Method::Plugin => plugin_fit(data, omega, config),
            Method::Lasso => joint_lasso(data, config),
        }
    }
}

fn joint_lasso(data: &Dataset, config: &NsiConfig) -> Result<CoefficientEstimate> {
    let x = data.z().hstack(data.w())?;
    let lasso_cfg = crate::sparse::LassoConfig {
        lambda: config.lambda,
        max_sweeps: config.init_max_sweeps,
        tol: config.tol,
        standardize: config.standardize,
    };
    let mut est = lasso_cd(data.y(), &x, &[], &lasso_cfg)?;
    est.gamma_hat = est.beta_hat.split_off(data.p());
    Ok(est)
}

/// Fold index for each of `n` observations: a seeded shuffle dealt
/// round-robin, so fold sizes differ by at most one.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 || k > n {
        return Err(Error::input(alloc::format!(
            "k-fold split needs 2 <= k <= n (k = {}, n = {})",
            k,
            n
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = Stream::new(seed);
    for i in (1..n).rev() {
        let j = rng.below(i as u64 + 1) as usize;
        order.swap(i, j);
    }
    let mut folds = vec![0; n];
    for (pos, &idx) in order.iter().enumerate() {
        folds[idx] = pos % k;
    }
    Ok(folds)
}

/// `len` log-spaced values from `λ_max` down to `min_ratio · λ_max`, where
/// `λ_max = max |X̃_kᵀ y| / n` over the standardized joint design.
pub fn default_lambda_grid(data: &Dataset, len: usize, min_ratio: f64) -> Result<Vec<f64>> {
    if len == 0 || !(min_ratio > 0.0 && min_ratio < 1.0) {
        return Err(Error::input("grid needs len >= 1 and min_ratio in (0, 1)"));
    }
    let x = data.z().hstack(data.w())?;
    let top = lambda_max(data.y(), &x, &[], true)?;
    if len == 1 {
        return Ok(vec![top]);
    }
    let step = libm::log(min_ratio) / (len - 1) as f64;
    Ok((0..len).map(|i| top * libm::exp(step * i as f64)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub lambda_grid: Vec<f64>,
    /// Mean held-out MSE per grid value.
    pub cv_error: Vec<f64>,
    pub best_lambda: f64,
    pub best_index: usize,
    pub fold_assignment: Vec<usize>,
}

/// Held-out prediction error of `method` for every `(λ, fold)` pair, averaged
/// over folds. The minimizer wins; ties go to the smaller λ, then to the
/// earlier grid position. `omega` is shared by every fold.
pub fn cv_lambda(
    data: &Dataset,
    omega: &PrecisionEstimate,
    grid: &[f64],
    k: usize,
    seed: u64,
    method: Method,
    base: &NsiConfig,
) -> Result<CvResult> {
    if grid.is_empty() {
        return Err(Error::input("lambda grid is empty"));
    }
    if let Some(bad) = grid.iter().find(|l| !(**l >= 0.0 && l.is_finite())) {
        return Err(Error::input(alloc::format!("invalid lambda {} in grid", bad)));
    }
    let folds = kfold_split(data.n(), k, seed)?;
    let splits: Vec<(Dataset, Dataset)> = (0..k)
        .map(|f| {
            let train: Vec<usize> = (0..data.n()).filter(|&i| folds[i] != f).collect();
            let test: Vec<usize> = (0..data.n()).filter(|&i| folds[i] == f).collect();
            Ok((data.select_rows(&train)?, data.select_rows(&test)?))
        })
        .collect::<Result<_>>()?;

    let mut cv_error = Vec::with_capacity(grid.len());
    for (li, &lambda) in grid.iter().enumerate() {
        let cfg = NsiConfig { lambda, ..*base };
        let mut total = 0.0;
        for (f, (train, test)) in splits.iter().enumerate() {
            let wrap = |e: Error| Error::FoldFit {
                lambda_index: li,
                lambda,
                fold: f,
                source: Box::new(e),
            };
            let est = method.fit(train, omega, &cfg).map_err(wrap)?;
            let pred = test.predict(&est.beta_hat, &est.gamma_hat).map_err(wrap)?;
            total += mse(&pred, test.y()).map_err(wrap)?;
        }
        cv_error.push(total / k as f64);
    }

    let mut best = 0;
    for i in 1..grid.len() {
        let better = cv_error[i] < cv_error[best]
            || (cv_error[i] == cv_error[best] && grid[i] < grid[best]);
        if better {
            best = i;
        }
    }
    Ok(CvResult {
        lambda_grid: grid.to_vec(),
        cv_error,
        best_lambda: grid[best],
        best_index: best,
        fold_assignment: folds,
    })
}

/// Prediction `Z β̂ + W γ̂` for new design blocks.
pub fn predict_blocks(z: &Matrix, w: &Matrix, est: &CoefficientEstimate) -> Result<Vec<f64>> {
    let mut out = z.mul_vec(&est.beta_hat)?;
    for (o, v) in out.iter_mut().zip(w.mul_vec(&est.gamma_hat)?) {
        *o += v;
    }
    Ok(out)
}
