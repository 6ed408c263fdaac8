//! Correlation screening and hold-out evaluation for external data.
//!
//! Screened columns whose absolute correlation with the response reaches
//! `threshold + dense_margin` form the dense block `W`; the remaining
//! screened columns form the sparse block `Z`. Both the screen and the
//! centering use training rows only.

use log::info;
use serde::{Deserialize, Serialize};

use nsi_core::metrics::mse;
use nsi_core::nsi::NsiConfig;
use nsi_core::rng::Stream;
use nsi_core::tuning::{cv_lambda, default_lambda_grid, predict_blocks, Method};
use nsi_core::{Dataset, Matrix};

use crate::harness::PrecisionChoice;
use crate::{Error, Result};

/// Pearson correlation of column `j` with `y`, or `None` when either is
/// constant.
fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Absolute correlations per column; constant columns give `None`.
pub fn abs_correlations(x: &Matrix, y: &[f64]) -> Result<Vec<Option<f64>>> {
    if x.rows() != y.len() {
        return Err(nsi_core::Error::Dimension {
            context: "correlation screen",
            expected: x.rows(),
            found: y.len(),
        }
        .into());
    }
    Ok((0..x.cols()).map(|j| pearson(x.col(j), y).map(f64::abs)).collect())
}

/// Ascending indices of the columns with `|corr(x_j, y)| ≥ threshold`.
/// Constant columns are never selected.
pub fn correlation_screen(x: &Matrix, y: &[f64], threshold: f64) -> Result<Vec<usize>> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::Usage(format!("threshold {threshold} must lie in [0, 1]")));
    }
    // Rounding can push a perfect correlation a hair above 1.
    Ok(abs_correlations(x, y)?
        .into_iter()
        .enumerate()
        .filter_map(|(j, c)| c.filter(|&c| c.min(1.0) >= threshold).map(|_| j))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct HoldoutConfig {
    /// Share of rows used for screening and fitting; the rest is held out.
    pub split_fraction: f64,
    pub threshold: f64,
    pub dense_margin: f64,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub cv_folds: usize,
    pub grid_len: usize,
    pub grid_min_ratio: f64,
    pub precision: PrecisionChoice,
    pub fit: NsiConfig,
}

impl Default for HoldoutConfig {
    fn default() -> Self {
        HoldoutConfig {
            split_fraction: 0.7,
            threshold: 0.5,
            dense_margin: 0.05,
            methods: vec![Method::Nsi, Method::Lasso],
            seed: 0,
            cv_folds: 10,
            grid_len: 50,
            grid_min_ratio: 1e-3,
            precision: PrecisionChoice::default_glasso(),
            fit: NsiConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutRow {
    pub method: String,
    pub lambda: f64,
    pub test_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutReport {
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
    /// Original column indices of the sparse block.
    pub z_columns: Vec<usize>,
    /// Original column indices of the dense block.
    pub w_columns: Vec<usize>,
    pub rows: Vec<HoldoutRow>,
}

/// Seeded split of `n` rows into `round(split_fraction · n)` fitting rows and
/// the rest, each list ascending.
pub fn holdout_split(n: usize, split_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(split_fraction > 0.0 && split_fraction < 1.0) {
        return Err(Error::Usage(format!(
            "split fraction {split_fraction} must lie in (0, 1)"
        )));
    }
    let n_train = (split_fraction * n as f64).round() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::Pipeline(format!(
            "split fraction {split_fraction} of {n} rows leaves an empty side"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = Stream::new(seed);
    for i in (1..n).rev() {
        let j = rng.below(i as u64 + 1) as usize;
        order.swap(i, j);
    }
    let mut train = order[..n_train].to_vec();
    let mut test = order[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

fn center(x: &Matrix, means: &[f64]) -> Matrix {
    Matrix::from_fn(x.rows(), x.cols(), |i, j| x[(i, j)] - means[j])
}

fn col_means(x: &Matrix) -> Vec<f64> {
    (0..x.cols())
        .map(|j| x.col(j).iter().sum::<f64>() / x.rows() as f64)
        .collect()
}

pub fn holdout_eval(x: &Matrix, y: &[f64], cfg: &HoldoutConfig) -> Result<HoldoutReport> {
    if x.rows() != y.len() {
        return Err(Error::Pipeline(format!(
            "design has {} rows but the response has {}",
            x.rows(),
            y.len()
        )));
    }
    if cfg.methods.is_empty() {
        return Err(Error::Usage("no methods selected".into()));
    }
    let (train, test) = holdout_split(x.rows(), cfg.split_fraction, cfg.seed)?;
    let x_train = x.select_rows(&train);
    let y_train: Vec<f64> = train.iter().map(|&i| y[i]).collect();

    let corr = abs_correlations(&x_train, &y_train)?;
    let screened = correlation_screen(&x_train, &y_train, cfg.threshold)?;
    if screened.len() < 2 {
        return Err(Error::Pipeline(format!(
            "{} columns pass threshold {}; at least 2 are needed",
            screened.len(),
            cfg.threshold
        )));
    }
    let (w_columns, z_columns): (Vec<usize>, Vec<usize>) = screened
        .iter()
        .partition(|&&j| corr[j].is_some_and(|c| c >= cfg.threshold + cfg.dense_margin));
    info!(
        "screened {} columns: {} sparse, {} dense",
        screened.len(),
        z_columns.len(),
        w_columns.len()
    );

    let x_mean = col_means(&x_train);
    let y_mean = y_train.iter().sum::<f64>() / y_train.len() as f64;
    let block = |rows: &[usize], cols: &[usize]| {
        let m = x.select_rows(rows).select_cols(cols);
        let means: Vec<f64> = cols.iter().map(|&j| x_mean[j]).collect();
        center(&m, &means)
    };
    let center_y = |rows: &[usize]| -> Vec<f64> { rows.iter().map(|&i| y[i] - y_mean).collect() };

    let data = Dataset::new(center_y(&train), block(&train, &z_columns), block(&train, &w_columns))?;
    let (z_test, w_test) = (block(&test, &z_columns), block(&test, &w_columns));
    let y_test = center_y(&test);

    let omega = cfg.precision.estimate_without_truth(data.w())?;
    let grid = default_lambda_grid(&data, cfg.grid_len, cfg.grid_min_ratio)?;
    let folds = cfg.cv_folds.min(data.n());
    let mut rows = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let cv = cv_lambda(&data, &omega, &grid, folds, cfg.seed, method, &cfg.fit)?;
        let fit_cfg = NsiConfig {
            lambda: cv.best_lambda,
            ..cfg.fit
        };
        let est = method.fit(&data, &omega, &fit_cfg)?;
        let pred = predict_blocks(&z_test, &w_test, &est)?;
        rows.push(HoldoutRow {
            method: method.name().to_string(),
            lambda: cv.best_lambda,
            test_mse: mse(&pred, &y_test)?,
        });
    }
    Ok(HoldoutReport {
        train_rows: train,
        test_rows: test,
        z_columns,
        w_columns,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_and_orthogonal_columns() {
        let y = vec![1.0, -1.0, 2.0, -2.0];
        let x = Matrix::from_rows(&[[1.0, 1.0, 5.0], [-1.0, 1.0, 5.0], [2.0, -1.0, 5.0], [-2.0, -1.0, 5.0]])
            .unwrap();
        // column 1 is orthogonal to y, column 2 is constant
        assert_eq!(correlation_screen(&x, &y, 1.0).unwrap(), vec![0]);
        assert_eq!(correlation_screen(&x, &y, 0.01).unwrap(), vec![0]);
        assert_eq!(correlation_screen(&x, &y, 0.0).unwrap(), vec![0, 1]);
        assert!(correlation_screen(&x, &y, 1.5).is_err());
    }

    #[test]
    fn split_sizes() {
        let (a, b) = holdout_split(100, 0.5, 3).unwrap();
        assert_eq!((a.len(), b.len()), (50, 50));
        let mut all = [a, b].concat();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        assert!(holdout_split(100, 1.0, 3).is_err());
        assert!(holdout_split(1, 0.5, 3).is_err());
    }
}
