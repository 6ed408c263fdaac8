//! Exact small-problem lasso minimizer by enumerating signed active sets,
//! plus the fixture family shared by the oracle tests.

use nsi_core::linalg::cholesky;
use nsi_core::rng::Stream;
use nsi_core::{Matrix, SymmetricMatrix};

/// `(1/2n)‖y − Xb‖² + λ‖b‖₁`.
pub fn lasso_objective(y: &[f64], x: &Matrix, b: &[f64], lambda: f64) -> f64 {
    let fit = x.mul_vec(b).unwrap();
    let rss: f64 = y.iter().zip(&fit).map(|(a, f)| (a - f) * (a - f)).sum();
    rss / (2.0 * y.len() as f64) + lambda * b.iter().map(|v| v.abs()).sum::<f64>()
}

/// Each of the `3^p` sign patterns fixes the active set and signs; the
/// stationarity equations `X_AᵀX_A b_A / n = X_Aᵀy / n − λ s_A` then give a
/// candidate, kept when its signs agree with the pattern. The minimizer is
/// among the candidates.
pub fn brute_force_lasso(y: &[f64], x: &Matrix, lambda: f64) -> Vec<f64> {
    let (n, p) = (y.len() as f64, x.cols());
    let mut best = (lasso_objective(y, x, &vec![0.0; p], lambda), vec![0.0; p]);
    for code in 1..3usize.pow(p as u32) {
        let mut c = code;
        let mut signs = Vec::with_capacity(p);
        for _ in 0..p {
            signs.push([0.0, 1.0, -1.0][c % 3]);
            c /= 3;
        }
        let active: Vec<usize> = (0..p).filter(|&k| signs[k] != 0.0).collect();
        let xa = x.select_cols(&active);
        let gram = xa.transpose().matmul(&xa).unwrap();
        let gram = Matrix::from_fn(active.len(), active.len(), |i, j| gram[(i, j)] / n);
        let Ok(chol) = cholesky(&SymmetricMatrix::symmetrize(gram)) else {
            continue;
        };
        let rhs: Vec<f64> = xa
            .tr_mul_vec(y)
            .unwrap()
            .iter()
            .zip(&active)
            .map(|(g, &k)| g / n - lambda * signs[k])
            .collect();
        let ba = chol.solve(&rhs).unwrap();
        if ba.iter().zip(&active).any(|(v, &k)| v * signs[k] <= 0.0) {
            continue;
        }
        let mut b = vec![0.0; p];
        for (v, &k) in ba.iter().zip(&active) {
            b[k] = *v;
        }
        let obj = lasso_objective(y, x, &b, lambda);
        if obj < best.0 {
            best = (obj, b);
        }
    }
    best.1
}

pub struct Fixture {
    pub y: Vec<f64>,
    pub x: Matrix,
    pub lambda: f64,
}

/// Every `p ≤ 3`, `2 ≤ n ≤ 8`, at λ spanning dense to empty solutions.
pub fn lasso_fixtures() -> Vec<Fixture> {
    let mut rng = Stream::new(2024);
    let mut out = Vec::new();
    for p in 1..=3 {
        for n in 2..=8 {
            let x = Matrix::from_fn(n, p, |_, _| rng.standard_normal());
            let b: Vec<f64> = (0..p).map(|k| [1.5, -2.0, 0.0][k]).collect();
            let signal = x.mul_vec(&b).unwrap();
            let y: Vec<f64> = signal.iter().map(|s| s + 0.5 * rng.standard_normal()).collect();
            let top = (0..p)
                .map(|k| x.col(k).iter().zip(&y).map(|(a, b)| a * b).sum::<f64>().abs() / n as f64)
                .fold(0.0, f64::max);
            for frac in [0.0, 0.01, 0.1, 0.3, 0.6, 0.95, 1.2] {
                out.push(Fixture {
                    y: y.clone(),
                    x: x.clone(),
                    lambda: frac * top,
                });
            }
        }
    }
    out
}
