mod support;

use nsi_core::sparse::{kkt_violation, lasso_cd, soft_threshold, standardize_columns, LassoConfig};
use support::brute_force::{brute_force_lasso, lasso_fixtures, lasso_objective};

fn tight(lambda: f64, standardize: bool) -> LassoConfig {
    LassoConfig {
        lambda,
        max_sweeps: 1_000_000,
        tol: 1e-13,
        standardize,
    }
}

fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn raw_design_matches_enumeration() {
    for (i, f) in lasso_fixtures().iter().enumerate() {
        if f.lambda == 0.0 && f.x.rows() <= f.x.cols() {
            // interpolating least squares has no unique solution
            continue;
        }
        let est = lasso_cd(&f.y, &f.x, &[], &tight(f.lambda, false)).unwrap();
        assert!(est.converged, "fixture {i} hit the sweep cap");
        let exact = brute_force_lasso(&f.y, &f.x, f.lambda);
        let gap = linf(&est.beta_hat, &exact);
        assert!(
            gap <= 1e-5,
            "fixture {i} (n={}, p={}, λ={}): {:?} vs {:?}",
            f.x.rows(),
            f.x.cols(),
            f.lambda,
            est.beta_hat,
            exact
        );
        let obj_gap = lasso_objective(&f.y, &f.x, &est.beta_hat, f.lambda)
            - lasso_objective(&f.y, &f.x, &exact, f.lambda);
        assert!(obj_gap.abs() <= 1e-9, "fixture {i}: objective gap {obj_gap}");
    }
}

#[test]
fn standardized_fit_is_enumeration_on_scaled_columns() {
    for (i, f) in lasso_fixtures().iter().enumerate() {
        if f.lambda == 0.0 && f.x.rows() <= f.x.cols() {
            continue;
        }
        let est = lasso_cd(&f.y, &f.x, &[], &tight(f.lambda, true)).unwrap();
        let (xs, scale) = standardize_columns(&f.x);
        let exact: Vec<f64> = brute_force_lasso(&f.y, &xs, f.lambda)
            .iter()
            .zip(&scale)
            .map(|(b, s)| b / s)
            .collect();
        assert!(linf(&est.beta_hat, &exact) <= 1e-5, "fixture {i}");
        let working: Vec<f64> = est.beta_hat.iter().zip(&scale).map(|(b, s)| b * s).collect();
        let kkt = kkt_violation(&f.y, &xs, &[], &working, f.lambda).unwrap();
        assert!(kkt <= 1e-6, "fixture {i}: kkt {kkt}");
    }
}

#[test]
fn soft_threshold_sign_magnitude_grid() {
    let magnitudes = [0.0, 1e-300, 1e-8, 0.25, 0.5, 1.0, 1.0 + 1e-12, 2.0, 7.5, 1e12, 1e300];
    let thresholds = [0.0, 1e-300, 0.5, 1.0, 2.0, 1e12, f64::INFINITY];
    for &m in &magnitudes {
        for sign in [1.0, -1.0] {
            let a = sign * m;
            for &t in &thresholds {
                let s = soft_threshold(a, t);
                let expect = if m > t { sign * (m - t) } else { 0.0 };
                assert_eq!(s, expect, "S({a}, {t})");
                assert!(s.abs() <= m);
                assert!(s == 0.0 || s.signum() == sign);
                assert_eq!(s == 0.0, m <= t);
            }
        }
    }
}
