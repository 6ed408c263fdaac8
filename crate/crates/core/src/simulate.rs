//! Simulation designs.
//!
//! The joint design `X = (Z, W)` is drawn from `N(0, Σ)` with `Σ = Ω⁻¹` for a
//! tridiagonal `Ω` over all `p + q` columns (`ρ = 0` gives the independent
//! design). The sparse block gets `beta_support` coefficients equal to
//! `beta_value` followed by zeros; every dense coefficient equals
//! `gamma_value`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{cholesky, gaussian_sample, spd_inverse};
use crate::matrix::{Matrix, SymmetricMatrix};
use crate::rng::Stream;
use crate::types::{Dataset, TrueModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub rho: f64,
    pub beta_value: f64,
    pub beta_support: usize,
    pub gamma_value: f64,
    pub sigma: f64,
    pub seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            n: 100,
            p: 50,
            q: 50,
            rho: 0.0,
            beta_value: 4.0,
            beta_support: 10,
            gamma_value: 6.0,
            sigma: 1.0,
            seed: 0,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p + self.q == 0 {
            return Err(Error::input("simulation needs n >= 1 and p + q >= 1"));
        }
        if self.beta_support > self.p {
            return Err(Error::input(alloc::format!(
                "beta_support {} exceeds p = {}",
                self.beta_support,
                self.p
            )));
        }
        if !(self.rho > -1.0 && self.rho < 1.0) {
            return Err(Error::input("rho must lie in (-1, 1)"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::input("sigma must be finite and non-negative"));
        }
        if !self.beta_value.is_finite() || !self.gamma_value.is_finite() {
            return Err(Error::input("coefficient values must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationInstance {
    pub data: Dataset,
    pub truth: TrueModel,
    pub noise: Vec<f64>,
    pub config: SimulationConfig,
}

/// `Ω_jj = 1`, `Ω_{j,j±1} = ρ`, certified positive definite.
pub fn make_tridiagonal_precision(dim: usize, rho: f64) -> Result<SymmetricMatrix> {
    if dim == 0 {
        return Err(Error::input("precision dimension must be at least 1"));
    }
    let m = SymmetricMatrix::symmetrize(Matrix::from_fn(dim, dim, |i, j| {
        if i == j {
            1.0
        } else if i.abs_diff(j) == 1 {
            rho
        } else {
            0.0
        }
    }));
    cholesky(&m)?;
    Ok(m)
}

/// `(p, q)` with `q = round_half_up(ratio · total)`.
pub fn sparsity_split(total: usize, ratio: f64) -> Result<(usize, usize)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::input("sparsity ratio must lie in (0, 1)"));
    }
    let q = libm::floor(ratio * total as f64 + 0.5) as usize;
    let q = q.min(total);
    let p = total - q;
    if p == 0 || q == 0 {
        return Err(Error::input(alloc::format!(
            "split of {} at ratio {} leaves an empty block",
            total,
            ratio
        )));
    }
    Ok((p, q))
}

pub fn gen_instance(config: &SimulationConfig) -> Result<SimulationInstance> {
    config.validate()?;
    let SimulationConfig { n, p, q, .. } = *config;
    let dim = p + q;
    let omega = make_tridiagonal_precision(dim, config.rho)?;
    let sigma = spd_inverse(&omega)?;
    let mut rng = Stream::new(config.seed);
    let x = gaussian_sample(&cholesky(&sigma)?, n, &mut rng);
    let z_idx: Vec<usize> = (0..p).collect();
    let w_idx: Vec<usize> = (p..dim).collect();
    let (z, w) = (x.select_cols(&z_idx), x.select_cols(&w_idx));

    let beta: Vec<f64> = (0..p)
        .map(|k| if k < config.beta_support { config.beta_value } else { 0.0 })
        .collect();
    let gamma = alloc::vec![config.gamma_value; q];
    let noise: Vec<f64> = (0..n).map(|_| config.sigma * rng.standard_normal()).collect();

    let signal = Dataset::new(alloc::vec![0.0; n], z.clone(), w.clone())?.predict(&beta, &gamma)?;
    let y: Vec<f64> = signal.iter().zip(&noise).map(|(s, e)| s + e).collect();

    // Precision of W's marginal law.
    let omega_w = if q > 0 {
        Some(spd_inverse(&sigma.principal_submatrix(&w_idx))?)
    } else {
        None
    };
    Ok(SimulationInstance {
        data: Dataset::new(y, z, w)?,
        truth: TrueModel::unchecked(beta, gamma, config.sigma, omega_w),
        noise,
        config: *config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sample_covariance;
    use crate::metrics::nz;

    #[test]
    fn tridiagonal_cases() {
        assert_eq!(make_tridiagonal_precision(4, 0.0).unwrap(), SymmetricMatrix::identity(4));
        let m = make_tridiagonal_precision(2, 0.5).unwrap();
        assert_eq!(m, SymmetricMatrix::from_rows(&[[1.0, 0.5], [0.5, 1.0]]).unwrap());
        let inv = spd_inverse(&m).unwrap();
        assert!((inv[(0, 0)] - 4.0 / 3.0).abs() < 1e-14);
        assert!((inv[(0, 1)] + 2.0 / 3.0).abs() < 1e-14);

        // eigenvalues 1 + 2ρ cos(kπ/(d+1)) stay positive for ρ = 0.5
        let d = 400;
        let min_eig = (1..=d)
            .map(|k| 1.0 + 2.0 * 0.5 * (k as f64 * core::f64::consts::PI / (d as f64 + 1.0)).cos())
            .fold(f64::INFINITY, f64::min);
        assert!(min_eig > 0.0);
        assert!(make_tridiagonal_precision(d, 0.5).is_ok());
        // ρ = 0.6 makes large tridiagonals indefinite (1 − 1.2 cos(π/(d+1)) < 0)
        assert!(matches!(
            make_tridiagonal_precision(50, 0.6),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn split_cases() {
        assert_eq!(sparsity_split(100, 0.5).unwrap(), (50, 50));
        assert_eq!(sparsity_split(100, 0.8).unwrap(), (20, 80));
        assert_eq!(sparsity_split(400, 0.6).unwrap(), (160, 240));
        assert_eq!(sparsity_split(5, 0.5).unwrap(), (2, 3));
        assert!(sparsity_split(1, 0.5).is_err());
        assert!(sparsity_split(10, 1.0).is_err());
    }

    #[test]
    fn example_one_shape_and_truth() {
        let inst = gen_instance(&SimulationConfig {
            seed: 17,
            ..Default::default()
        })
        .unwrap();
        assert_eq!((inst.data.n(), inst.data.p(), inst.data.q()), (100, 50, 50));
        assert_eq!(inst.truth.beta.iter().filter(|&&b| b == 4.0).count(), 10);
        assert_eq!(inst.truth.beta.iter().filter(|&&b| b == 0.0).count(), 40);
        assert!(inst.truth.gamma.iter().all(|&g| g == 6.0));
        assert_eq!(nz(&inst.truth.as_estimate(), 0.0), 60);
        assert_eq!(inst.truth.omega.as_ref().unwrap(), &SymmetricMatrix::identity(50));

        let again = gen_instance(&inst.config).unwrap();
        assert_eq!(again, inst);
        let other = gen_instance(&SimulationConfig { seed: 18, ..inst.config }).unwrap();
        assert_ne!(other.data, inst.data);
    }

    #[test]
    fn construction_identity() {
        for (sigma, rho) in [(1.0, 0.0), (0.0, 0.3), (2.5, 0.5)] {
            let inst = gen_instance(&SimulationConfig {
                n: 30,
                p: 12,
                q: 8,
                rho,
                sigma,
                seed: 3,
                ..Default::default()
            })
            .unwrap();
            let signal = inst.data.predict(&inst.truth.beta, &inst.truth.gamma).unwrap();
            for i in 0..30 {
                assert_eq!(inst.data.y()[i], signal[i] + inst.noise[i]);
                if sigma == 0.0 {
                    assert_eq!(inst.data.y()[i] - signal[i], 0.0);
                }
            }
        }
    }

    #[test]
    fn design_covariance_matches_sigma() {
        let inst = gen_instance(&SimulationConfig {
            n: 20_000,
            p: 2,
            q: 2,
            rho: 0.4,
            beta_support: 1,
            seed: 5,
            ..Default::default()
        })
        .unwrap();
        let x = inst.data.z().hstack(inst.data.w()).unwrap();
        let s = sample_covariance(&x, false).unwrap();
        let sigma = spd_inverse(&make_tridiagonal_precision(4, 0.4).unwrap()).unwrap();
        assert!(s.as_matrix().max_abs_diff(sigma.as_matrix()) < 0.05);
        // W's marginal precision is the inverse of the lower-right block.
        let block = sigma.principal_submatrix(&[2, 3]);
        let omega_w = inst.truth.omega.unwrap();
        let prod = block.as_matrix().matmul(omega_w.as_matrix()).unwrap();
        assert!(prod.max_abs_diff(&Matrix::identity(2)) < 1e-12);
    }

    #[test]
    fn invalid_configs() {
        let base = SimulationConfig::default();
        assert!(gen_instance(&SimulationConfig { beta_support: 60, ..base }).is_err());
        assert!(gen_instance(&SimulationConfig { rho: 1.0, ..base }).is_err());
        assert!(gen_instance(&SimulationConfig { n: 0, ..base }).is_err());
    }
}
