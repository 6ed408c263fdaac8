//! Dense symmetric kernels: Cholesky, SPD inverse, second-moment matrices
//! and multivariate normal sampling.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix, SymmetricMatrix};
use crate::rng::Stream;

/// Lower-triangular `L` with `L Lᵀ = S` and a strictly positive diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    l: Matrix,
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    pub fn lower(&self) -> &Matrix {
        &self.l
    }

    /// `L Lᵀ`.
    pub fn reconstruct(&self) -> SymmetricMatrix {
        let lt = self.l.transpose();
        SymmetricMatrix::symmetrize(self.l.matmul(&lt).expect("square factor"))
    }

    /// Solves `S x = b` by forward and back substitution.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let d = self.dim();
        Error::check_dim("CholeskyFactor::solve", d, b.len())?;
        let l = &self.l;
        let mut x = b.to_vec();
        for i in 0..d {
            let mut s = x[i];
            for k in 0..i {
                s -= l[(i, k)] * x[k];
            }
            x[i] = s / l[(i, i)];
        }
        for i in (0..d).rev() {
            let mut s = x[i];
            for k in i + 1..d {
                s -= l[(k, i)] * x[k];
            }
            x[i] = s / l[(i, i)];
        }
        Ok(x)
    }

    pub fn log_det(&self) -> f64 {
        (0..self.dim()).map(|i| 2.0 * libm::log(self.l[(i, i)])).sum()
    }
}

/// Cholesky factorization. Fails with [`Error::NotPositiveDefinite`] at the
/// first non-positive pivot.
pub fn cholesky(s: &SymmetricMatrix) -> Result<CholeskyFactor> {
    let d = s.dim();
    // Row-major working copy so the inner products run over contiguous rows.
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let (ri, rj) = (&l[i * d..i * d + j], &l[j * d..j * d + j]);
            let v = s[(i, j)] - dot(ri, rj);
            if i == j {
                if !(v > 0.0) || !v.is_finite() {
                    return Err(Error::NotPositiveDefinite { pivot: i, value: v });
                }
                l[i * d + i] = libm::sqrt(v);
            } else {
                l[i * d + j] = v / l[j * d + j];
            }
        }
    }
    Ok(CholeskyFactor {
        l: Matrix::from_row_major(d, d, &l)?,
    })
}

/// Inverse of a symmetric positive-definite matrix via its Cholesky factor.
pub fn spd_inverse(s: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    let chol = cholesky(s)?;
    let d = s.dim();
    let mut inv = Matrix::zeros(d, d);
    let mut e = vec![0.0; d];
    for j in 0..d {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[j] = 1.0;
        let col = chol.solve(&e)?;
        inv.col_mut(j).copy_from_slice(&col);
    }
    Ok(SymmetricMatrix::symmetrize(inv))
}

/// `Wᵀ W / n`, or the centered covariance when `centered` is set.
pub fn sample_covariance(w: &Matrix, centered: bool) -> Result<SymmetricMatrix> {
    let n = w.rows();
    if n == 0 {
        return Err(Error::input("sample covariance needs at least one row"));
    }
    let q = w.cols();
    let centered_cols: Option<Matrix> = centered.then(|| {
        let means: Vec<f64> = (0..q).map(|j| w.col(j).iter().sum::<f64>() / n as f64).collect();
        Matrix::from_fn(n, q, |i, j| w[(i, j)] - means[j])
    });
    let x = centered_cols.as_ref().unwrap_or(w);
    let mut out = Matrix::zeros(q, q);
    for j in 0..q {
        for k in 0..=j {
            let v = dot(x.col(j), x.col(k)) / n as f64;
            out[(j, k)] = v;
            out[(k, j)] = v;
        }
    }
    Ok(SymmetricMatrix::symmetrize(out))
}

/// `n` independent rows from `N(0, L Lᵀ)`, realised as `G Lᵀ` with `G`
/// standard normal drawn row by row from `rng`.
pub fn gaussian_sample(chol: &CholeskyFactor, n: usize, rng: &mut Stream) -> Matrix {
    let d = chol.dim();
    let l = chol.lower();
    let mut out = Matrix::zeros(n, d);
    let mut g = vec![0.0; d];
    for i in 0..n {
        g.iter_mut().for_each(|v| *v = rng.standard_normal());
        for j in 0..d {
            let mut s = 0.0;
            for k in 0..=j {
                s += g[k] * l[(j, k)];
            }
            out[(i, j)] = s;
        }
    }
    out
}
