//! Squared-exponential GP covariance over trait values.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{spd_factor, Cholesky, SpdMatrix};
use crate::math::exp;

pub const JITTER_START: f64 = 1e-8;
pub const JITTER_MAX: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KernelParams {
    /// Inverse squared length scale.
    pub kappa: f64,
    pub jitter: f64,
}

impl KernelParams {
    pub fn new(kappa: f64) -> Result<Self> {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(Error::InvalidArgument(format!("kappa must be positive, got {kappa}")));
        }
        Ok(Self { kappa, jitter: JITTER_START })
    }
}

/// `exp(-kappa (xi - xj)^2)`.
#[inline]
pub fn sq_exp_corr(xi: f64, xj: f64, kp: &KernelParams) -> f64 {
    let d = xi - xj;
    exp(-kp.kappa * d * d)
}

/// Correlation matrix over `unique_x` plus `kp.jitter` on the diagonal.
pub fn covariance_matrix(unique_x: &[f64], kp: &KernelParams) -> SpdMatrix {
    let n = unique_x.len();
    let mut c = SpdMatrix::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let v = sq_exp_corr(unique_x[i], unique_x[j], kp);
            c.set(i, j, v);
            c.set(j, i, v);
        }
    }
    c.add_diagonal(kp.jitter);
    c
}

/// A factored GP covariance.
#[derive(Debug, Clone)]
pub struct GpCovariance {
    pub matrix: SpdMatrix,
    pub factor: Cholesky,
    /// Jitter that made the factorization succeed.
    pub jitter: f64,
}

/// Builds and factors the covariance over strictly increasing `unique_x`,
/// escalating the diagonal jitter tenfold from `kp.jitter` up to
/// [`JITTER_MAX`] until the Cholesky factorization succeeds.
pub fn build_covariance(unique_x: &[f64], kp: &KernelParams) -> Result<GpCovariance> {
    if unique_x.is_empty() {
        return Err(Error::InvalidArgument("no trait values".into()));
    }
    if unique_x.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument("trait grid must be strictly increasing".into()));
    }
    let mut jitter = kp.jitter;
    loop {
        let matrix = covariance_matrix(unique_x, &KernelParams { kappa: kp.kappa, jitter });
        match spd_factor(&matrix) {
            Ok(factor) => return Ok(GpCovariance { matrix, factor, jitter }),
            Err(_) if jitter * 10.0 <= JITTER_MAX * (1.0 + 1e-9) => {
                jitter = if jitter == 0.0 { JITTER_START } else { jitter * 10.0 };
            }
            Err(_) => {
                return Err(Error::Numerical {
                    context: format!(
                        "GP covariance over {} trait values with kappa={} is not positive definite",
                        unique_x.len(),
                        kp.kappa
                    ),
                    jitter,
                })
            }
        }
    }
}

/// Values of `sq_exp_corr` between each grid point and `x`.
pub fn cross_correlation(unique_x: &[f64], x: f64, kp: &KernelParams) -> Vec<f64> {
    unique_x.iter().map(|&u| sq_exp_corr(u, x, kp)).collect()
}
