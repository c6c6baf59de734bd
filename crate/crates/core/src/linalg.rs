//! Dense symmetric positive-definite linear algebra.
//!
//! Matrices are small (at most a few hundred rows) and stored row-major in
//! plain vectors.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::math::sqrt;

/// Square symmetric matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SpdMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![0.0; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn from_rows(dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::InvalidArgument(alloc::format!("{} entries for a {dim}x{dim} matrix", data.len())));
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, x: f64) {
        self.data[i * self.dim + j] = x;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, x: f64) {
        self.data[i * self.dim + j] += x;
    }

    pub fn add_diagonal(&mut self, x: f64) {
        for i in 0..self.dim {
            self.data[i * self.dim + i] += x;
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|x| *x *= s);
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.dim).all(|i| {
            (0..i).all(|j| {
                let (a, b) = (self.get(i, j), self.get(j, i));
                (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
            })
        })
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| self.data[i * self.dim..(i + 1) * self.dim].iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn cholesky(&self) -> Result<Cholesky> {
        spd_factor(self)
    }
}

/// Lower-triangular Cholesky factor `L` with `L L^T = M`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky {
    dim: usize,
    lower: Vec<f64>,
}

/// Factors `M = L L^T`. Only the lower triangle of `M` is read.
pub fn spd_factor(m: &SpdMatrix) -> Result<Cholesky> {
    let n = m.dim;
    let mut l = vec![0.0; n * n];
    factor_into(&m.data, n, &mut l)?;
    Ok(Cholesky { dim: n, lower: l })
}

/// Cholesky of the row-major `a` into `l` (which must hold n*n zeros or
/// stale values; the upper triangle is zeroed).
pub(crate) fn factor_into(a: &[f64], n: usize, l: &mut [f64]) -> Result<()> {
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return Err(Error::Numerical {
                        context: alloc::format!("matrix not positive definite at pivot {i}"),
                        jitter: 0.0,
                    });
                }
                l[i * n + i] = sqrt(s);
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
        for j in (i + 1)..n {
            l[i * n + j] = 0.0;
        }
    }
    Ok(())
}

impl Cholesky {
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.lower[i * self.dim + j]
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    /// Solves `L y = b` in place.
    pub fn forward_in_place(&self, b: &mut [f64]) {
        forward(&self.lower, self.dim, b)
    }

    /// Solves `L^T x = y` in place.
    pub fn backward_in_place(&self, y: &mut [f64]) {
        backward(&self.lower, self.dim, y)
    }

    /// Solves `M x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        self.forward_in_place(x);
        self.backward_in_place(x);
    }

    /// `M^{-1}` as a dense matrix.
    pub fn inverse(&self) -> SpdMatrix {
        let n = self.dim;
        let mut inv = SpdMatrix::zeros(n);
        let mut col = vec![0.0; n];
        for j in 0..n {
            col.iter_mut().for_each(|x| *x = 0.0);
            col[j] = 1.0;
            self.solve_in_place(&mut col);
            for i in 0..n {
                inv.data[i * n + j] = col[i];
            }
        }
        // symmetrise round-off
        for i in 0..n {
            for j in 0..i {
                let m = 0.5 * (inv.data[i * n + j] + inv.data[j * n + i]);
                inv.data[i * n + j] = m;
                inv.data[j * n + i] = m;
            }
        }
        inv
    }

    /// `L z`.
    pub fn mul_lower(&self, z: &[f64]) -> Vec<f64> {
        let n = self.dim;
        (0..n).map(|i| (0..=i).map(|k| self.lower[i * n + k] * z[k]).sum()).collect()
    }
}

#[inline]
pub(crate) fn forward(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

#[inline]
pub(crate) fn backward(l: &[f64], n: usize, y: &mut [f64]) {
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
}

/// Parameterisation of a Gaussian handed to [`spd_sample`].
pub enum GaussianForm<'a> {
    /// `N(mean, cov)`, `cov` given by its factor.
    Covariance(&'a Cholesky),
    /// `N(P^{-1} b, P^{-1})`: canonical form with precision factor and
    /// linear term `b` (the mean argument is ignored).
    Canonical { precision: &'a Cholesky, linear: &'a [f64] },
}

/// One Gaussian draw.
pub fn spd_sample<R: Rng + ?Sized>(mean: &[f64], form: GaussianForm<'_>, rng: &mut R) -> Vec<f64> {
    match form {
        GaussianForm::Covariance(f) => {
            let z: Vec<f64> = (0..f.dim).map(|_| StandardNormal.sample(rng)).collect();
            let lz = f.mul_lower(&z);
            mean.iter().zip(lz).map(|(m, e)| m + e).collect()
        }
        GaussianForm::Canonical { precision, linear } => {
            let mut out = vec![0.0; precision.dim];
            sample_canonical_into(&precision.lower, precision.dim, linear, rng, &mut out);
            out
        }
    }
}

/// Draws `x ~ N(P^{-1} b, P^{-1})` given the Cholesky factor of `P`:
/// `x = L^{-T}(L^{-1} b + z)`.
#[inline]
pub(crate) fn sample_canonical_into<R: Rng + ?Sized>(
    l: &[f64],
    n: usize,
    linear: &[f64],
    rng: &mut R,
    out: &mut [f64],
) {
    out[..n].copy_from_slice(&linear[..n]);
    forward(l, n, out);
    for x in out.iter_mut().take(n) {
        let z: f64 = StandardNormal.sample(rng);
        *x += z;
    }
    backward(l, n, out);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn identity_factor_and_solve() {
        let f = spd_factor(&SpdMatrix::identity(3)).unwrap();
        assert_eq!(f.lower(), SpdMatrix::identity(3).as_slice());
        assert_eq!(f.solve(&[1.0, -2.0, 3.0]), vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn hand_cholesky_2x2() {
        let m = SpdMatrix::from_rows(2, vec![4.0, 2.0, 2.0, 3.0]).unwrap();
        let f = spd_factor(&m).unwrap();
        assert!((f.get(0, 0) - 2.0).abs() < 1e-15);
        assert_eq!(f.get(0, 1), 0.0);
        assert!((f.get(1, 0) - 1.0).abs() < 1e-15);
        assert!((f.get(1, 1) - 2f64.sqrt()).abs() < 1e-15);
        let x = f.solve(&[2.0, 1.0]);
        let b = m.mul_vec(&x);
        assert!((b[0] - 2.0).abs() < 1e-14 && (b[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_indefinite() {
        let m = SpdMatrix::from_rows(2, vec![1.0, 2.0, 2.0, 1.0]).unwrap();
        assert!(matches!(spd_factor(&m), Err(Error::Numerical { .. })));
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let m = SpdMatrix::from_rows(3, vec![4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]).unwrap();
        let inv = m.cholesky().unwrap().inverse();
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = (0..3).map(|k| m.get(i, k) * inv.get(k, j)).sum();
                assert!((s - if i == j { 1.0 } else { 0.0 }).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn tiny_covariance_sample_sits_on_mean() {
        let mut c = SpdMatrix::zeros(3);
        c.add_diagonal(1e-8);
        let f = c.cholesky().unwrap();
        let mut rng = RngStream::new(1, 0).rng();
        let mean = [1.0, -2.0, 0.5];
        for _ in 0..100 {
            let x = spd_sample(&mean, GaussianForm::Covariance(&f), &mut rng);
            for (a, b) in x.iter().zip(&mean) {
                assert!((a - b).abs() < 6e-4);
            }
        }
    }

    #[test]
    fn canonical_sample_moments() {
        // P = [[2, 0.5], [0.5, 1]], b = [1, 1]
        let p = SpdMatrix::from_rows(2, vec![2.0, 0.5, 0.5, 1.0]).unwrap();
        let f = p.cholesky().unwrap();
        let cov = f.inverse();
        let mean = f.solve(&[1.0, 1.0]);
        let mut rng = RngStream::new(3, 0).rng();
        let n = 40_000;
        let mut s = [0.0; 2];
        let mut ss = [0.0; 3];
        for _ in 0..n {
            let x = spd_sample(&[], GaussianForm::Canonical { precision: &f, linear: &[1.0, 1.0] }, &mut rng);
            s[0] += x[0];
            s[1] += x[1];
            ss[0] += x[0] * x[0];
            ss[1] += x[0] * x[1];
            ss[2] += x[1] * x[1];
        }
        let nf = n as f64;
        let m = [s[0] / nf, s[1] / nf];
        for k in 0..2 {
            let se = (cov.get(k, k) / nf).sqrt();
            assert!((m[k] - mean[k]).abs() < 4.0 * se);
        }
        let c01 = ss[1] / nf - m[0] * m[1];
        assert!((c01 - cov.get(0, 1)).abs() < 0.02);
    }
}
