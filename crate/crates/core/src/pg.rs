//! Polya-Gamma PG(1, c) variates.
//!
//! The exact sampler is the alternating-series rejection method of Devroye
//! as specialised to PG(1, z) by Polson, Scott and Windle: propose from a
//! mixture of a truncated inverse Gaussian (left of `TRUNC`) and a shifted
//! exponential (right of `TRUNC`), then accept by squeezing the Jacobi
//! density between partial sums of its series.

use core::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::math::{exp, ln, norm_cdf, sqrt, tanh};

const TRUNC: f64 = 0.64;
const TRUNC_RECIP: f64 = 1.0 / TRUNC;
const PI_SQ: f64 = PI * PI;

/// Tilting parameter of PG(1, c). Always finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PgTilt(f64);

impl PgTilt {
    pub fn new(c: f64) -> Result<Self> {
        if c.is_finite() {
            Ok(Self(c))
        } else {
            Err(Error::InvalidArgument(alloc::format!("Polya-Gamma tilt must be finite, got {c}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Sampling route for PG(1, c).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PgMethod {
    #[default]
    Exact,
    /// Weighted sum of the first `terms` exponentials of the infinite
    /// series representation. Biased low by the dropped tail.
    TruncatedSum { terms: usize },
}

/// One exact draw from PG(1, c).
pub fn sample_pg1<R: Rng + ?Sized>(c: PgTilt, rng: &mut R) -> f64 {
    sample_pg1_with(c, PgMethod::Exact, rng)
}

pub fn sample_pg1_with<R: Rng + ?Sized>(c: PgTilt, method: PgMethod, rng: &mut R) -> f64 {
    match method {
        PgMethod::Exact => 0.25 * sample_jacobi_star(0.5 * c.0.abs(), rng),
        PgMethod::TruncatedSum { terms } => sample_truncated_sum(c.0, terms, rng),
    }
}

/// Unchecked fast path used inside the sampler, where tilts are finite by
/// construction (linear predictors are finite sums of finite values).
#[inline]
pub(crate) fn draw_pg1<R: Rng + ?Sized>(c: f64, rng: &mut R) -> f64 {
    debug_assert!(c.is_finite());
    0.25 * sample_jacobi_star(0.5 * c.abs(), rng)
}

/// `E[PG(1, c)] = tanh(c/2) / (2c)`, with limit 1/4 at zero.
pub fn pg_mean(c: PgTilt) -> f64 {
    pg1_mean(c.0)
}

pub(crate) fn pg1_mean(c: f64) -> f64 {
    let c = c.abs();
    if c < 1e-6 {
        // series: 1/4 - c^2/48 + ...
        0.25 - c * c / 48.0
    } else {
        tanh(0.5 * c) / (2.0 * c)
    }
}

/// `Var[PG(1, c)]`, with limit 1/24 at zero.
pub fn pg_variance(c: PgTilt) -> f64 {
    let c = c.0.abs();
    if c < 1e-3 {
        1.0 / 24.0 - c * c / 60.0
    } else {
        // (sinh(c) - c) / (4 c^3 cosh^2(c/2))
        let ch = libm::cosh(0.5 * c);
        (libm::sinh(c) - c) / (4.0 * c * c * c * ch * ch)
    }
}

fn sample_truncated_sum<R: Rng + ?Sized>(c: f64, terms: usize, rng: &mut R) -> f64 {
    let c_term = c * c / (4.0 * PI_SQ);
    let mut acc = 0.0;
    for k in 1..=terms {
        let g: f64 = Exp1.sample(rng);
        let h = k as f64 - 0.5;
        acc += g / (h * h + c_term);
    }
    acc / (2.0 * PI_SQ)
}

/// Draw from J*(1, z), z >= 0.
fn sample_jacobi_star<R: Rng + ?Sized>(z: f64, rng: &mut R) -> f64 {
    let rate = 0.125 * PI_SQ + 0.5 * z * z;
    let p_exp = exponential_mass(z, rate);
    loop {
        let x = if rng.random::<f64>() < p_exp {
            let e: f64 = Exp1.sample(rng);
            TRUNC + e / rate
        } else {
            truncated_inverse_gaussian(z, rng)
        };
        let mut s = series_term(0, x);
        let y = rng.random::<f64>() * s;
        let mut n = 0usize;
        loop {
            n += 1;
            if n % 2 == 1 {
                s -= series_term(n, x);
                if y <= s {
                    return x;
                }
            } else {
                s += series_term(n, x);
                if y > s {
                    break;
                }
            }
        }
    }
}

/// Probability of proposing from the exponential piece, `p / (p + q)`.
fn exponential_mass(z: f64, rate: f64) -> f64 {
    let b = sqrt(1.0 / TRUNC) * (TRUNC * z - 1.0);
    let a = -sqrt(1.0 / TRUNC) * (TRUNC * z + 1.0);
    let x0 = ln(rate) + rate * TRUNC;
    let xb = x0 - z + ln(norm_cdf(b));
    let xa = x0 + z + ln(norm_cdf(a));
    let q_over_p = 4.0 / PI * (exp(xb) + exp(xa));
    1.0 / (1.0 + q_over_p)
}

/// n-th coefficient of the alternating series for the J*(1, 0) density,
/// using the representation that converges fastest on each side of TRUNC.
fn series_term(n: usize, x: f64) -> f64 {
    let h = n as f64 + 0.5;
    let k = h * PI;
    if x > TRUNC {
        k * exp(-0.5 * k * k * x)
    } else if x > 0.0 {
        exp(-1.5 * (ln(FRAC_PI_2) + ln(x)) + ln(k) - 2.0 * h * h / x)
    } else {
        0.0
    }
}

/// Inverse Gaussian with mean 1/z and shape 1, truncated to (0, TRUNC).
fn truncated_inverse_gaussian<R: Rng + ?Sized>(z: f64, rng: &mut R) -> f64 {
    if z < TRUNC_RECIP {
        // mean beyond the truncation point: propose from the z = 0 law
        // (a truncated inverse chi-square) and thin by exp(-z^2 x / 2)
        loop {
            let (mut e1, mut e2): (f64, f64) = (Exp1.sample(rng), Exp1.sample(rng));
            while e1 * e1 > 2.0 * e2 / TRUNC {
                e1 = Exp1.sample(rng);
                e2 = Exp1.sample(rng);
            }
            let d = 1.0 + e1 * TRUNC;
            let x = TRUNC / (d * d);
            let alpha = exp(-0.5 * z * z * x);
            if rng.random::<f64>() <= alpha {
                return x;
            }
        }
    } else {
        let mu = 1.0 / z;
        loop {
            let g: f64 = StandardNormal.sample(rng);
            let mu_y = mu * g * g;
            let half_mu = 0.5 * mu;
            let mut x = mu + half_mu * mu_y - half_mu * sqrt(4.0 * mu_y + mu_y * mu_y);
            if rng.random::<f64>() > mu / (mu + x) {
                x = mu * mu / x;
            }
            if x < TRUNC {
                return x;
            }
        }
    }
}
