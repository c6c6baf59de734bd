//! Scalar helpers that work without `std`.

/// Linear predictors are clamped to this magnitude before the logistic map.
pub const LOGIT_CLAMP: f64 = 35.0;

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn tanh(x: f64) -> f64 {
    libm::tanh(x)
}

#[inline]
pub fn ln_1p(x: f64) -> f64 {
    libm::log1p(x)
}

/// Standard normal CDF.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * core::f64::consts::FRAC_1_SQRT_2)
}

/// `1 / (1 + exp(-eta))` with `eta` clamped to `±LOGIT_CLAMP`.
#[inline]
pub fn logistic(eta: f64) -> f64 {
    let eta = eta.clamp(-LOGIT_CLAMP, LOGIT_CLAMP);
    1.0 / (1.0 + exp(-eta))
}

#[inline]
pub fn logit(p: f64) -> f64 {
    ln(p / (1.0 - p))
}

/// Log-likelihood of one Bernoulli outcome under a logistic linear predictor.
#[inline]
pub fn bernoulli_logit_loglik(present: bool, eta: f64) -> f64 {
    let eta = eta.clamp(-LOGIT_CLAMP, LOGIT_CLAMP);
    // log p = -log(1 + e^-eta), log(1-p) = -log(1 + e^eta)
    if present {
        -ln_1p(exp(-eta))
    } else {
        -ln_1p(exp(eta))
    }
}

/// Empirical quantile with linear interpolation between order statistics
/// (the "type 7" rule). `sorted` must be sorted ascending and non-empty.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = libm::floor(h) as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}
