//! Standard-normal density, distribution function, and the few truncated /
//! rectified moments the closed-form correction needs.

use std::f64::consts::PI;

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Standard normal density.
#[inline]
pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal CDF via `erfc`, accurate in both tails.
#[inline]
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// E[max(W, 0)] for W ~ N(mean, sd^2).
pub fn rectified_mean(mean: f64, sd: f64) -> f64 {
    if sd <= 0.0 {
        return mean.max(0.0);
    }
    let z = mean / sd;
    mean * cdf(z) + sd * pdf(z)
}

/// ∫_a^b t φ_σ(t) dt = σ (φ(a/σ) − φ(b/σ)), with infinite endpoints allowed.
pub fn partial_first_moment(a: f64, b: f64, sigma: f64) -> f64 {
    let lo = if a.is_finite() { pdf(a / sigma) } else { 0.0 };
    let hi = if b.is_finite() { pdf(b / sigma) } else { 0.0 };
    sigma * (lo - hi)
}

/// ∫_a^b φ_σ(t) dt with infinite endpoints allowed.
pub fn interval_mass(a: f64, b: f64, sigma: f64) -> f64 {
    let lo = if a.is_finite() { cdf(a / sigma) } else { 0.0 };
    let hi = if b.is_finite() { cdf(b / sigma) } else { 1.0 };
    hi - lo
}
