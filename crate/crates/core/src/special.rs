//! Gamma-family helpers plus complex `ln(1+v)` / `exp(w)-1` evaluated
//! without cancellation near the origin.

use num_complex::Complex64;

pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

pub fn digamma(x: f64) -> f64 {
    statrs::function::gamma::digamma(x)
}

/// Γ(−β) for β in (0,1), via Γ(1−β)/(−β).
pub fn gamma_neg(beta: f64) -> f64 {
    gamma(1.0 - beta) / (-beta)
}

/// Regularized lower incomplete gamma P(a, x).
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    statrs::function::gamma::gamma_lr(a, x)
}

/// Standard normal cdf.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// Principal-branch ln(1+v), accurate for small |v|.
pub fn ln1p_c(v: Complex64) -> Complex64 {
    let (a, b) = (v.re, v.im);
    let re = 0.5 * (a * (2.0 + a) + b * b).ln_1p();
    let im = b.atan2(1.0 + a);
    Complex64::new(re, im)
}

/// exp(w) − 1, accurate for small |w|.
pub fn expm1_c(w: Complex64) -> Complex64 {
    let (x, y) = (w.re, w.im);
    let half = (0.5 * y).sin();
    let re = x.exp_m1() * y.cos() - 2.0 * half * half;
    let im = x.exp() * y.sin();
    Complex64::new(re, im)
}
