//! Independent numerical oracles for the integration tests: double
//! exponential quadrature, finite-difference weights, Lévy-integral forms
//! of the transforms, and empirical distribution distances.
#![allow(dead_code)]

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ts_core::TemperedStableParams;

/// Trapezoid sums of a transformed integrand on t ∈ [−tmax, tmax], with the
/// step halved until two levels agree to `rel`.
fn de_sum(g: impl Fn(f64) -> Complex64, tmax: f64, rel: f64) -> Complex64 {
    let mut h = 0.5;
    let mut total = Complex64::new(0.0, 0.0);
    let n0 = (tmax / h) as i64;
    for k in -n0..=n0 {
        total += g(k as f64 * h);
    }
    let mut est = total * h;
    for _ in 0..10 {
        h *= 0.5;
        let n = (tmax / h) as i64;
        let mut add = Complex64::new(0.0, 0.0);
        let mut k = -n + if n % 2 == 0 { 1 } else { 0 };
        while k <= n {
            add += g(k as f64 * h);
            k += 2;
        }
        total += add;
        let next = total * h;
        if (next - est).norm() <= rel * next.norm() {
            return next;
        }
        est = next;
    }
    est
}

fn finite_or_zero(v: Complex64) -> Complex64 {
    if v.re.is_finite() && v.im.is_finite() {
        v
    } else {
        Complex64::new(0.0, 0.0)
    }
}

/// ∫_a^∞ f(x) dx for f decaying at least exponentially (exp-sinh rule).
pub fn exp_sinh(f: impl Fn(f64) -> Complex64, a: f64, scale: f64) -> Complex64 {
    de_sum(
        |t| {
            let e = (FRAC_PI_2 * t.sinh()).exp();
            let x = a + scale * e;
            if x == a {
                return Complex64::new(0.0, 0.0);
            }
            finite_or_zero(f(x) * (scale * FRAC_PI_2 * t.cosh() * e))
        },
        4.5,
        1e-13,
    )
}

/// ∫_ℝ f(x) dx for f decaying at least exponentially (sinh-sinh rule
/// centred at `c` with width `s`).
pub fn sinh_sinh(f: impl Fn(f64) -> f64, c: f64, s: f64) -> f64 {
    de_sum(
        |t| {
            let u = FRAC_PI_2 * t.sinh();
            let x = c + s * u.sinh();
            let w = s * FRAC_PI_2 * t.cosh() * u.cosh();
            finite_or_zero(Complex64::new(f(x) * w, 0.0))
        },
        3.2,
        1e-11,
    )
    .re
}

/// ∫_a^b f(x) dx by the tanh-sinh rule, complex-valued.
pub fn tanh_sinh_c(f: impl Fn(f64) -> Complex64, a: f64, b: f64) -> Complex64 {
    let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
    de_sum(
        |t| {
            let u = FRAC_PI_2 * t.sinh();
            let x = c + r * u.tanh();
            if x <= a || x >= b {
                return Complex64::new(0.0, 0.0);
            }
            let w = r * FRAC_PI_2 * t.cosh() / u.cosh().powi(2);
            finite_or_zero(f(x) * w)
        },
        3.5,
        1e-13,
    )
}

pub fn tanh_sinh(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    tanh_sinh_c(|x| Complex64::new(f(x), 0.0), a, b).re
}

/// Finite-difference weights for the `m`-th derivative at 0 on `nodes`
/// (Fornberg's recursion).
pub fn fd_weights(nodes: &[f64], m: usize) -> Vec<f64> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0];
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i];
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|row| row[m]).collect()
}

/// m-th derivative of f at 0 from a 9-point central stencil of spacing h.
pub fn fd_derivative(f: impl Fn(f64) -> f64, m: usize, h: f64) -> f64 {
    let nodes: Vec<f64> = (-4..=4).map(|k| k as f64 * h).collect();
    let w = fd_weights(&nodes, m);
    nodes.iter().zip(&w).map(|(x, w)| w * f(*x)).sum()
}

/// ∫_0^∞ (e^{ux} − 1) α x^{−1−β} e^{−λx} dx for complex u with Re u < λ.
///
/// On [0, 1] the substitution x = y^{1/(1−β)} removes the x^{−β}
/// singularity; [1, ∞) uses the exp-sinh rule.
pub fn levy_exponent_leg(alpha: f64, beta: f64, lambda: f64, u: Complex64) -> Complex64 {
    // (e^{ux} − 1)/x without cancellation for small |ux|
    let kernel = |x: f64| {
        let v = u * x;
        let q = if v.norm() < 1e-3 { u * (1.0 + v * (0.5 + v / 6.0)) } else { (v.exp() - 1.0) / x };
        q * alpha * (-lambda * x).exp()
    };
    let k = 1.0 / (1.0 - beta);
    let head = tanh_sinh_c(|y| kernel(y.powf(k)) * k, 0.0, 1.0);
    let tail = exp_sinh(|x| kernel(x) * x.powf(-beta), 1.0, 1.0 / (lambda - u.re));
    head + tail
}

/// Ψ(u) of a two-sided law by quadrature of the Lévy integral.
pub fn levy_exponent(p: &TemperedStableParams, u: Complex64) -> Complex64 {
    let [ap, bp, lp, am, bm, lm] = p.to_array();
    levy_exponent_leg(ap, bp, lp, u) + levy_exponent_leg(am, bm, lm, -u)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random law with β legs in [bmin, bmax] and moderate α, λ.
pub fn random_params(r: &mut ChaCha8Rng, bmin: f64, bmax: f64) -> TemperedStableParams {
    let mut leg = || {
        let a = (r.random::<f64>() * 3.0 - 1.5).exp();
        let b = bmin + (bmax - bmin) * r.random::<f64>();
        let l = (r.random::<f64>() * 3.0 - 1.0).exp();
        (a, b, l)
    };
    let (ap, bp, lp) = leg();
    let (am, bm, lm) = leg();
    TemperedStableParams::new(ap, bp, lp, am, bm, lm).unwrap()
}

/// Standard normal cdf: erf series below 2, erfc continued fraction above.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < 2.0 {
        // Maclaurin series of erf
        let mut term = x;
        let mut sum = x;
        let x2 = x * x;
        for n in 1..200 {
            term *= -x2 / n as f64;
            let add = term / (2 * n + 1) as f64;
            sum += add;
            if add.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        1.0 - sum * 2.0 / std::f64::consts::PI.sqrt()
    } else {
        // Lentz continued fraction for erfc
        let tiny = 1e-300;
        let mut f = x;
        let mut c = x;
        let mut d = 0.0;
        for n in 1..500 {
            let a = n as f64 * 0.5;
            d = x + a * d;
            d = if d.abs() < tiny { tiny } else { d };
            c = x + a / c;
            c = if c.abs() < tiny { tiny } else { c };
            d = 1.0 / d;
            let delta = c * d;
            f *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        (-x * x).exp() / (f * std::f64::consts::PI.sqrt())
    }
}

/// sup_x |F_n(x) − F(x)| for a sample and a continuous cdf.
pub fn ks_distance(sample: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(|a, b| a.total_cmp(b));
    let n = sample.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sample.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(|x, y| x.total_cmp(y));
    b.sort_by(|x, y| x.total_cmp(y));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Sample mean and its standard error.
pub fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}
