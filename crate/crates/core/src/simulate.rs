//! Exact sampling of one-sided laws, sample paths, and path diagnostics.
//!
//! A one-sided TS(A, β, λ) variate is an exponentially tilted positive
//! β-stable variate: draw S with E e^{−sS} = exp(AΓ(−β)s^β) and keep it with
//! probability e^{−λS}. The acceptance rate is exp(AΓ(−β)λ^β), so the law
//! is split into m independent pieces of weight A/m with m chosen to keep
//! each piece's acceptance rate at least e^{−1}.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use serde::Serialize;

use crate::error::{Result, TsError};
use crate::params::{OneSidedParams, TemperedStableParams};
use crate::quad::integrate_half_line;
use crate::special::{gamma, gamma_p};

/// Maximum rejection rounds for a single piece.
pub const MAX_TRIES: usize = 1_000_000;

fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

fn exp1<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    -open01(rng).ln()
}

/// ln S for a positive stable S with E e^{−sS} = e^{−s^β} (Kanter's form).
fn ln_positive_stable<R: Rng + ?Sized>(beta: f64, rng: &mut R) -> f64 {
    let u = std::f64::consts::PI * open01(rng);
    let e = exp1(rng);
    (beta * u).sin().ln() - u.sin().ln() / beta
        + (1.0 - beta) / beta * (((1.0 - beta) * u).sin().ln() - e.ln())
}

/// Positive stable variate with E e^{−sS} = e^{−s^β}, β ∈ (0, 1).
pub fn positive_stable<R: Rng + ?Sized>(beta: f64, rng: &mut R) -> f64 {
    ln_positive_stable(beta, rng).exp()
}

/// Number of pieces used by [`sample_one_sided`] for TS(αt, β, λ).
pub fn split_count(p: &OneSidedParams, t: f64) -> usize {
    let b = p.beta();
    if b == 0.0 {
        return 1;
    }
    let k = p.alpha() * t * gamma(1.0 - b) * p.lambda().powf(b) / b;
    k.ceil().max(1.0) as usize
}

/// Exact draw from TS(αt, β, λ).
pub fn sample_one_sided<R: Rng + ?Sized>(p: &OneSidedParams, t: f64, rng: &mut R) -> Result<f64> {
    if !(t.is_finite() && t > 0.0) {
        return Err(TsError::ParamDomain(format!("time must be finite and > 0, got {t}")));
    }
    let (a, b, l) = (p.alpha() * t, p.beta(), p.lambda());
    if b == 0.0 {
        let g = Gamma::new(a, 1.0 / l).map_err(|e| TsError::ParamDomain(e.to_string()))?;
        return Ok(g.sample(rng));
    }
    let m = split_count(p, t);
    let c = a * gamma(1.0 - b) / (b * m as f64);
    let ln_scale = c.ln() / b;
    let mut total = 0.0;
    for _ in 0..m {
        let mut tries = 0;
        loop {
            tries += 1;
            if tries > MAX_TRIES {
                return Err(TsError::Simulation(format!(
                    "rejection exceeded {MAX_TRIES} rounds for TS({a}, {b}, {l})"
                )));
            }
            let s = (ln_scale + ln_positive_stable(b, rng)).exp();
            if exp1(rng) > l * s {
                total += s;
                break;
            }
        }
    }
    Ok(total)
}

/// Exact draw of X_t = X⁺_t − X⁻_t using one generator per leg.
pub fn sample_two_sided<R: Rng + ?Sized>(
    p: &TemperedStableParams,
    t: f64,
    plus_rng: &mut R,
    minus_rng: &mut R,
) -> Result<f64> {
    Ok(sample_one_sided(p.plus(), t, plus_rng)? - sample_one_sided(p.minus(), t, minus_rng)?)
}

/// Generator for one stream derived from a master seed.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// `n` independent draws of X_t; leg streams 0 and 1 of `seed`.
pub fn sample_many(p: &TemperedStableParams, t: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    let mut rp = stream_rng(seed, 0);
    let mut rm = stream_rng(seed, 1);
    (0..n).map(|_| sample_two_sided(p, t, &mut rp, &mut rm)).collect()
}

/// `n` independent draws of a one-sided X_t from stream 0 of `seed`.
pub fn sample_many_one_sided(p: &OneSidedParams, t: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    let mut r = stream_rng(seed, 0);
    (0..n).map(|_| sample_one_sided(p, t, &mut r)).collect()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PathConfig {
    pub horizon: f64,
    pub step: f64,
    pub seed: u64,
    /// Jumps with |size| ≥ jump_floor are recorded; 0 disables the record.
    pub jump_floor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Jump {
    pub time: f64,
    /// Positive for up-jumps (plus leg), negative for down-jumps.
    pub size: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Path {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub jumps: Vec<Jump>,
    pub jump_floor: f64,
}

impl Path {
    pub fn increments(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Compound-Poisson layer of jumps ≥ floor for one leg.
struct BigJumps {
    rate: f64,
    floor: f64,
    split: f64,
    w_low: f64,
    w_high: f64,
    small_mean: f64,
    small_var: f64,
}

impl BigJumps {
    fn new(p: &OneSidedParams, floor: f64) -> Result<Self> {
        let (a, b, l) = (p.alpha(), p.beta(), p.lambda());
        // α ∫_f^∞ x^{−1−β} e^{−λx} dx with x = f e^u
        let integrand = |u: f64| {
            let x = floor * u.exp();
            num_complex::Complex64::new(x.powf(-b) * (-l * x).exp(), 0.0)
        };
        let rate = a * integrate_half_line(integrand, 1.0, 1e-300, 1e-12)?.re;
        let split = floor.max(1.0 / l);
        // envelope masses: x^{−1−β} e^{−λf} on [f, split], split^{−1−β} e^{−λx} beyond
        let w_low = if split > floor {
            let m = if b == 0.0 { (split / floor).ln() } else { (floor.powf(-b) - split.powf(-b)) / b };
            m * (-l * floor).exp()
        } else {
            0.0
        };
        let w_high = split.powf(-1.0 - b) * (-l * split).exp() / l;
        let small_mean = a * l.powf(b - 1.0) * gamma(1.0 - b) * gamma_p(1.0 - b, l * floor);
        let small_var = a * l.powf(b - 2.0) * gamma(2.0 - b) * gamma_p(2.0 - b, l * floor);
        Ok(Self { rate, floor, split, w_low, w_high, small_mean, small_var })
    }

    fn size<R: Rng + ?Sized>(&self, p: &OneSidedParams, rng: &mut R) -> Result<f64> {
        let (b, l, f, s) = (p.beta(), p.lambda(), self.floor, self.split);
        let p_low = self.w_low / (self.w_low + self.w_high);
        for _ in 0..MAX_TRIES {
            if rng.random::<f64>() < p_low {
                let u = open01(rng);
                let x = if b == 0.0 {
                    f * (s / f).powf(u)
                } else {
                    (f.powf(-b) - u * (f.powf(-b) - s.powf(-b))).powf(-1.0 / b)
                };
                if open01(rng) <= (-l * (x - f)).exp() {
                    return Ok(x);
                }
            } else {
                let x = s + exp1(rng) / l;
                if open01(rng) <= (s / x).powf(1.0 + b) {
                    return Ok(x);
                }
            }
        }
        Err(TsError::Simulation("jump-size rejection did not terminate".into()))
    }

    /// Sub-floor part over a step of length dt: a gamma variate with the
    /// exact mean and variance of the truncated small-jump component.
    fn small<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> Result<f64> {
        let (m, v) = (self.small_mean * dt, self.small_var * dt);
        if !(m > 0.0 && v > 0.0) {
            return Ok(0.0);
        }
        let g = Gamma::new(m * m / v, v / m).map_err(|e| TsError::Simulation(e.to_string()))?;
        Ok(g.sample(rng))
    }
}

fn leg_step<R: Rng + ?Sized>(
    p: &OneSidedParams,
    big: Option<&BigJumps>,
    t0: f64,
    dt: f64,
    sign: f64,
    rng: &mut R,
    jumps: &mut Vec<Jump>,
) -> Result<f64> {
    match big {
        None => sample_one_sided(p, dt, rng),
        Some(bj) => {
            let mut x = bj.small(dt, rng)?;
            let mean = bj.rate * dt;
            if mean > 0.0 {
                let n = Poisson::new(mean).map_err(|e| TsError::Simulation(e.to_string()))?.sample(rng) as u64;
                for _ in 0..n {
                    let size = bj.size(p, rng)?;
                    x += size;
                    jumps.push(Jump { time: t0 + dt * rng.random::<f64>(), size: sign * size });
                }
            }
            Ok(x)
        }
    }
}

/// Sample path on a uniform grid. Each leg draws its own stream; when a
/// jump floor is set, jumps above it come from an exact compound-Poisson
/// layer and are recorded.
pub fn simulate_path(p: &TemperedStableParams, cfg: &PathConfig) -> Result<Path> {
    if !(cfg.horizon.is_finite() && cfg.horizon > 0.0 && cfg.step.is_finite() && cfg.step > 0.0) {
        return Err(TsError::Input(format!("horizon and step must be > 0 (got {}, {})", cfg.horizon, cfg.step)));
    }
    if !(cfg.jump_floor.is_finite() && cfg.jump_floor >= 0.0) {
        return Err(TsError::Input(format!("jump floor must be >= 0, got {}", cfg.jump_floor)));
    }
    let n = (cfg.horizon / cfg.step).round();
    if n < 1.0 || (n * cfg.step - cfg.horizon).abs() > 1e-12 * cfg.horizon {
        return Err(TsError::Input(format!("step {} must divide horizon {}", cfg.step, cfg.horizon)));
    }
    let n = n as usize;
    let (big_p, big_m) = if cfg.jump_floor > 0.0 {
        (Some(BigJumps::new(p.plus(), cfg.jump_floor)?), Some(BigJumps::new(p.minus(), cfg.jump_floor)?))
    } else {
        (None, None)
    };
    let mut rp = stream_rng(cfg.seed, 0);
    let mut rm = stream_rng(cfg.seed, 1);
    let mut times = Vec::with_capacity(n + 1);
    let mut values = Vec::with_capacity(n + 1);
    let mut jumps = Vec::new();
    times.push(0.0);
    values.push(0.0);
    let mut x = 0.0;
    for k in 0..n {
        let t0 = k as f64 * cfg.step;
        let t1 = if k + 1 == n { cfg.horizon } else { (k + 1) as f64 * cfg.step };
        let dt = t1 - t0;
        let up = leg_step(p.plus(), big_p.as_ref(), t0, dt, 1.0, &mut rp, &mut jumps)?;
        let down = leg_step(p.minus(), big_m.as_ref(), t0, dt, -1.0, &mut rm, &mut jumps)?;
        x += up - down;
        times.push(t1);
        values.push(x);
    }
    jumps.sort_by(|a, b| a.time.total_cmp(&b.time));
    Ok(Path { times, values, jumps, jump_floor: cfg.jump_floor })
}

/// φ_β(x) = (1 + βx)^{−1/β}, or e^{−x} when β = 0.
pub fn phi(beta: f64, x: f64) -> f64 {
    if beta == 0.0 {
        (-x).exp()
    } else {
        (1.0 + beta * x).powf(-1.0 / beta)
    }
}

fn phi_inv(beta: f64, y: f64) -> f64 {
    if beta == 0.0 {
        -y.ln()
    } else {
        (y.powf(-beta) - 1.0) / beta
    }
}

/// Counts of recorded up-jumps in the bands (φ_β(n+1), φ_β(n)], n = 1..=n_bins,
/// over the whole path.
pub fn jump_bin_counts(path: &Path, beta: f64, n_bins: usize) -> Result<Vec<u64>> {
    if !(0.0..1.0).contains(&beta) {
        return Err(TsError::ParamDomain(format!("beta must lie in [0, 1), got {beta}")));
    }
    if n_bins == 0 {
        return Err(TsError::Input("need at least one band".into()));
    }
    let lowest = phi(beta, (n_bins + 1) as f64);
    if !(path.jump_floor > 0.0 && path.jump_floor <= lowest) {
        return Err(TsError::Input(format!(
            "jump floor {} must be positive and at most {lowest:e} for {n_bins} bands",
            path.jump_floor
        )));
    }
    let mut counts = vec![0u64; n_bins];
    for j in path.jumps.iter().filter(|j| j.size > 0.0) {
        let v = phi_inv(beta, j.size).floor();
        if v >= 1.0 && v <= n_bins as f64 {
            counts[v as usize - 1] += 1;
        }
    }
    Ok(counts)
}

/// Σ |ΔX|^p over the path grid.
pub fn empirical_p_variation(path: &Path, p: f64) -> f64 {
    path.values.windows(2).map(|w| (w[1] - w[0]).abs().powf(p)).sum()
}

/// Blumenthal–Getoor index max(β⁺, β⁻).
pub fn bg_index(p: &TemperedStableParams) -> f64 {
    p.plus().beta().max(p.minus().beta())
}
