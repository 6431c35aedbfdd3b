//! Density and distribution function by numerical inversion of the moment
//! generating function along a tilted, bent Bromwich contour.
//!
//! For a point x the contour starts at the real saddle point θ of
//! `Ψ(s) − s x` and leaves it along a ray bent towards the side where
//! `e^{−s x}` decays. Every singularity of `Ψ` lies on the real axis, so the
//! bend does not change the integral, and the integrand then decays
//! exponentially instead of like a power of the frequency.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_6, PI};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Result, TsError};
use crate::law::{cumulant, LevyLaw, Side};
use crate::params::{OneSidedParams, TemperedStableParams};
use crate::quad::integrate_half_line;
use crate::special::gamma;

/// Tuning knobs for a single inversion.
#[derive(Debug, Clone, Copy)]
pub struct InversionOptions {
    /// Fixed real tilt; `None` uses the saddle point of each x.
    pub tilt: Option<f64>,
    pub rel_tol: f64,
}

impl Default for InversionOptions {
    fn default() -> Self {
        Self { tilt: None, rel_tol: 1e-12 }
    }
}

fn has_side(law: &LevyLaw, side: Side) -> bool {
    law.legs().iter().any(|(s, _)| *s == side)
}

const PDF_UNDERFLOW_LOG: f64 = -800.0;

/// Root of Ψ'(θ) = x inside the strip.
pub fn saddle_point(law: &LevyLaw, x: f64) -> f64 {
    let (lo, hi) = law.strip();
    let probe = |k: i32, end: f64| -> f64 {
        if end.is_finite() {
            end * (1.0 - 2f64.powi(-k))
        } else {
            end.signum() * 2f64.powi(k)
        }
    };
    let mut a = if lo.is_finite() { lo * 0.5 } else { -1.0 };
    for k in 1..=60 {
        a = probe(k, if lo.is_finite() { lo } else { f64::NEG_INFINITY });
        if law.cgf_d1(a) < x {
            break;
        }
    }
    let mut b = if hi.is_finite() { hi * 0.5 } else { 1.0 };
    for k in 1..=60 {
        b = probe(k, if hi.is_finite() { hi } else { f64::INFINITY });
        if law.cgf_d1(b) > x {
            break;
        }
    }
    for _ in 0..300 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if law.cgf_d1(m) < x {
            a = m;
        } else {
            b = m;
        }
    }
    let theta = 0.5 * (a + b);
    // Keep a margin from the branch points; the tilt only affects
    // conditioning, and the loss near an edge is about |x| times the margin.
    let margin = |edge: f64| (1e-3 * edge.abs()).min(1.0 / x.abs().max(1e-300));
    let mut theta = theta;
    if hi.is_finite() {
        theta = theta.min(hi - margin(hi));
    }
    if lo.is_finite() {
        theta = theta.max(lo + margin(lo));
    }
    theta
}

/// Bend from vertical that keeps every leg on the bend side decaying.
pub(crate) fn bend(law: &LevyLaw, side: Side) -> f64 {
    match law.max_beta(side) {
        Some(b) if b > 0.5 => (0.5 * (PI / (2.0 * b) - FRAC_PI_2)).min(FRAC_PI_6),
        _ => FRAC_PI_6,
    }
}

fn contour_angle(law: &LevyLaw, x: f64) -> f64 {
    if x > 0.0 {
        FRAC_PI_2 - bend(law, Side::Plus)
    } else if x < 0.0 {
        FRAC_PI_2 + bend(law, Side::Minus)
    } else {
        FRAC_PI_2
    }
}

fn check_tilt(law: &LevyLaw, theta: f64) -> Result<()> {
    let (lo, hi) = law.strip();
    if !(theta > lo && theta < hi) {
        return Err(TsError::Domain(format!("tilt {theta} outside the open strip ({lo}, {hi})")));
    }
    Ok(())
}

/// Computes `(L0, I)` such that the target equals `e^{L0} Im(I) / π`,
/// where `I = ∫_0^∞ e^{Ψ(s)−sx−L0} w(s) s'(t) dt` along the bent ray.
fn contour_integral(
    law: &LevyLaw,
    x: f64,
    theta: f64,
    weight: impl Fn(Complex64) -> Complex64,
    rel_tol: f64,
) -> Result<(f64, Complex64)> {
    let phi = contour_angle(law, x);
    let dir = Complex64::from_polar(1.0, phi);
    let l0 = law.cgf_unchecked(theta) - theta * x;
    let d2 = law.cgf_d2(theta);
    let scale = if d2.is_finite() && d2 > 0.0 { d2.sqrt().recip() } else { 1.0 };
    let f = |t: f64| {
        let s = Complex64::new(theta, 0.0) + dir * t;
        (law.log_mgf(s) - s * x - l0).exp() * weight(s) * dir
    };
    let floor = scale * weight(Complex64::new(theta, 0.0)).norm();
    let i = integrate_half_line(f, scale, floor, rel_tol)?;
    Ok((l0, i))
}

/// Natural log of the density of `law` at x.
pub fn log_pdf_law(law: &LevyLaw, x: f64, opts: &InversionOptions) -> Result<f64> {
    if !x.is_finite() {
        return Ok(f64::NEG_INFINITY);
    }
    if (!has_side(law, Side::Minus) && x <= 0.0) || (!has_side(law, Side::Plus) && x >= 0.0) {
        return Ok(f64::NEG_INFINITY);
    }
    let theta = match opts.tilt {
        Some(t) => {
            check_tilt(law, t)?;
            t
        }
        None => saddle_point(law, x),
    };
    let (l0, i) = contour_integral(law, x, theta, |_| Complex64::new(1.0, 0.0), opts.rel_tol)?;
    let v = i.im / PI;
    Ok(if v > 0.0 { l0 + v.ln() } else { f64::NEG_INFINITY })
}

/// Density of `law` at x. Values that come out negative from round-off
/// are returned as they are; callers decide whether to clamp.
pub fn pdf_law_raw(law: &LevyLaw, x: f64, opts: &InversionOptions) -> Result<f64> {
    if !x.is_finite() {
        return Ok(0.0);
    }
    let plus = has_side(law, Side::Plus);
    let minus = has_side(law, Side::Minus);
    if (!minus && x <= 0.0) || (!plus && x >= 0.0) {
        return Ok(0.0);
    }
    let theta = match opts.tilt {
        Some(t) => {
            check_tilt(law, t)?;
            t
        }
        None => saddle_point(law, x),
    };
    // e^{Ψ(θ)−θx} times the tilted density at x; past this the product
    // underflows and the contour integral is too ill-conditioned to bother
    if law.cgf_unchecked(theta) - theta * x < PDF_UNDERFLOW_LOG {
        return Ok(0.0);
    }
    let (l0, i) = contour_integral(law, x, theta, |_| Complex64::new(1.0, 0.0), opts.rel_tol)?;
    Ok(l0.exp() * i.im / PI)
}

pub fn pdf_law(law: &LevyLaw, x: f64, opts: &InversionOptions) -> Result<f64> {
    Ok(pdf_law_raw(law, x, opts)?.max(0.0))
}

/// Distribution function of `law` at x.
pub fn cdf_law(law: &LevyLaw, x: f64, opts: &InversionOptions) -> Result<f64> {
    if x.is_nan() {
        return Err(TsError::Input("cdf at NaN".into()));
    }
    let plus = has_side(law, Side::Plus);
    let minus = has_side(law, Side::Minus);
    if x == f64::NEG_INFINITY || (!minus && x <= 0.0) {
        return Ok(0.0);
    }
    if x == f64::INFINITY || (!plus && x >= 0.0) {
        return Ok(1.0);
    }
    let (lo, hi) = law.strip();
    let sd = law.variance().sqrt();
    let raw = match opts.tilt {
        Some(t) => {
            check_tilt(law, t)?;
            if t == 0.0 {
                return Err(TsError::Domain("cdf inversion needs a non-zero tilt".into()));
            }
            t
        }
        None => {
            let s = saddle_point(law, x);
            if s >= 0.0 {
                let floor = (0.5 / sd).min(0.5 * hi);
                s.max(floor)
            } else {
                let floor = (0.5 / sd).min(-0.5 * lo);
                s.min(-floor)
            }
        }
    };
    // Chernoff: the tail beyond x on the tilt side is at most e^{Ψ(θ)−θx}
    if law.cgf_unchecked(raw) - raw * x < -746.0 {
        return Ok(if raw > 0.0 { 1.0 } else { 0.0 });
    }
    let (l0, i) = contour_integral(law, x, raw, |s| s.inv(), opts.rel_tol)?;
    let v = l0.exp() * i.im / PI;
    let f = if raw > 0.0 { 1.0 - v } else { -v };
    Ok(f.clamp(0.0, 1.0))
}

pub fn pdf(p: &TemperedStableParams, x: f64) -> Result<f64> {
    pdf_law(&p.law(), x, &InversionOptions::default())
}

pub fn cdf(p: &TemperedStableParams, x: f64) -> Result<f64> {
    cdf_law(&p.law(), x, &InversionOptions::default())
}

pub fn log_pdf(p: &TemperedStableParams, x: f64) -> Result<f64> {
    log_pdf_law(&p.law(), x, &InversionOptions::default())
}

pub fn pdf_one_sided(p: &OneSidedParams, x: f64) -> Result<f64> {
    pdf_law(&LevyLaw::from(p), x, &InversionOptions::default())
}

pub fn cdf_one_sided(p: &OneSidedParams, x: f64) -> Result<f64> {
    cdf_law(&LevyLaw::from(p), x, &InversionOptions::default())
}

pub fn log_pdf_one_sided(p: &OneSidedParams, x: f64) -> Result<f64> {
    log_pdf_law(&LevyLaw::from(p), x, &InversionOptions::default())
}

/// Settings for [`density_grid`].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GridOptions {
    pub nodes: usize,
    /// Half-width of the grid in standard deviations around the mean.
    pub extent_sd: f64,
    pub tilt: Option<f64>,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self { nodes: 1025, extent_sd: 12.0, tilt: None }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GridMeta {
    pub settings: GridOptions,
    /// Grid points where the inverted density came out negative.
    pub clamped: usize,
    /// Trapezoid mass of the clamped negative parts.
    pub clamped_mass: f64,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DensityGrid {
    pub x: Vec<f64>,
    pub pdf: Vec<f64>,
    pub cdf: Vec<f64>,
    pub meta: GridMeta,
}

/// Density and cdf on a uniform grid of `nodes` points spanning
/// mean ± extent_sd · sd.
pub fn density_grid(p: &TemperedStableParams, opts: &GridOptions) -> Result<DensityGrid> {
    if opts.nodes < 2 {
        return Err(TsError::Input("grid needs at least two nodes".into()));
    }
    if !(opts.extent_sd.is_finite() && opts.extent_sd > 0.0) {
        return Err(TsError::Input(format!("extent must be positive, got {}", opts.extent_sd)));
    }
    let law = p.law();
    let (m, sd) = (p.mean(), p.variance().sqrt());
    let (a, b) = (m - opts.extent_sd * sd, m + opts.extent_sd * sd);
    let h = (b - a) / (opts.nodes - 1) as f64;
    let inv = InversionOptions { tilt: opts.tilt, ..Default::default() };
    let mut x = Vec::with_capacity(opts.nodes);
    let mut dens = Vec::with_capacity(opts.nodes);
    let mut dist = Vec::with_capacity(opts.nodes);
    let mut clamped = 0;
    let mut clamped_mass = 0.0;
    for k in 0..opts.nodes {
        let xk = a + h * k as f64;
        let raw = pdf_law_raw(&law, xk, &inv)?;
        if raw < 0.0 {
            clamped += 1;
            clamped_mass += -raw * h;
        }
        x.push(xk);
        dens.push(raw.max(0.0));
        dist.push(cdf_law(&law, xk, &inv)?);
    }
    let warning = (clamped_mass > 1e-3).then(|| {
        format!("{clamped} negative density values clamped, total mass {clamped_mass:e}")
    });
    Ok(DensityGrid {
        x,
        pdf: dens,
        cdf: dist,
        meta: GridMeta { settings: *opts, clamped, clamped_mass, warning },
    })
}

fn leg_mode_cap(p: &OneSidedParams) -> f64 {
    // (α/(1−β))^{1/β}, evaluated in logs; may be +inf.
    ((p.alpha() / (1.0 - p.beta())).ln() / p.beta()).exp()
}

fn require_stable_leg(p: &OneSidedParams, name: &str) -> Result<()> {
    if p.beta() <= 0.0 {
        return Err(TsError::ParamDomain(format!("{name} leg needs beta in (0, 1), got {}", p.beta())));
    }
    Ok(())
}

/// ξ₀ solving α^{1/β} e^{−(λ/β)ξ} = ξ.
pub fn mode_lower_root(p: &OneSidedParams) -> Result<f64> {
    require_stable_leg(p, "one-sided")?;
    let (a, b, l) = (p.alpha(), p.beta(), p.lambda());
    // g(y) = ln α/β − λ e^y/β − y, decreasing in y = ln ξ
    let g = |y: f64| a.ln() / b - l * y.exp() / b - y;
    let (mut lo, mut hi) = (-1.0, 1.0);
    while g(lo) < 0.0 {
        lo *= 2.0;
    }
    while g(hi) > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if g(m) > 0.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// Interval containing the mode of a one-sided law with β ∈ (0, 1).
pub fn mode_bracket_one_sided(p: &OneSidedParams) -> Result<(f64, f64)> {
    require_stable_leg(p, "one-sided")?;
    let xi0 = mode_lower_root(p)?;
    let lower = (p.mean() - (3.0 * p.variance()).sqrt()).max(xi0);
    let upper = p.mean().min(leg_mode_cap(p));
    Ok((lower, upper))
}

/// Interval containing the mode of a two-sided law with β± ∈ (0, 1).
pub fn mode_bracket(p: &TemperedStableParams) -> Result<(f64, f64)> {
    require_stable_leg(p.plus(), "plus")?;
    require_stable_leg(p.minus(), "minus")?;
    let up = p.plus().mean().min(leg_mode_cap(p.plus()));
    let dn = p.minus().mean().min(leg_mode_cap(p.minus()));
    Ok((-dn, up))
}

fn golden_max(mut f: impl FnMut(f64) -> Result<f64>, mut a: f64, mut b: f64) -> Result<f64> {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..200 {
        if (b - a).abs() <= 1e-13 * (a.abs() + b.abs()) + 1e-300 {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

/// Coarse grid argmax used when no closed-form bracket applies.
fn grid_bracket(law: &LevyLaw) -> Result<(f64, f64)> {
    let (m, sd) = (law.mean(), law.variance().sqrt());
    let n = 401;
    let (a, b) = (m - 6.0 * sd, m + 6.0 * sd);
    let h = (b - a) / (n - 1) as f64;
    let inv = InversionOptions::default();
    let mut best = (f64::NEG_INFINITY, 0);
    for k in 0..n {
        let v = log_pdf_law(law, a + h * k as f64, &inv)?;
        if v > best.0 {
            best = (v, k);
        }
    }
    let c = a + h * best.1 as f64;
    Ok((c - h, c + h))
}

/// Mode by golden-section search inside the mode bracket.
pub fn mode(p: &TemperedStableParams) -> Result<f64> {
    let law = p.law();
    let (a, b) = match mode_bracket(p) {
        Ok(ab) => ab,
        Err(_) => grid_bracket(&law)?,
    };
    let inv = InversionOptions::default();
    golden_max(|x| log_pdf_law(&law, x, &inv), a, b)
}

pub fn mode_one_sided(p: &OneSidedParams) -> Result<f64> {
    let law = LevyLaw::from(p);
    let (a, b) = match mode_bracket_one_sided(p) {
        Ok(ab) => ab,
        Err(_) => grid_bracket(&law)?,
    };
    let inv = InversionOptions::default();
    golden_max(|x| log_pdf_law(&law, x, &inv), a, b)
}

/// Leading term of ln g(x) as x → 0⁺ for a one-sided law with β ∈ (0, 1).
pub fn small_x_log_asymptote(p: &OneSidedParams, x: f64) -> Result<f64> {
    require_stable_leg(p, "one-sided")?;
    let (a, b) = (p.alpha(), p.beta());
    let k = (a * gamma(1.0 - b)).powf(1.0 / (1.0 - b));
    Ok(-((1.0 - b) / b) * k * x.powf(-b / (1.0 - b)))
}

/// C in g(x) ~ C e^{−λ⁺x} / x^{1+β⁺} as x → ∞, i.e. α⁺ e^{Ψ(λ⁺)}.
pub fn tail_constant(p: &TemperedStableParams) -> Result<f64> {
    require_stable_leg(p.plus(), "plus")?;
    let lp = p.plus().lambda();
    let psi = p.plus().cgf(lp)? + p.minus().cgf(-lp)?;
    Ok(p.plus().alpha() * psi.exp())
}

pub fn tail_constant_one_sided(p: &OneSidedParams) -> Result<f64> {
    require_stable_leg(p, "one-sided")?;
    Ok(p.alpha() * p.cgf(p.lambda())?.exp())
}

/// Mean and standard deviation, used for default grids.
pub fn location_scale(p: &TemperedStableParams) -> (f64, f64) {
    (cumulant(p, 1), cumulant(p, 2).sqrt())
}
