//! Measure changes between tempered stable laws: local equivalence, the
//! bilateral Esscher family, martingale conditions for e^{X_t−(r−q)t}, and
//! the minimal martingale measure.
//!
//! A bilateral pair (θ⁺, θ⁻) tilts the up-leg by e^{θ⁺X⁺} and the down-leg
//! by e^{θ⁻X⁻}, giving TS(α⁺, β⁺, λ⁺−θ⁺; α⁻, β⁻, λ⁻−θ⁻). The classical
//! Esscher transform e^{ΘX} is the pair (Θ, −Θ).

use serde::Serialize;

use crate::error::{Result, TsError};
use crate::law::{cgf, LevyLaw, Side};
use crate::params::{OneSidedParams, TemperedStableParams};
use crate::special::gamma_neg;

/// Residual |Ψ_new(1) − (r − q)| accepted from every martingale solve.
pub const MARTINGALE_TOL: f64 = 1e-10;

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// True iff the two processes are locally equivalent (equal α and β legs).
pub fn locally_equivalent(p: &TemperedStableParams, q: &TemperedStableParams) -> bool {
    close(p.plus().alpha(), q.plus().alpha())
        && close(p.plus().beta(), q.plus().beta())
        && close(p.minus().alpha(), q.minus().alpha())
        && close(p.minus().beta(), q.minus().beta())
}

/// Law under the bilateral Esscher pair (θ⁺, θ⁻).
pub fn bilateral_esscher(p: &TemperedStableParams, theta_plus: f64, theta_minus: f64) -> Result<TemperedStableParams> {
    let lp = p.plus().lambda() - theta_plus;
    let lm = p.minus().lambda() - theta_minus;
    if !(lp > 0.0 && lm > 0.0) {
        return Err(TsError::ParamDomain(format!(
            "tilt ({theta_plus}, {theta_minus}) must stay below (lambda+, lambda-) = ({}, {})",
            p.plus().lambda(),
            p.minus().lambda()
        )));
    }
    Ok(TemperedStableParams::from_legs(p.plus().with_lambda(lp)?, p.minus().with_lambda(lm)?))
}

/// ln of the density process at time t given the leg values X⁺_t, X⁻_t.
pub fn density_process_log(
    p: &TemperedStableParams,
    theta_plus: f64,
    theta_minus: f64,
    x_plus: f64,
    x_minus: f64,
    t: f64,
) -> Result<f64> {
    bilateral_esscher(p, theta_plus, theta_minus)?;
    let psi_p = p.plus().cgf(theta_plus)?;
    let psi_m = p.minus().cgf(theta_minus)?;
    Ok(theta_plus * x_plus - psi_p * t + theta_minus * x_minus - psi_m * t)
}

/// Ψ(1) of a leg with its rate replaced by `rate` ≥ 0, evaluated at ±1.
/// `rate = 0` is allowed where the value stays finite.
fn leg_cgf_at(p: &OneSidedParams, rate: f64, z: f64) -> f64 {
    let (a, b) = (p.alpha(), p.beta());
    if rate > 0.0 {
        let l = (-z / rate).ln_1p();
        return if b == 0.0 { -a * l } else { a * gamma_neg(b) * rate.powf(b) * (b * l).exp_m1() };
    }
    // rate = 0 and z < 0: αΓ(−β)(−z)^β, or −∞ for a gamma leg
    if b == 0.0 {
        f64::NEG_INFINITY
    } else {
        a * gamma_neg(b) * (-z).powf(b)
    }
}

/// |Ψ(1) − (r − q)| for the given law.
pub fn martingale_residual(p: &TemperedStableParams, r: f64, q: f64) -> Result<f64> {
    Ok((cgf(p, 1.0)? - (r - q)).abs())
}

fn check_rates(r: f64, q: f64) -> Result<()> {
    if !(r.is_finite() && q.is_finite() && r >= q && q >= 0.0) {
        return Err(TsError::ParamDomain(format!("rates must satisfy r >= q >= 0, got r = {r}, q = {q}")));
    }
    Ok(())
}

/// f(Θ) = Ψ(1) of the Esscher-transformed law, Θ ∈ [−λ⁻, λ⁺ − 1].
pub fn esscher_drift(p: &TemperedStableParams, theta: f64) -> f64 {
    leg_cgf_at(p.plus(), p.plus().lambda() - theta, 1.0) + leg_cgf_at(p.minus(), p.minus().lambda() + theta, -1.0)
}

/// Why no Esscher martingale measure exists, or `None` when one does.
pub fn esscher_obstruction(p: &TemperedStableParams, r: f64, q: f64) -> Option<String> {
    let (lp, lm) = (p.plus().lambda(), p.minus().lambda());
    if lp + lm <= 1.0 {
        return Some(format!("lambda+ + lambda- = {} must exceed 1", lp + lm));
    }
    let (lo, hi) = (esscher_drift(p, -lm), esscher_drift(p, lp - 1.0));
    let rq = r - q;
    if !(lo < rq && rq <= hi) {
        return Some(format!("r - q = {rq} must lie in (f(-lambda-), f(lambda+ - 1)] = ({lo}, {hi}]"));
    }
    None
}

pub fn esscher_exists(p: &TemperedStableParams, r: f64, q: f64) -> bool {
    esscher_obstruction(p, r, q).is_none()
}

#[derive(Debug, Clone, Serialize)]
pub struct MartingaleSolve {
    pub exists: bool,
    pub theta: Option<f64>,
    pub residual: Option<f64>,
    pub new_params: Option<TemperedStableParams>,
    /// Which existence condition failed, when `exists` is false.
    pub diagnostic: Option<String>,
}

/// Bisection to machine resolution for an increasing function on [a, b].
fn increasing_root(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    for _ in 0..2200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if f(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    if (f(a)).abs() < (f(b)).abs() {
        a
    } else {
        b
    }
}

/// Esscher parameter Θ making e^{X_t − (r−q)t} a martingale, if one exists.
pub fn esscher_martingale(p: &TemperedStableParams, r: f64, q: f64) -> Result<MartingaleSolve> {
    check_rates(r, q)?;
    if let Some(why) = esscher_obstruction(p, r, q) {
        return Ok(MartingaleSolve { exists: false, theta: None, residual: None, new_params: None, diagnostic: Some(why) });
    }
    let (lp, lm) = (p.plus().lambda(), p.minus().lambda());
    let (lo, hi) = (-lm, lp - 1.0);
    if cfg!(debug_assertions) {
        let mut prev = esscher_drift(p, lo);
        for k in 1..=100 {
            let t = if k == 100 { hi } else { lo + (hi - lo) * k as f64 / 100.0 };
            let v = esscher_drift(p, t);
            if !(v > prev) {
                return Err(TsError::Inversion(format!("Esscher drift is not increasing near {t}")));
            }
            prev = v;
        }
    }
    let rq = r - q;
    // solve in ln y, y = λ⁻ + Θ the new down-rate: roots can sit within 1e-9 of
    // Θ = −λ⁻ where Θ itself has no digits left to resolve them
    let drift_y = |y: f64| leg_cgf_at(p.plus(), lp - (y - lm), 1.0) + leg_cgf_at(p.minus(), y, -1.0);
    let u = increasing_root(|u| drift_y(u.exp()) - rq, -690.0, (hi + lm).ln());
    let y = u.exp();
    let theta = y - lm;
    let (a, b) = (p.plus(), p.minus());
    let new_params = TemperedStableParams::new(a.alpha(), a.beta(), lp - theta, b.alpha(), b.beta(), y)?;
    let residual = martingale_residual(&new_params, r, q)?;
    Ok(MartingaleSolve { exists: true, theta: Some(theta), residual: Some(residual), new_params: Some(new_params), diagnostic: None })
}

/// f⁺(θ): Ψ⁺(1) of the up-leg with rate λ⁺ − θ, for θ ≤ λ⁺ − 1.
fn up_drift(p: &TemperedStableParams, theta: f64) -> f64 {
    leg_cgf_at(p.plus(), p.plus().lambda() - theta, 1.0)
}

/// Whether the bilateral martingale set is non-empty.
pub fn curve_exists(p: &TemperedStableParams, r: f64, q: f64) -> bool {
    let sup = up_drift(p, p.plus().lambda() - 1.0);
    sup > r - q
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CurveDomain {
    /// May be −∞.
    pub theta1: f64,
    pub theta2: f64,
}

/// Rates searched, in logs. Tempered rates can sit far out: with β near 1
/// the up-drift decays only like (λ⁺ − θ)^{β⁺−1}.
const RATE_MIN: f64 = 1e-300;
const RATE_MAX: f64 = 1e300;

/// Interval (θ₁, θ₂) on which Φ is defined.
pub fn martingale_curve_domain(p: &TemperedStableParams, r: f64, q: f64) -> Result<Option<CurveDomain>> {
    check_rates(r, q)?;
    if !curve_exists(p, r, q) {
        return Ok(None);
    }
    let rq = r - q;
    let lp = p.plus().lambda();
    // the up-drift in terms of v = ln(λ⁺ − θ) ≥ 0 is decreasing in v
    let up = |v: f64| leg_cgf_at(p.plus(), v.exp(), 1.0);
    let vmax = RATE_MAX.ln();
    let theta_of = |v: f64| if v == 0.0 { lp - 1.0 } else { lp - v.exp() };
    let theta1 = if up(vmax) >= rq {
        f64::NEG_INFINITY
    } else {
        theta_of(increasing_root(|v| rq - up(v), 0.0, vmax))
    };
    let inf_m = leg_cgf_at(p.minus(), 0.0, -1.0);
    let upper_target = rq - inf_m;
    let theta2 = if up(0.0) <= upper_target {
        lp - 1.0
    } else {
        theta_of(increasing_root(|v| upper_target - up(v), 0.0, vmax))
    };
    Ok(Some(CurveDomain { theta1, theta2 }))
}

/// New down-rate y = λ⁻ − Φ(θ) on the curve.
fn curve_rate(p: &TemperedStableParams, theta: f64, r: f64, q: f64) -> Result<f64> {
    check_rates(r, q)?;
    if !curve_exists(p, r, q) {
        return Err(TsError::Domain("no bilateral Esscher martingale measure exists".into()));
    }
    let lp = p.plus().lambda();
    if !(theta.is_finite() && theta <= lp - 1.0) {
        return Err(TsError::Domain(format!("theta must be at most lambda+ - 1 = {}", lp - 1.0)));
    }
    let target = r - q - up_drift(p, theta);
    // m increases in y; search in logs. Φ → −∞ as θ ↓ θ₁
    let m_of_y = |y: f64| leg_cgf_at(p.minus(), y, -1.0);
    if !(m_of_y(RATE_MIN) < target && target < m_of_y(RATE_MAX)) {
        return Err(TsError::Domain(format!("theta = {theta} lies outside the domain of the martingale curve")));
    }
    Ok(increasing_root(|v| m_of_y(v.exp()) - target, RATE_MIN.ln(), RATE_MAX.ln()).exp())
}

/// θ⁻ = Φ(θ): the down-tilt making (θ, Φ(θ)) a martingale pair.
pub fn martingale_curve_phi(p: &TemperedStableParams, theta: f64, r: f64, q: f64) -> Result<f64> {
    Ok(p.minus().lambda() - curve_rate(p, theta, r, q)?)
}

/// The martingale pair (θ, Φ(θ)) as a solved measure. The new down-rate is
/// taken from the solve directly, not as λ⁻ − Φ(θ), which loses it when it
/// is tiny.
pub fn curve_point(p: &TemperedStableParams, theta: f64, r: f64, q: f64) -> Result<MartingaleSolve> {
    let y = curve_rate(p, theta, r, q)?;
    let (a, b) = (p.plus(), p.minus());
    let new_params = TemperedStableParams::new(a.alpha(), a.beta(), a.lambda() - theta, b.alpha(), b.beta(), y)?;
    let residual = martingale_residual(&new_params, r, q)?;
    Ok(MartingaleSolve { exists: true, theta: Some(theta), residual: Some(residual), new_params: Some(new_params), diagnostic: None })
}

/// `n` evenly spaced interior points of the curve domain. An unbounded
/// left end is replaced by θ₂ − 10(1 + |θ₂|).
pub fn curve_grid(d: &CurveDomain, n: usize) -> Vec<f64> {
    let hi = d.theta2;
    let lo = if d.theta1.is_finite() { d.theta1 } else { hi - 10.0 * (1.0 + hi.abs()) };
    (1..=n).map(|k| lo + (hi - lo) * k as f64 / (n + 1) as f64).collect()
}

/// Checks that Φ is strictly increasing on `grid`.
pub fn check_curve_monotone(p: &TemperedStableParams, r: f64, q: f64, grid: &[f64]) -> Result<()> {
    let mut prev: Option<(f64, f64)> = None;
    for &t in grid {
        let v = martingale_curve_phi(p, t, r, q)?;
        if let Some((pt, pv)) = prev {
            if t > pt && !(v > pv) {
                return Err(TsError::Inversion(format!("martingale curve not increasing between {pt} and {t}")));
            }
        }
        prev = Some((t, v));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimalMartingale {
    pub c: f64,
    pub exists: bool,
    /// `[(c + 1, p), (−c, p tilted by (1, −1))]`: the martingale law is the
    /// convolution of the two laws with α legs multiplied by the weights.
    /// Empty when the measure does not exist.
    pub factors: Vec<(f64, TemperedStableParams)>,
    pub residual: Option<f64>,
}

impl MinimalMartingale {
    /// The martingale law as a convolution of legs, when it exists.
    pub fn law(&self) -> Option<LevyLaw> {
        if !self.exists {
            return None;
        }
        let mut legs = Vec::new();
        for (w, f) in self.factors.iter().filter(|(w, _)| *w > 0.0) {
            legs.push((Side::Plus, f.plus().with_alpha(w * f.plus().alpha()).ok()?));
            legs.push((Side::Minus, f.minus().with_alpha(w * f.minus().alpha()).ok()?));
        }
        LevyLaw::new(legs).ok()
    }
}

/// Minimal martingale measure of the stock e^{X_t}.
pub fn minimal_martingale(p: &TemperedStableParams, r: f64, q: f64) -> Result<MinimalMartingale> {
    check_rates(r, q)?;
    let lp = p.plus().lambda();
    if lp < 2.0 || (p.plus().beta() == 0.0 && lp == 2.0) {
        return Err(TsError::ParamDomain(format!("minimal martingale measure needs lambda+ >= 2 (got {lp})")));
    }
    let psi1 = cgf(p, 1.0)?;
    let psi2 = cgf(p, 2.0)?;
    let rq = r - q;
    // a law that is already a martingale to the solver tolerance gives c = 0,
    // and r − q = Ψ(2) − Ψ(1) to the same tolerance gives c = −1
    let c = if (psi1 - rq).abs() <= MARTINGALE_TOL {
        0.0
    } else if (psi2 - psi1 - rq).abs() <= MARTINGALE_TOL {
        -1.0
    } else {
        (psi1 - rq) / (psi2 - 2.0 * psi1)
    };
    let exists = (-1.0..=0.0).contains(&c);
    if !exists {
        return Ok(MinimalMartingale { c, exists, factors: Vec::new(), residual: None });
    }
    let factors = vec![(c + 1.0, *p), (-c, bilateral_esscher(p, 1.0, -1.0)?)];
    let mm = MinimalMartingale { c, exists, factors, residual: None };
    let law = mm.law().ok_or_else(|| TsError::ParamDomain("degenerate factor".into()))?;
    let residual = (law.cgf_unchecked(1.0) - (r - q)).abs();
    Ok(MinimalMartingale { residual: Some(residual), ..mm })
}

/// Minimizes a caller-supplied objective over the martingale curve by
/// golden-section search on [lo, hi] ⊂ (θ₁, θ₂]. Returns (θ, Φ(θ), value).
pub fn minimize_over_curve(
    p: &TemperedStableParams,
    r: f64,
    q: f64,
    lo: f64,
    hi: f64,
    objective: impl Fn(f64, f64) -> f64,
) -> Result<(f64, f64, f64)> {
    if !(lo < hi) {
        return Err(TsError::Input(format!("empty search interval [{lo}, {hi}]")));
    }
    let eval = |t: f64| -> Result<f64> { Ok(objective(t, martingale_curve_phi(p, t, r, q)?)) };
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (eval(c)?, eval(d)?);
    for _ in 0..200 {
        if b - a <= 1e-12 * (1.0 + a.abs() + b.abs()) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = eval(d)?;
        }
    }
    let t = 0.5 * (a + b);
    let phi = martingale_curve_phi(p, t, r, q)?;
    Ok((t, phi, objective(t, phi)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> TemperedStableParams {
        TemperedStableParams::new(0.8, 0.4, 5.0, 1.1, 0.6, 4.0).unwrap()
    }

    #[test]
    fn esscher_solution_is_martingale() {
        let s = esscher_martingale(&p(), 0.03, 0.01).unwrap();
        assert!(s.exists);
        assert!(s.residual.unwrap() <= 1e-10, "{:?}", s.residual);
        assert!(locally_equivalent(&p(), &s.new_params.unwrap()));
    }

    #[test]
    fn esscher_needs_lambda_sum_above_one() {
        let q = TemperedStableParams::new(1.0, 0.5, 0.6, 1.0, 0.5, 0.3).unwrap();
        let s = esscher_martingale(&q, 0.02, 0.0).unwrap();
        assert!(!s.exists && s.diagnostic.unwrap().contains("exceed 1"));
    }

    #[test]
    fn curve_passes_through_esscher_point() {
        let s = esscher_martingale(&p(), 0.03, 0.01).unwrap();
        let th = s.theta.unwrap();
        let phi = martingale_curve_phi(&p(), th, 0.03, 0.01).unwrap();
        assert!((phi + th).abs() < 1e-9, "{phi} vs {}", -th);
    }

    #[test]
    fn minimal_martingale_residual() {
        let m = minimal_martingale(&p(), 0.03, 0.01).unwrap();
        if m.exists {
            assert!(m.residual.unwrap() <= 1e-10);
        }
    }

    #[test]
    fn rates_validated() {
        assert_eq!(esscher_martingale(&p(), 0.01, 0.03).unwrap_err().code(), "PARAM_DOMAIN");
    }

    #[test]
    fn density_process_vanishes_without_tilt() {
        assert_eq!(density_process_log(&p(), 0.0, 0.0, 1.3, 0.4, 2.0).unwrap(), 0.0);
    }
}
