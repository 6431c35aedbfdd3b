//! European option prices when the log price is a tempered stable Lévy
//! process under the pricing measure: S_T = S₀ e^{X_T}.
//!
//! The call is priced by Fourier inversion of the payoff transform along
//! Im z = ν ∈ (1, λ⁺),
//!
//! C = −(e^{−rT} K / π) Re ∫₀^∞ F(z) dz,  F(z) = (K/S₀)^{iz} φ_T(−z) / (z(z − i)),
//!
//! with the ray from iν bent into the half plane where (K/S₀)^{iz} decays.
//! For K < S₀ the line is moved below both poles (see [`call_price_law`]).

use num_complex::Complex64;
use serde::Serialize;

use crate::density::bend;
use crate::error::{Result, TsError};
use crate::law::{LevyLaw, Side};
use crate::params::TemperedStableParams;
use crate::quad::integrate_half_line;
use crate::simulate::sample_many;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OptionKind {
    Call,
    Put,
}

/// Spot and continuously compounded rate and dividend yield, r ≥ q ≥ 0.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MarketConfig {
    pub s0: f64,
    pub r: f64,
    pub q: f64,
}

impl MarketConfig {
    pub fn new(s0: f64, r: f64, q: f64) -> Result<Self> {
        if !(s0.is_finite() && s0 > 0.0) {
            return Err(TsError::ParamDomain(format!("spot must be > 0, got {s0}")));
        }
        if !(r.is_finite() && q.is_finite() && r >= q && q >= 0.0) {
            return Err(TsError::ParamDomain(format!("rates must satisfy r >= q >= 0, got r = {r}, q = {q}")));
        }
        Ok(Self { s0, r, q })
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct OptionSpec {
    pub strike: f64,
    pub maturity: f64,
}

impl OptionSpec {
    pub fn new(strike: f64, maturity: f64) -> Result<Self> {
        if !(strike.is_finite() && strike > 0.0) {
            return Err(TsError::ParamDomain(format!("strike must be > 0, got {strike}")));
        }
        if !(maturity.is_finite() && maturity > 0.0) {
            return Err(TsError::ParamDomain(format!("maturity must be > 0, got {maturity}")));
        }
        Ok(Self { strike, maturity })
    }
}

/// Default contour height 1 + (λ⁺ − 1)/2.
pub fn default_nu(p: &TemperedStableParams) -> f64 {
    1.0 + 0.5 * (p.plus().lambda() - 1.0)
}

/// Call price for an arbitrary law of X_T with λ⁺ > 1, discounting at r.
/// No martingale check is made.
pub fn call_price_law(law_t: &LevyLaw, s0: f64, k: f64, r: f64, t: f64, nu: f64, rel_tol: f64) -> Result<f64> {
    let (lo, hi) = law_t.strip();
    if hi <= 1.0 {
        return Err(TsError::Domain(format!("E[S_T] is infinite (lambda+ = {hi} must exceed 1)")));
    }
    if !(nu > 1.0 && nu < hi) {
        return Err(TsError::Domain(format!("contour height {nu} must lie in (1, {hi})")));
    }
    let ell = (k / s0).ln();
    // In the money the integrand on Im z = ν is of size (K/S₀)^{1−ν} S₀ and
    // cancels down to the price. Move to ν' ∈ (−λ⁻, 0) instead and add the
    // residues at z = i and z = 0.
    let (nu, shift) = if ell < 0.0 {
        let nu_low = lo * (nu - 1.0) / (hi - 1.0);
        let mgf1 = law_t.log_mgf(Complex64::new(1.0, 0.0)).re;
        (nu_low, s0 * (mgf1 - r * t).exp() - k * (-r * t).exp())
    } else {
        (nu, 0.0)
    };
    let delta = if ell > 0.0 {
        bend(law_t, Side::Plus)
    } else if ell < 0.0 {
        -bend(law_t, Side::Minus)
    } else {
        0.0
    };
    let dir = Complex64::from_polar(1.0, delta);
    let i = Complex64::i();
    let f = |s: f64| {
        let z = Complex64::new(0.0, nu) + dir * s;
        let log_num = i * z * ell + law_t.log_mgf(-i * z);
        log_num.exp() / (z * (z - i)) * dir
    };
    let v = law_t.variance();
    let scale = if v.is_finite() && v > 0.0 { v.sqrt().recip() } else { 1.0 };
    let floor = f(0.0).norm() * scale;
    let j = integrate_half_line(f, scale, floor, rel_tol)?;
    Ok(shift - (-r * t).exp() * k / std::f64::consts::PI * j.re)
}

/// Ψ(1) − (r − q): zero exactly when e^{X_t − (r−q)t} is a martingale.
pub fn risk_neutral_gap(p: &TemperedStableParams, m: &MarketConfig) -> Result<f64> {
    Ok(p.cgf(1.0)? - (m.r - m.q))
}

/// Fourier price of a European option. `p_q` should be a martingale law
/// (see [`risk_neutral_gap`]); this is not enforced.
pub fn fourier_price(
    p_q: &TemperedStableParams,
    kind: OptionKind,
    m: &MarketConfig,
    o: &OptionSpec,
    nu: Option<f64>,
) -> Result<f64> {
    let law_t = LevyLaw::from(p_q).marginal(o.maturity)?;
    let nu = nu.unwrap_or_else(|| default_nu(p_q));
    let call = call_price_law(&law_t, m.s0, o.strike, m.r, o.maturity, nu, 1e-12)?;
    Ok(match kind {
        OptionKind::Call => call,
        OptionKind::Put => put_from_call(call, m, o),
    })
}

pub fn call_price_fourier(p_q: &TemperedStableParams, m: &MarketConfig, o: &OptionSpec, nu: Option<f64>) -> Result<f64> {
    fourier_price(p_q, OptionKind::Call, m, o, nu)
}

pub fn put_price(p_q: &TemperedStableParams, m: &MarketConfig, o: &OptionSpec, nu: Option<f64>) -> Result<f64> {
    fourier_price(p_q, OptionKind::Put, m, o, nu)
}

/// Put–call parity.
pub fn put_from_call(call: f64, m: &MarketConfig, o: &OptionSpec) -> f64 {
    call - m.s0 * (-m.q * o.maturity).exp() + o.strike * (-m.r * o.maturity).exp()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct McPrice {
    pub price: f64,
    pub std_error: f64,
    pub paths: usize,
}

/// Minimum path count accepted by the Monte Carlo pricer.
pub const MIN_MC_PATHS: usize = 1000;

/// Monte Carlo price from exact draws of X_T.
pub fn mc_price(
    p_q: &TemperedStableParams,
    kind: OptionKind,
    m: &MarketConfig,
    o: &OptionSpec,
    paths: usize,
    seed: u64,
) -> Result<McPrice> {
    if paths < MIN_MC_PATHS {
        return Err(TsError::Input(format!("need at least {MIN_MC_PATHS} paths, got {paths}")));
    }
    let xs = sample_many(p_q, o.maturity, paths, seed)?;
    let disc = (-m.r * o.maturity).exp();
    let pay: Vec<f64> = xs
        .iter()
        .map(|&x| {
            let st = m.s0 * x.exp();
            disc * match kind {
                OptionKind::Call => (st - o.strike).max(0.0),
                OptionKind::Put => (o.strike - st).max(0.0),
            }
        })
        .collect();
    let n = paths as f64;
    let mean = pay.iter().sum::<f64>() / n;
    let var = pay.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(McPrice { price: mean, std_error: (var / n).sqrt(), paths })
}

pub fn mc_call_price(p_q: &TemperedStableParams, m: &MarketConfig, o: &OptionSpec, paths: usize, seed: u64) -> Result<McPrice> {
    mc_price(p_q, OptionKind::Call, m, o, paths, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::esscher_martingale;

    fn rn() -> TemperedStableParams {
        let p = TemperedStableParams::new(0.6, 0.5, 6.0, 0.7, 0.5, 5.0).unwrap();
        esscher_martingale(&p, 0.03, 0.01).unwrap().new_params.unwrap()
    }

    #[test]
    fn arbitrage_bounds() {
        let p = rn();
        let m = MarketConfig::new(100.0, 0.03, 0.01).unwrap();
        for k in [70.0, 100.0, 140.0] {
            let o = OptionSpec::new(k, 0.5).unwrap();
            let c = call_price_fourier(&p, &m, &o, None).unwrap();
            let lower = (100.0 * (-0.005f64).exp() - k * (-0.015f64).exp()).max(0.0);
            assert!(c >= lower - 1e-9 && c <= 100.0, "k = {k}: {c}");
            assert!(put_price(&p, &m, &o, None).unwrap() >= -1e-9);
        }
    }

    #[test]
    fn contour_height_irrelevant() {
        let p = rn();
        let m = MarketConfig::new(100.0, 0.03, 0.01).unwrap();
        let o = OptionSpec::new(110.0, 0.5).unwrap();
        let a = call_price_fourier(&p, &m, &o, Some(1.5)).unwrap();
        let b = call_price_fourier(&p, &m, &o, Some(3.0)).unwrap();
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn contour_outside_strip_rejected() {
        let p = rn();
        let m = MarketConfig::new(100.0, 0.03, 0.01).unwrap();
        let o = OptionSpec::new(110.0, 0.5).unwrap();
        assert_eq!(call_price_fourier(&p, &m, &o, Some(0.9)).unwrap_err().code(), "DOMAIN_ERROR");
    }
}
