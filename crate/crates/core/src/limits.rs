//! Moment-matched α pairs, Berry–Esseen bounds for the normal
//! approximation, and the CLT-scaled parameter sequence.

use serde::Serialize;

use crate::error::{Result, TsError};
use crate::law::{marginal, scale};
use crate::params::TemperedStableParams;
use crate::special::gamma;

/// Constant of the classical Berry–Esseen inequality used by default.
pub const BERRY_ESSEEN_C: f64 = 0.4784;

fn check_shape(bp: f64, lp: f64, bm: f64, lm: f64) -> Result<()> {
    for (name, b) in [("beta_plus", bp), ("beta_minus", bm)] {
        if !(0.0..1.0).contains(&b) {
            return Err(TsError::ParamDomain(format!("{name} must lie in [0, 1), got {b}")));
        }
    }
    for (name, l) in [("lambda_plus", lp), ("lambda_minus", lm)] {
        if !(l.is_finite() && l > 0.0) {
            return Err(TsError::ParamDomain(format!("{name} must be > 0, got {l}")));
        }
    }
    Ok(())
}

/// (α⁺, α⁻) such that TS(α⁺, β⁺, λ⁺; α⁻, β⁻, λ⁻) has mean μ and variance σ².
pub fn alpha_pair_for_moments(mu: f64, sigma2: f64, bp: f64, lp: f64, bm: f64, lm: f64) -> Result<(f64, f64)> {
    check_shape(bp, lp, bm, lm)?;
    if !(mu.is_finite() && sigma2.is_finite() && sigma2 > 0.0) {
        return Err(TsError::ParamDomain(format!("need finite mean and positive variance, got ({mu}, {sigma2})")));
    }
    let d = (1.0 - bm) * lp + (1.0 - bp) * lm;
    let np = (1.0 - bm) * mu + lm * sigma2;
    let nm = (bp - 1.0) * mu + lp * sigma2;
    if np <= 0.0 || nm <= 0.0 {
        return Err(TsError::ParamDomain(format!(
            "mean {mu} and variance {sigma2} are not attainable with these beta/lambda (numerators {np:e}, {nm:e})"
        )));
    }
    let ap = lp.powf(2.0 - bp) * np / (gamma(1.0 - bp) * d);
    let am = lm.powf(2.0 - bm) * nm / (gamma(1.0 - bm) * d);
    Ok((ap, am))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BerryEsseenReport {
    pub bound: f64,
    pub mu: f64,
    pub sigma2: f64,
    pub c_const: f64,
    /// True when the bound is ≥ 1 and therefore says nothing.
    pub vacuous: bool,
}

fn bound_formula(mu: f64, sd: f64, bp: f64, lp: f64, bm: f64, lm: f64, c: f64) -> f64 {
    let d = (1.0 - bm) * lp + (1.0 - bp) * lm;
    let s3 = sd.powi(3);
    let plus = (1.0 - bp) * (2.0 - bp) * ((1.0 - bm) * mu / s3 + lm / sd) / (lp * d);
    let minus = (1.0 - bm) * (2.0 - bm) * ((bp - 1.0) * mu / s3 + lp / sd) / (lm * d);
    32.0 * c * (plus + minus)
}

fn check_c(c: f64) -> Result<()> {
    if !(c.is_finite() && c > 0.0) {
        return Err(TsError::ParamDomain(format!("Berry-Esseen constant must be > 0, got {c}")));
    }
    Ok(())
}

/// Bound on sup_x |P((X−μ)/σ ≤ x) − Φ(x)| for X ~ p.
pub fn berry_esseen_bound(p: &TemperedStableParams, c: f64) -> Result<BerryEsseenReport> {
    check_c(c)?;
    let (mu, sigma2) = (p.mean(), p.variance());
    let [_, bp, lp, _, bm, lm] = p.to_array();
    let bound = bound_formula(mu, sigma2.sqrt(), bp, lp, bm, lm, c);
    Ok(BerryEsseenReport { bound, mu, sigma2, c_const: c, vacuous: bound >= 1.0 })
}

/// The same bound obtained by first rescaling X to unit variance and
/// evaluating the unit-variance form on the rescaled law.
pub fn berry_esseen_bound_standardized(p: &TemperedStableParams, c: f64) -> Result<f64> {
    check_c(c)?;
    let sd = p.variance().sqrt();
    let q = scale(p, 1.0 / sd)?;
    let [_, bp, lp, _, bm, lm] = q.to_array();
    let mu = q.mean();
    let d = (1.0 - bm) * lp + (1.0 - bp) * lm;
    let plus = (1.0 - bp) * (2.0 - bp) * ((1.0 - bm) * mu + lm) / (lp * d);
    let minus = (1.0 - bm) * (2.0 - bm) * ((bp - 1.0) * mu + lp) / (lm * d);
    Ok(32.0 * c * (plus + minus))
}

/// Bound for X_t of the Lévy process with X₁ ~ p; equals the bound of p divided by √t.
pub fn berry_esseen_bound_process(p: &TemperedStableParams, t: f64, c: f64) -> Result<BerryEsseenReport> {
    berry_esseen_bound(&marginal(p, t)?, c)
}

/// Smallest n ≥ 1 for which the CLT sequence element has positive α legs.
pub fn clt_start_index(mu: f64, sigma2: f64, bp: f64, lp: f64, bm: f64, lm: f64) -> Result<u64> {
    check_shape(bp, lp, bm, lm)?;
    if !(mu.is_finite() && sigma2.is_finite() && sigma2 > 0.0) {
        return Err(TsError::ParamDomain(format!("need finite mean and positive variance, got ({mu}, {sigma2})")));
    }
    let ok = |n: u64| {
        let r = (n as f64).sqrt();
        (1.0 - bm) * mu + lm * sigma2 * r > 0.0 && (bp - 1.0) * mu + lp * sigma2 * r > 0.0
    };
    let need = (-(1.0 - bm) * mu / (lm * sigma2)).max((1.0 - bp) * mu / (lp * sigma2)).max(0.0);
    let mut n = ((need * need).floor() as u64).max(1);
    while n > 1 && ok(n - 1) {
        n -= 1;
    }
    while !ok(n) {
        n += 1;
    }
    Ok(n)
}

/// n-th element of the sequence with fixed mean μ and variance σ² and
/// tempering λ±√n, which converges to N(μ, σ²).
pub fn clt_sequence(mu: f64, sigma2: f64, bp: f64, lp: f64, bm: f64, lm: f64, n: u64) -> Result<TemperedStableParams> {
    let n0 = clt_start_index(mu, sigma2, bp, lp, bm, lm)?;
    if n < n0 {
        return Err(TsError::ParamDomain(format!("sequence starts at n = {n0}, got {n}")));
    }
    let r = (n as f64).sqrt();
    let (ap, am) = alpha_pair_for_moments(mu, sigma2, bp, lp * r, bm, lm * r)?;
    TemperedStableParams::new(ap, bp, lp * r, am, bm, lm * r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_pair_reproduces_moments() {
        let (ap, am) = alpha_pair_for_moments(0.3, 1.7, 0.4, 2.0, 0.6, 1.5).unwrap();
        let p = TemperedStableParams::new(ap, 0.4, 2.0, am, 0.6, 1.5).unwrap();
        assert!((p.mean() - 0.3).abs() < 1e-13);
        assert!((p.variance() - 1.7).abs() < 1e-13);
    }

    #[test]
    fn unattainable_moments_rejected() {
        assert!(alpha_pair_for_moments(-10.0, 0.1, 0.5, 1.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn start_index_is_minimal() {
        let (mu, s2, bp, lp, bm, lm) = (-3.0, 0.5, 0.3, 1.0, 0.4, 0.8);
        let n0 = clt_start_index(mu, s2, bp, lp, bm, lm).unwrap();
        assert!(clt_sequence(mu, s2, bp, lp, bm, lm, n0).is_ok());
        if n0 > 1 {
            let r = ((n0 - 1) as f64).sqrt();
            assert!(alpha_pair_for_moments(mu, s2, bp, lp * r, bm, lm * r).is_err());
        }
    }

    #[test]
    fn vacuous_flag() {
        let p = TemperedStableParams::symmetric(1.0, 0.5, 5.0).unwrap();
        let r = berry_esseen_bound(&p, BERRY_ESSEEN_C).unwrap();
        assert!(r.vacuous && r.bound > 1.0);
    }
}
