//! Cumulant generating functions, characteristic functions, cumulants and
//! the closure operations (convolution, scaling, time marginals).

use num_complex::Complex64;

use crate::error::{Result, TsError};
use crate::params::{OneSidedParams, TemperedStableParams};
use crate::special::{expm1_c, gamma, gamma_neg, ln1p_c};

impl OneSidedParams {
    /// αΓ(−β)λ^β, the scale of the β > 0 exponent.
    fn stable_coef(&self) -> f64 {
        self.alpha() * gamma_neg(self.beta()) * self.lambda().powf(self.beta())
    }

    /// ln E[e^{uX}] continued to complex `u` off the cut [λ, ∞).
    pub fn log_mgf(&self, u: Complex64) -> Complex64 {
        let l = ln1p_c(-u / self.lambda());
        if self.beta() == 0.0 {
            -l * self.alpha()
        } else {
            expm1_c(l * self.beta()) * self.stable_coef()
        }
    }

    /// Real cumulant generating function, defined for z ≤ λ (z < λ when β = 0).
    pub fn cgf(&self, z: f64) -> Result<f64> {
        let lam = self.lambda();
        if z.is_nan() || z > lam || (self.beta() == 0.0 && z == lam) {
            return Err(TsError::Domain(format!("z = {z} outside the cgf domain (-inf, {lam}{}", if self.beta() == 0.0 { ")" } else { "]" })));
        }
        Ok(self.cgf_unchecked(z))
    }

    pub(crate) fn cgf_unchecked(&self, z: f64) -> f64 {
        let l = (-z / self.lambda()).ln_1p();
        if self.beta() == 0.0 {
            -self.alpha() * l
        } else {
            (self.beta() * l).exp_m1() * self.stable_coef()
        }
    }

    /// First derivative of the cgf at real z < λ.
    pub fn cgf_d1(&self, z: f64) -> f64 {
        let (a, b, l) = (self.alpha(), self.beta(), self.lambda());
        a * gamma(1.0 - b) * (l - z).powf(b - 1.0)
    }

    /// Second derivative of the cgf at real z < λ.
    pub fn cgf_d2(&self, z: f64) -> f64 {
        let (a, b, l) = (self.alpha(), self.beta(), self.lambda());
        a * gamma(2.0 - b) * (l - z).powf(b - 2.0)
    }

    /// n-th cumulant Γ(n−β) α / λ^{n−β}; κ₀ = 0.
    pub fn cumulant(&self, n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        let nb = n as f64 - self.beta();
        gamma(nb) * self.alpha() / self.lambda().powf(nb)
    }

    pub fn mean(&self) -> f64 {
        self.cumulant(1)
    }

    pub fn variance(&self) -> f64 {
        self.cumulant(2)
    }

    /// Law of the process at time t: α scaled by t.
    pub fn marginal(&self, t: f64) -> Result<Self> {
        if !(t.is_finite() && t > 0.0) {
            return Err(TsError::ParamDomain(format!("time must be finite and > 0, got {t}")));
        }
        Self::new(self.alpha() * t, self.beta(), self.lambda())
    }

    /// Law of ρX: TS(αρ^β, β, λ/ρ).
    pub fn scale(&self, rho: f64) -> Result<Self> {
        if !(rho.is_finite() && rho > 0.0) {
            return Err(TsError::ParamDomain(format!("scale factor must be finite and > 0, got {rho}")));
        }
        Self::new(self.alpha() * rho.powf(self.beta()), self.beta(), self.lambda() / rho)
    }
}

/// Which side of the real line a leg contributes to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Plus,
    Minus,
}

/// A finite convolution of signed one-sided legs. Covers one-sided laws,
/// two-sided laws, and products of two-sided laws with different
/// parameters (as produced by some measure changes).
#[derive(Debug, Clone, PartialEq)]
pub struct LevyLaw {
    legs: Vec<(Side, OneSidedParams)>,
}

impl LevyLaw {
    pub fn new(legs: Vec<(Side, OneSidedParams)>) -> Result<Self> {
        if legs.is_empty() {
            return Err(TsError::ParamDomain("a law needs at least one leg".into()));
        }
        Ok(Self { legs })
    }

    pub fn legs(&self) -> &[(Side, OneSidedParams)] {
        &self.legs
    }

    /// Convolution of two laws (concatenation of their legs).
    pub fn convolve(&self, other: &LevyLaw) -> LevyLaw {
        let mut legs = self.legs.clone();
        legs.extend_from_slice(&other.legs);
        LevyLaw { legs }
    }

    pub fn marginal(&self, t: f64) -> Result<Self> {
        let legs = self
            .legs
            .iter()
            .map(|(s, p)| Ok((*s, p.marginal(t)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { legs })
    }

    /// ln E[e^{uX}] for complex u.
    pub fn log_mgf(&self, u: Complex64) -> Complex64 {
        self.legs
            .iter()
            .map(|(s, p)| match s {
                Side::Plus => p.log_mgf(u),
                Side::Minus => p.log_mgf(-u),
            })
            .sum()
    }

    /// Real cgf; caller guarantees `z` lies inside [`Self::strip`].
    pub fn cgf_unchecked(&self, z: f64) -> f64 {
        self.legs
            .iter()
            .map(|(s, p)| match s {
                Side::Plus => p.cgf_unchecked(z),
                Side::Minus => p.cgf_unchecked(-z),
            })
            .sum()
    }

    pub fn cgf_d1(&self, z: f64) -> f64 {
        self.legs
            .iter()
            .map(|(s, p)| match s {
                Side::Plus => p.cgf_d1(z),
                Side::Minus => -p.cgf_d1(-z),
            })
            .sum()
    }

    pub fn cgf_d2(&self, z: f64) -> f64 {
        self.legs
            .iter()
            .map(|(s, p)| match s {
                Side::Plus => p.cgf_d2(z),
                Side::Minus => p.cgf_d2(-z),
            })
            .sum()
    }

    /// Open interval of real tilts with a finite mgf derivative.
    pub fn strip(&self) -> (f64, f64) {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for (s, p) in &self.legs {
            match s {
                Side::Plus => hi = hi.min(p.lambda()),
                Side::Minus => lo = lo.max(-p.lambda()),
            }
        }
        (lo, hi)
    }

    /// Largest β among legs on one side, if any leg is there.
    pub fn max_beta(&self, side: Side) -> Option<f64> {
        self.legs
            .iter()
            .filter(|(s, _)| *s == side)
            .map(|(_, p)| p.beta())
            .fold(None, |m, b| Some(m.map_or(b, |m: f64| m.max(b))))
    }

    pub fn cumulant(&self, n: usize) -> f64 {
        self.legs
            .iter()
            .map(|(s, p)| match s {
                Side::Plus => p.cumulant(n),
                Side::Minus => {
                    if n % 2 == 0 {
                        p.cumulant(n)
                    } else {
                        -p.cumulant(n)
                    }
                }
            })
            .sum()
    }

    pub fn mean(&self) -> f64 {
        self.cumulant(1)
    }

    pub fn variance(&self) -> f64 {
        self.cumulant(2)
    }
}

impl From<&TemperedStableParams> for LevyLaw {
    fn from(p: &TemperedStableParams) -> Self {
        LevyLaw { legs: vec![(Side::Plus, *p.plus()), (Side::Minus, *p.minus())] }
    }
}

impl From<&OneSidedParams> for LevyLaw {
    fn from(p: &OneSidedParams) -> Self {
        LevyLaw { legs: vec![(Side::Plus, *p)] }
    }
}

/// Summary moments of a law.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MomentStats {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    /// Non-excess kurtosis, 3 + κ₄/κ₂².
    pub kurtosis: f64,
}

/// Ψ(z) = Ψ⁺(z) + Ψ⁻(−z) on [−λ⁻, λ⁺] (open at an endpoint whose leg has β = 0).
pub fn cgf(p: &TemperedStableParams, z: f64) -> Result<f64> {
    Ok(p.plus().cgf(z)? + p.minus().cgf(-z)?)
}

pub fn cgf_one_sided(p: &OneSidedParams, z: f64) -> Result<f64> {
    p.cgf(z)
}

/// Characteristic function E[e^{izX}].
pub fn cf(p: &TemperedStableParams, z: f64) -> Complex64 {
    let u = Complex64::new(0.0, z);
    (p.plus().log_mgf(u) + p.minus().log_mgf(-u)).exp()
}

pub fn cf_one_sided(p: &OneSidedParams, z: f64) -> Complex64 {
    p.log_mgf(Complex64::new(0.0, z)).exp()
}

/// κₙ = Γ(n−β⁺)α⁺/λ⁺^{n−β⁺} + (−1)ⁿ Γ(n−β⁻)α⁻/λ⁻^{n−β⁻}.
pub fn cumulant(p: &TemperedStableParams, n: usize) -> f64 {
    let m = p.minus().cumulant(n);
    p.plus().cumulant(n) + if n % 2 == 0 { m } else { -m }
}

pub fn moment_stats(p: &TemperedStableParams) -> MomentStats {
    let k2 = cumulant(p, 2);
    MomentStats {
        mean: cumulant(p, 1),
        variance: k2,
        skewness: cumulant(p, 3) / k2.powf(1.5),
        kurtosis: 3.0 + cumulant(p, 4) / (k2 * k2),
    }
}

fn same(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// Sum of independent laws sharing β and λ on each leg.
pub fn convolve(p: &TemperedStableParams, q: &TemperedStableParams) -> Result<TemperedStableParams> {
    for (name, a, b) in [("plus", p.plus(), q.plus()), ("minus", p.minus(), q.minus())] {
        if !same(a.beta(), b.beta()) || !same(a.lambda(), b.lambda()) {
            return Err(TsError::Mismatch(format!(
                "{name} legs differ in beta or lambda ({}, {}) vs ({}, {})",
                a.beta(),
                a.lambda(),
                b.beta(),
                b.lambda()
            )));
        }
    }
    Ok(TemperedStableParams::from_legs(
        p.plus().with_alpha(p.plus().alpha() + q.plus().alpha())?,
        p.minus().with_alpha(p.minus().alpha() + q.minus().alpha())?,
    ))
}

/// Law of ρX for ρ > 0.
pub fn scale(p: &TemperedStableParams, rho: f64) -> Result<TemperedStableParams> {
    Ok(TemperedStableParams::from_legs(p.plus().scale(rho)?, p.minus().scale(rho)?))
}

/// Law of X_t for the Lévy process with X₁ ~ p.
pub fn marginal(p: &TemperedStableParams, t: f64) -> Result<TemperedStableParams> {
    Ok(TemperedStableParams::from_legs(p.plus().marginal(t)?, p.minus().marginal(t)?))
}

/// E[X³] of a one-sided law, in closed form.
pub fn third_moment_one_sided(p: &OneSidedParams) -> f64 {
    let (a, b, l) = (p.alpha(), p.beta(), p.lambda());
    let g = gamma(1.0 - b);
    let lb = l.powf(b);
    g * a / l.powf(3.0 - b) * (g * g * a * a * lb * lb + 3.0 * (1.0 - b) * g * a * lb + (1.0 - b) * (2.0 - b))
}

impl TemperedStableParams {
    pub fn cgf(&self, z: f64) -> Result<f64> {
        cgf(self, z)
    }

    pub fn cf(&self, z: f64) -> Complex64 {
        cf(self, z)
    }

    pub fn cumulant(&self, n: usize) -> f64 {
        cumulant(self, n)
    }

    pub fn mean(&self) -> f64 {
        cumulant(self, 1)
    }

    pub fn variance(&self) -> f64 {
        cumulant(self, 2)
    }

    pub fn law(&self) -> LevyLaw {
        LevyLaw::from(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> TemperedStableParams {
        TemperedStableParams::new(1.2, 0.4, 2.0, 0.7, 0.6, 3.0).unwrap()
    }

    #[test]
    fn gamma_leg_matches_closed_form() {
        let q = OneSidedParams::new(2.0, 0.0, 1.5).unwrap();
        let z = 0.7;
        let want = 2.0 * (1.5f64 / (1.5 - z)).ln();
        assert!((q.cgf(z).unwrap() - want).abs() < 1e-15);
        // cf of Gamma(2, 1.5) is (1.5/(1.5 − iz))^2
        let u = 3.3;
        let w = (Complex64::new(1.5, 0.0) / Complex64::new(1.5, -u)).powi(2);
        assert!((cf_one_sided(&q, u) - w).norm() < 1e-15);
    }

    #[test]
    fn stable_leg_matches_naive_power_form() {
        let q = OneSidedParams::new(1.3, 0.35, 2.2).unwrap();
        for &z in &[-4.0, -0.5, 0.3, 2.0, 2.2] {
            let naive = 1.3 * gamma_neg(0.35) * ((2.2f64 - z).powf(0.35) - 2.2f64.powf(0.35));
            assert!((q.cgf(z).unwrap() - naive).abs() < 1e-13 * (1.0 + naive.abs()), "z={z}");
        }
        let u = Complex64::new(0.4, -7.0);
        let naive = (Complex64::new(2.2, 0.0) - u).powf(0.35) - 2.2f64.powf(0.35);
        let naive = naive * (1.3 * gamma_neg(0.35));
        assert!((q.log_mgf(u) - naive).norm() < 1e-13);
    }

    #[test]
    fn cgf_domain() {
        let p = p();
        assert!(cgf(&p, 2.0).is_ok());
        assert!(cgf(&p, -3.0).is_ok());
        assert_eq!(cgf(&p, 2.0001).unwrap_err().code(), "DOMAIN_ERROR");
        let g = TemperedStableParams::new(1.0, 0.0, 2.0, 1.0, 0.5, 1.0).unwrap();
        assert!(cgf(&g, 2.0).is_err());
        assert!(cgf(&g, -1.0).is_ok());
    }

    #[test]
    fn cf_at_zero_and_conjugate_symmetry() {
        let p = p();
        assert_eq!(cf(&p, 0.0), Complex64::new(1.0, 0.0));
        let a = cf(&p, 3.7);
        let b = cf(&p, -3.7);
        assert!((a - b.conj()).norm() < 1e-15);
    }

    #[test]
    fn third_moment_from_cumulants() {
        let q = OneSidedParams::new(1.7, 0.3, 0.9).unwrap();
        let (k1, k2, k3) = (q.cumulant(1), q.cumulant(2), q.cumulant(3));
        let want = k1.powi(3) + 3.0 * k1 * k2 + k3;
        assert!((third_moment_one_sided(&q) - want).abs() < 1e-12 * want);
    }

    #[test]
    fn convolve_requires_matching_legs() {
        let a = p();
        let b = TemperedStableParams::new(0.3, 0.4, 2.0, 0.1, 0.6, 3.5).unwrap();
        assert_eq!(convolve(&a, &b).unwrap_err().code(), "PARAM_MISMATCH");
    }

    #[test]
    fn moment_stats_gamma_case() {
        // Gamma(α, λ): skew 2/√α, kurtosis 3 + 6/α (minus leg negligible)
        let g = TemperedStableParams::new(4.0, 0.0, 2.0, 1e-14, 0.0, 50.0).unwrap();
        let m = moment_stats(&g);
        assert!((m.mean - 2.0).abs() < 1e-12);
        assert!((m.variance - 1.0).abs() < 1e-12);
        assert!((m.skewness - 1.0).abs() < 1e-10);
        assert!((m.kurtosis - 4.5).abs() < 1e-10);
    }
}
