//! Parameter types with validated constructors and flat JSON encodings.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TsError};

/// A one-sided tempered stable law TS(α, β, λ): α > 0, β ∈ [0, 1), λ > 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OneSidedJson", into = "OneSidedJson")]
pub struct OneSidedParams {
    alpha: f64,
    beta: f64,
    lambda: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OneSidedJson {
    alpha: f64,
    beta: f64,
    lambda: f64,
}

impl TryFrom<OneSidedJson> for OneSidedParams {
    type Error = TsError;
    fn try_from(j: OneSidedJson) -> Result<Self> {
        OneSidedParams::new(j.alpha, j.beta, j.lambda)
    }
}

impl From<OneSidedParams> for OneSidedJson {
    fn from(p: OneSidedParams) -> Self {
        OneSidedJson { alpha: p.alpha, beta: p.beta, lambda: p.lambda }
    }
}

impl OneSidedParams {
    pub fn new(alpha: f64, beta: f64, lambda: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(TsError::ParamDomain(format!("alpha must be finite and > 0, got {alpha}")));
        }
        if !(beta.is_finite() && (0.0..1.0).contains(&beta)) {
            return Err(TsError::ParamDomain(format!("beta must lie in [0, 1), got {beta}")));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(TsError::ParamDomain(format!("lambda must be finite and > 0, got {lambda}")));
        }
        Ok(Self { alpha, beta, lambda })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(alpha, self.beta, self.lambda)
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.alpha, self.beta, lambda)
    }
}

/// A two-sided law TS(α⁺, β⁺, λ⁺; α⁻, β⁻, λ⁻), the difference of two
/// independent one-sided laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TwoSidedJson", into = "TwoSidedJson")]
pub struct TemperedStableParams {
    plus: OneSidedParams,
    minus: OneSidedParams,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TwoSidedJson {
    alpha_plus: f64,
    beta_plus: f64,
    lambda_plus: f64,
    alpha_minus: f64,
    beta_minus: f64,
    lambda_minus: f64,
}

impl TryFrom<TwoSidedJson> for TemperedStableParams {
    type Error = TsError;
    fn try_from(j: TwoSidedJson) -> Result<Self> {
        TemperedStableParams::new(
            j.alpha_plus,
            j.beta_plus,
            j.lambda_plus,
            j.alpha_minus,
            j.beta_minus,
            j.lambda_minus,
        )
    }
}

impl From<TemperedStableParams> for TwoSidedJson {
    fn from(p: TemperedStableParams) -> Self {
        TwoSidedJson {
            alpha_plus: p.plus.alpha,
            beta_plus: p.plus.beta,
            lambda_plus: p.plus.lambda,
            alpha_minus: p.minus.alpha,
            beta_minus: p.minus.beta,
            lambda_minus: p.minus.lambda,
        }
    }
}

impl TemperedStableParams {
    pub fn new(
        alpha_plus: f64,
        beta_plus: f64,
        lambda_plus: f64,
        alpha_minus: f64,
        beta_minus: f64,
        lambda_minus: f64,
    ) -> Result<Self> {
        let plus = OneSidedParams::new(alpha_plus, beta_plus, lambda_plus)?;
        let minus = OneSidedParams::new(alpha_minus, beta_minus, lambda_minus)?;
        Ok(Self { plus, minus })
    }

    pub fn from_legs(plus: OneSidedParams, minus: OneSidedParams) -> Self {
        Self { plus, minus }
    }

    pub fn symmetric(alpha: f64, beta: f64, lambda: f64) -> Result<Self> {
        Self::new(alpha, beta, lambda, alpha, beta, lambda)
    }

    pub fn plus(&self) -> &OneSidedParams {
        &self.plus
    }

    pub fn minus(&self) -> &OneSidedParams {
        &self.minus
    }

    /// Parameters in the order (α⁺, β⁺, λ⁺, α⁻, β⁻, λ⁻).
    pub fn to_array(&self) -> [f64; 6] {
        [
            self.plus.alpha,
            self.plus.beta,
            self.plus.lambda,
            self.minus.alpha,
            self.minus.beta,
            self.minus.lambda,
        ]
    }

    pub fn from_array(v: [f64; 6]) -> Result<Self> {
        Self::new(v[0], v[1], v[2], v[3], v[4], v[5])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain numeric struct")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| classify_json_error(e))
    }
}

impl OneSidedParams {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain numeric struct")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| classify_json_error(e))
    }
}

fn classify_json_error(e: serde_json::Error) -> TsError {
    // Validation failures surface through serde as custom data errors.
    let msg = e.to_string();
    if let Some(rest) = msg.strip_prefix("parameter out of domain: ") {
        TsError::ParamDomain(rest.to_string())
    } else {
        TsError::Input(msg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_domain() {
        assert!(OneSidedParams::new(0.0, 0.5, 1.0).is_err());
        assert!(OneSidedParams::new(1.0, 1.0, 1.0).is_err());
        assert!(OneSidedParams::new(1.0, -0.1, 1.0).is_err());
        assert!(OneSidedParams::new(1.0, 0.5, f64::NAN).is_err());
        assert!(OneSidedParams::new(1.0, 0.0, 1.0).is_ok());
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let p = TemperedStableParams::new(0.1 + 0.2, 0.3, 1.0 / 3.0, 2.5, 0.0, 7.125).unwrap();
        let q = TemperedStableParams::from_json(&p.to_json()).unwrap();
        assert_eq!(p.to_array().map(f64::to_bits), q.to_array().map(f64::to_bits));
    }

    #[test]
    fn json_domain_error_is_classified() {
        let s = r#"{"alpha_plus":1,"beta_plus":1.5,"lambda_plus":1,"alpha_minus":1,"beta_minus":0.5,"lambda_minus":1}"#;
        assert_eq!(TemperedStableParams::from_json(s).unwrap_err().code(), "PARAM_DOMAIN");
        let s = r#"{"alpha_plus":1}"#;
        assert_eq!(TemperedStableParams::from_json(s).unwrap_err().code(), "INVALID_INPUT");
    }
}
