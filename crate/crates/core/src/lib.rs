//! Tempered stable laws TS(α⁺, β⁺, λ⁺; α⁻, β⁻, λ⁻): the difference of two
//! independent one-sided laws whose Lévy densities are
//! `α x^{-1-β} e^{-λx}` on `(0, ∞)`.
//!
//! Modules:
//! - [`law`]: cgf, characteristic function, cumulants, closure operations
//! - [`density`]: density, cdf, mode and tail asymptotics by contour inversion
//! - [`simulate`]: exact one-sided sampling, paths, jump-count diagnostics
//! - [`estimate`]: sample cumulants and method-of-cumulants fits
//! - [`limits`]: moment-matched parameter pairs and Berry–Esseen bounds
//! - [`measure`]: Esscher-type measure changes and martingale measures
//! - [`pricing`]: Fourier and Monte Carlo European option prices

pub mod density;
pub mod error;
pub mod estimate;
pub mod law;
pub mod limits;
pub mod measure;
pub mod params;
pub mod pricing;
pub mod quad;
pub mod simulate;
pub mod special;

pub use error::{Result, TsError};
pub use law::{
    cf, cf_one_sided, cgf, cgf_one_sided, convolve, cumulant, marginal, moment_stats, scale,
    third_moment_one_sided, LevyLaw, MomentStats, Side,
};
pub use params::{OneSidedParams, TemperedStableParams};
