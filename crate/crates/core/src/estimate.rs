//! Method-of-cumulants estimation: sample cumulants, the closed-form
//! one-sided fit, a damped Newton solver for the six two-sided moment
//! equations, and jump-count estimators.

use nalgebra::{SMatrix, SVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, TsError};
use crate::law::cumulant;
use crate::limits::alpha_pair_for_moments;
use crate::params::{OneSidedParams, TemperedStableParams};
use crate::special::{digamma, gamma};

pub const MIN_OBS: usize = 7;

/// κ₁..κ₆ from raw moments m₁..m₆.
pub fn cumulants_from_raw_moments(m: &[f64; 6]) -> [f64; 6] {
    let [m1, m2, m3, m4, m5, m6] = *m;
    let k1 = m1;
    let k2 = m2 - m1 * m1;
    let k3 = m3 - 3.0 * m1 * m2 + 2.0 * m1.powi(3);
    let k4 = m4 - 4.0 * m1 * m3 - 3.0 * m2 * m2 + 12.0 * m1 * m1 * m2 - 6.0 * m1.powi(4);
    let k5 = m5 - 5.0 * m1 * m4 - 10.0 * m2 * m3 + 20.0 * m1 * m1 * m3 + 30.0 * m1 * m2 * m2
        - 60.0 * m1.powi(3) * m2
        + 24.0 * m1.powi(5);
    let k6 = m6 - 6.0 * m1 * m5 - 15.0 * m2 * m4 + 30.0 * m1 * m1 * m4 - 10.0 * m3 * m3
        + 120.0 * m1 * m2 * m3
        - 120.0 * m1.powi(3) * m3
        + 30.0 * m2.powi(3)
        - 270.0 * m1 * m1 * m2 * m2
        + 360.0 * m1.powi(4) * m2
        - 120.0 * m1.powi(6);
    [k1, k2, k3, k4, k5, k6]
}

/// Plug-in sample cumulants κ̂₁..κ̂₆.
///
/// Raw moments are taken about the sample mean and the mean is added back
/// to κ̂₁; cumulants of order ≥ 2 are shift invariant, so this is the same
/// estimator evaluated with less cancellation.
pub fn sample_cumulants(data: &[f64]) -> Result<[f64; 6]> {
    if data.len() < MIN_OBS {
        return Err(TsError::TooFewObs { needed: MIN_OBS, got: data.len() });
    }
    if let Some(x) = data.iter().find(|x| !x.is_finite()) {
        return Err(TsError::Input(format!("non-finite observation {x}")));
    }
    let n = data.len() as f64;
    let mean = data.iter().sum::<f64>() / n;
    let mut m = [0.0; 6];
    for &x in data {
        let d = x - mean;
        let mut p = d;
        for mj in m.iter_mut() {
            *mj += p;
            p *= d;
        }
    }
    for mj in m.iter_mut() {
        *mj /= n;
    }
    let mut k = cumulants_from_raw_moments(&m);
    k[0] += mean;
    Ok(k)
}

/// Closed-form one-sided fit from κ₁, κ₂, κ₃.
pub fn fit_one_sided(k1: f64, k2: f64, k3: f64) -> Result<OneSidedParams> {
    if !(k1 > 0.0 && k2 > 0.0 && k3 > 0.0) {
        return Err(TsError::Infeasible(format!("need positive k1, k2, k3, got ({k1}, {k2}, {k3})")));
    }
    let d = k1 * k3 - k2 * k2;
    if d <= 0.0 {
        return Err(TsError::Infeasible(format!("k1*k3 must exceed k2^2 (difference {d:e})")));
    }
    let mut beta = 1.0 - k2 * k2 / d;
    // Gamma cumulants give β = 0 exactly, up to round-off in d
    if beta < 0.0 && beta > -64.0 * f64::EPSILON {
        beta = 0.0;
    }
    if !(0.0..1.0).contains(&beta) {
        return Err(TsError::Infeasible(format!("implied beta {beta} outside [0, 1)")));
    }
    let lambda = (1.0 - beta) * k1 / k2;
    let alpha = lambda.powf(1.0 - beta) * k1 / gamma(1.0 - beta);
    OneSidedParams::new(alpha, beta, lambda).map_err(|e| TsError::Infeasible(e.to_string()))
}

/// G_j(c, ϑ) = Γ(j−β⁺)α⁺λ⁻^{j−β⁻} + (−1)^jΓ(j−β⁻)α⁻λ⁺^{j−β⁺} − c_j λ⁺^{j−β⁺}λ⁻^{j−β⁻}.
pub fn moment_equations(c: &[f64; 6], p: &TemperedStableParams) -> [f64; 6] {
    let [ap, bp, lp, am, bm, lm] = p.to_array();
    let mut g = [0.0; 6];
    for j in 1..=6 {
        let jf = j as f64;
        let sgn = if j % 2 == 0 { 1.0 } else { -1.0 };
        let lpj = lp.powf(jf - bp);
        let lmj = lm.powf(jf - bm);
        g[j - 1] = gamma(jf - bp) * ap * lmj + sgn * gamma(jf - bm) * am * lpj - c[j - 1] * lpj * lmj;
    }
    g
}

/// ∂G_j/∂(α⁺, β⁺, λ⁺, α⁻, β⁻, λ⁻) at an arbitrary point.
pub fn moment_jacobian(c: &[f64; 6], p: &TemperedStableParams) -> [[f64; 6]; 6] {
    let [ap, bp, lp, am, bm, lm] = p.to_array();
    let mut jac = [[0.0; 6]; 6];
    for j in 1..=6 {
        let jf = j as f64;
        let sgn = if j % 2 == 0 { 1.0 } else { -1.0 };
        let (gp, gm) = (gamma(jf - bp), gamma(jf - bm));
        let lpj = lp.powf(jf - bp);
        let lmj = lm.powf(jf - bm);
        let cj = c[j - 1];
        // coefficients multiplying λ⁺^{j−β⁺} and λ⁻^{j−β⁻}
        let coef_p = sgn * gm * am - cj * lmj;
        let coef_m = gp * ap - cj * lpj;
        jac[j - 1] = [
            gp * lmj,
            -gp * digamma(jf - bp) * ap * lmj - lp.ln() * coef_p * lpj,
            coef_p * (jf - bp) * lpj / lp,
            sgn * gm * lpj,
            -sgn * gm * digamma(jf - bm) * am * lpj - lm.ln() * coef_m * lmj,
            coef_m * (jf - bm) * lmj / lm,
        ];
    }
    jac
}

/// The same Jacobian at c = κ(ϑ), in the simplified product form.
pub fn moment_jacobian_at_solution(p: &TemperedStableParams) -> [[f64; 6]; 6] {
    let [ap, bp, lp, am, bm, lm] = p.to_array();
    let mut jac = [[0.0; 6]; 6];
    for j in 1..=6 {
        let jf = j as f64;
        let sgn = if j % 2 == 0 { 1.0 } else { -1.0 };
        let lpj = lp.powf(jf - bp);
        let lmj = lm.powf(jf - bm);
        let (gp, gm) = (gamma(jf - bp), gamma(jf - bm));
        jac[j - 1] = [
            gp * lmj,
            gp * ap * lmj * (lp.ln() - digamma(jf - bp)),
            -ap * gamma(jf + 1.0 - bp) * lmj / lp,
            sgn * gm * lpj,
            sgn * gm * am * lpj * (lm.ln() - digamma(jf - bm)),
            -sgn * am * gamma(jf + 1.0 - bm) * lpj / lm,
        ];
    }
    jac
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub max_iter: usize,
    pub max_halvings: usize,
    /// Convergence threshold on the normalized residual.
    pub tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { max_iter: 200, max_halvings: 40, tol: 1e-10 }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FitResult {
    pub params: TemperedStableParams,
    pub iterations: usize,
    /// max_j |κ_j(ϑ̂) − κ̂_j| / (|κ_j⁺(ϑ̂)| + |κ_j⁻(ϑ̂)|)
    pub residual: f64,
    pub converged: bool,
}

impl FitResult {
    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(TsError::NonConvergence { iterations: self.iterations, residual: self.residual })
        }
    }
}

fn leg_sums(p: &TemperedStableParams) -> [f64; 6] {
    let mut s = [0.0; 6];
    for (j, sj) in s.iter_mut().enumerate() {
        *sj = p.plus().cumulant(j + 1) + p.minus().cumulant(j + 1);
    }
    s
}

fn normalized_residual(k: &[f64; 6], p: &TemperedStableParams) -> f64 {
    let s = leg_sums(p);
    (0..6).map(|j| ((cumulant(p, j + 1) - k[j]) / s[j]).abs()).fold(0.0, f64::max)
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn to_eta(p: &TemperedStableParams) -> [f64; 6] {
    let v = p.to_array();
    let logit = |b: f64| (b / (1.0 - b)).ln();
    [v[0].ln(), logit(v[1]), v[2].ln(), v[3].ln(), logit(v[4]), v[5].ln()]
}

fn from_eta(e: &[f64; 6]) -> Option<TemperedStableParams> {
    if e.iter().any(|x| !x.is_finite() || x.abs() > 700.0) {
        return None;
    }
    TemperedStableParams::new(e[0].exp(), logistic(e[1]), e[2].exp(), e[3].exp(), logistic(e[4]), e[5].exp()).ok()
}

/// ∂κ_j/∂ϑ, the Jacobian of the normalized equations G_j / (λ⁺^{j−β⁺}λ⁻^{j−β⁻}).
fn cumulant_jacobian(p: &TemperedStableParams) -> [[f64; 6]; 6] {
    let [ap, bp, lp, am, bm, lm] = p.to_array();
    let mut jac = [[0.0; 6]; 6];
    for j in 1..=6 {
        let jf = j as f64;
        let sgn = if j % 2 == 0 { 1.0 } else { -1.0 };
        let up = gamma(jf - bp) / lp.powf(jf - bp);
        let um = gamma(jf - bm) / lm.powf(jf - bm);
        jac[j - 1] = [
            up,
            ap * up * (lp.ln() - digamma(jf - bp)),
            -ap * up * (jf - bp) / lp,
            sgn * um,
            sgn * am * um * (lm.ln() - digamma(jf - bm)),
            -sgn * am * um * (jf - bm) / lm,
        ];
    }
    jac
}

/// Solves κ_j(ϑ) = c_j, j = 1..6, by damped Newton in (ln α, logit β, ln λ)
/// coordinates, starting from `start`.
pub fn fit_two_sided(c: &[f64; 6], start: &TemperedStableParams, opts: &FitOptions) -> Result<FitResult> {
    if c.iter().any(|x| !x.is_finite()) {
        return Err(TsError::Input("non-finite target cumulants".into()));
    }
    if c[1] <= 0.0 || c[3] <= 0.0 || c[5] <= 0.0 {
        return Err(TsError::Infeasible("even cumulants must be positive".into()));
    }
    if !(start.plus().beta() > 0.0 && start.minus().beta() > 0.0) {
        return Err(TsError::ParamDomain(
            "two-sided fits need both beta legs in (0, 1); use fit_one_sided for gamma legs".into(),
        ));
    }
    let w = leg_sums(start);
    let merit = |p: &TemperedStableParams| -> f64 {
        (0..6).map(|j| ((cumulant(p, j + 1) - c[j]) / w[j]).powi(2)).sum()
    };
    let mut eta = to_eta(start);
    let mut p = *start;
    let mut f = merit(&p);
    let mut polish = 0;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        let res = normalized_residual(c, &p);
        if res <= opts.tol {
            converged = true;
            polish += 1;
            if polish > 3 || res == 0.0 {
                break;
            }
        }
        iterations += 1;
        let jk = cumulant_jacobian(&p);
        let v = p.to_array();
        let dtheta = [v[0], v[1] * (1.0 - v[1]), v[2], v[3], v[4] * (1.0 - v[4]), v[5]];
        let jm = SMatrix::<f64, 6, 6>::from_fn(|i, k| jk[i][k] * dtheta[k] / w[i]);
        let r = SVector::<f64, 6>::from_fn(|i, _| (cumulant(&p, i + 1) - c[i]) / w[i]);
        let step = match jm.lu().solve(&(-r)) {
            Some(s) if s.iter().all(|x| x.is_finite()) => s,
            _ => jm.svd(true, true).solve(&(-r), 1e-14).map_err(|e| TsError::Input(e.to_string()))?,
        };
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=opts.max_halvings {
            let trial: [f64; 6] = std::array::from_fn(|i| eta[i] + t * step[i]);
            if let Some(q) = from_eta(&trial) {
                let fq = merit(&q);
                if fq.is_finite() && fq <= (1.0 - 1e-4 * t) * f {
                    eta = trial;
                    p = q;
                    f = fq;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            // Levenberg–Marquardt steps with growing damping when the Newton
            // direction gives no decrease (e.g. near a β → 1 boundary)
            let jtj = jm.transpose() * jm;
            let g = jm.transpose() * r;
            let mut mu = 1e-6 * jtj.diagonal().max();
            for _ in 0..40 {
                let a = jtj + SMatrix::<f64, 6, 6>::from_diagonal(&jtj.diagonal().map(|d| mu * (1.0 + d)));
                if let Some(s) = a.lu().solve(&(-g)) {
                    let trial: [f64; 6] = std::array::from_fn(|i| eta[i] + s[i]);
                    if let Some(q) = from_eta(&trial) {
                        let fq = merit(&q);
                        if fq.is_finite() && fq < f {
                            eta = trial;
                            p = q;
                            f = fq;
                            accepted = true;
                            break;
                        }
                    }
                }
                mu *= 10.0;
            }
        }
        if !accepted {
            break;
        }
    }
    let residual = normalized_residual(c, &p);
    Ok(FitResult { params: p, iterations, residual, converged: converged || residual <= opts.tol })
}

/// Moment-informed starting points for [`fit_two_sided_multistart`].
pub fn default_starts(c: &[f64; 6]) -> Vec<TemperedStableParams> {
    let mut out = Vec::new();
    let skew = c[2].signum();
    for &(bp, bm) in &[(0.3, 0.3), (0.7, 0.7), (0.3, 0.7), (0.7, 0.3)] {
        let b = 0.5 * (bp + bm);
        let lam = ((2.0 - b) * (3.0 - b) * c[1] / c[3]).sqrt();
        for &s in &[0.0, 0.4 * skew] {
            let (lp, lm) = (lam * (-s as f64).exp(), lam * (s as f64).exp());
            let start = alpha_pair_for_moments(c[0], c[1], bp, lp, bm, lm)
                .ok()
                .and_then(|(ap, am)| TemperedStableParams::new(ap, bp, lp, am, bm, lm).ok())
                .or_else(|| {
                    let ap = 0.5 * c[1] * lp.powf(2.0 - bp) / gamma(2.0 - bp);
                    let am = 0.5 * c[1] * lm.powf(2.0 - bm) / gamma(2.0 - bm);
                    TemperedStableParams::new(ap, bp, lp, am, bm, lm).ok()
                });
            if let Some(p) = start {
                out.push(p);
            }
        }
    }
    out
}

/// Runs [`fit_two_sided`] from each start in parallel and keeps the
/// converged fit with the smallest residual (ties go to the earlier start).
pub fn fit_two_sided_from(c: &[f64; 6], starts: &[TemperedStableParams], opts: &FitOptions) -> Result<FitResult> {
    if starts.is_empty() {
        return Err(TsError::Input("no starting points".into()));
    }
    let fits: Vec<Result<FitResult>> = starts.par_iter().map(|s| fit_two_sided(c, s, opts)).collect();
    let mut best: Option<FitResult> = None;
    let mut first_err = None;
    for r in fits {
        match r {
            Ok(f) => {
                let better = match &best {
                    None => true,
                    Some(b) => (f.converged && !b.converged) || (f.converged == b.converged && f.residual < b.residual),
                };
                if better {
                    best = Some(f);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    best.ok_or_else(|| first_err.expect("some start produced an outcome"))
}

pub fn fit_two_sided_multistart(c: &[f64; 6], opts: &FitOptions) -> Result<FitResult> {
    let starts = default_starts(c);
    fit_two_sided_from(c, &starts, opts)
}

/// α̂: mean band count per unit time.
pub fn alpha_from_jump_counts(counts: &[u64], horizon: f64) -> Result<f64> {
    if counts.is_empty() {
        return Err(TsError::Input("no band counts".into()));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(TsError::Input(format!("horizon must be > 0, got {horizon}")));
    }
    Ok(counts.iter().sum::<u64>() as f64 / (counts.len() as f64 * horizon))
}

/// λ from α, β and the mean: (αΓ(1−β)/μ)^{1/(1−β)}.
pub fn lambda_given_alpha_beta(alpha: f64, beta: f64, mean: f64) -> Result<f64> {
    if !(alpha > 0.0 && (0.0..1.0).contains(&beta)) {
        return Err(TsError::ParamDomain(format!("alpha {alpha} / beta {beta} out of domain")));
    }
    if !(mean.is_finite() && mean > 0.0) {
        return Err(TsError::Infeasible(format!("mean must be positive, got {mean}")));
    }
    Ok((alpha * gamma(1.0 - beta) / mean).powf(1.0 / (1.0 - beta)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_sided_round_trip() {
        let q = OneSidedParams::new(1.3, 0.45, 2.1).unwrap();
        let f = fit_one_sided(q.cumulant(1), q.cumulant(2), q.cumulant(3)).unwrap();
        assert!((f.alpha() / 1.3 - 1.0).abs() < 1e-12);
        assert!((f.beta() - 0.45).abs() < 1e-12);
        assert!((f.lambda() / 2.1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_sided_infeasible() {
        assert_eq!(fit_one_sided(1.0, 1.0, 0.5).unwrap_err().code(), "INFEASIBLE_CUMULANTS");
    }

    #[test]
    fn too_few_observations() {
        let e = sample_cumulants(&[1.0; 6]).unwrap_err();
        assert_eq!(e.code(), "TOO_FEW_OBS");
    }

    #[test]
    fn equations_vanish_at_population_cumulants() {
        let p = TemperedStableParams::new(1.1, 0.3, 1.7, 0.6, 0.65, 2.4).unwrap();
        let c: [f64; 6] = std::array::from_fn(|j| cumulant(&p, j + 1));
        let g = moment_equations(&c, &p);
        let scale = moment_equations(&[0.0; 6], &p);
        for j in 0..6 {
            assert!(g[j].abs() < 1e-13 * scale[j].abs().max(1.0), "j={j}: {}", g[j]);
        }
    }

    #[test]
    fn jump_count_helpers() {
        assert_eq!(alpha_from_jump_counts(&[3, 5], 2.0).unwrap(), 2.0);
        let l = lambda_given_alpha_beta(2.0, 0.5, 2.0 * gamma(0.5) / 3f64.sqrt()).unwrap();
        assert!((l - 3.0).abs() < 1e-12);
    }
}
