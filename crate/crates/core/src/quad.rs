//! Adaptive Gauss–Kronrod (7/15) quadrature for complex-valued integrands,
//! on finite intervals and on `[a, ∞)` by geometrically growing panels.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{Result, TsError};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One 15-point Kronrod panel: (estimate, error estimate), with the
/// usual QUADPACK rescaling of |K − G| and a round-off floor.
fn gk15<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut vals = [Complex64::new(0.0, 0.0); 15];
    vals[7] = f(c);
    for j in 0..7 {
        let dx = h * XGK[j];
        vals[j] = f(c - dx);
        vals[14 - j] = f(c + dx);
    }
    let w = |j: usize| WGK[if j <= 7 { j } else { 14 - j }];
    let mut k = Complex64::new(0.0, 0.0);
    let mut resabs = 0.0;
    for (j, v) in vals.iter().enumerate() {
        k += v * w(j);
        resabs += w(j) * v.norm();
    }
    let mut g = vals[7] * WG[3];
    for j in [1usize, 3, 5] {
        g += (vals[j] + vals[14 - j]) * WG[j / 2];
    }
    let mean = k * 0.5;
    let resasc: f64 = vals.iter().enumerate().map(|(j, v)| w(j) * (v - mean).norm()).sum::<f64>() * h.abs();
    let resabs = resabs * h.abs();
    let k = k * h;
    let g = g * h;
    let mut err = (k - g).norm();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (k, err)
}

struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: 0.0, rel_tol: 1e-12, max_panels: 2000 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: Complex64,
    pub err: f64,
    pub converged: bool,
}

/// Globally adaptive integration of `f` over `[a, b]`.
pub fn integrate_c<F: FnMut(f64) -> Complex64>(
    mut f: F,
    a: f64,
    b: f64,
    opts: QuadOptions,
) -> QuadResult {
    if a == b {
        return QuadResult { value: Complex64::new(0.0, 0.0), err: 0.0, converged: true };
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value: v, err: e });
    let mut total = v;
    let mut err = e;
    let mut n = 1;
    loop {
        let tol = opts.abs_tol.max(opts.rel_tol * total.norm());
        if err <= tol {
            return QuadResult { value: total, err, converged: true };
        }
        if n >= opts.max_panels {
            return QuadResult { value: total, err, converged: false };
        }
        let worst = heap.pop().expect("non-empty heap");
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            // interval exhausted at machine resolution
            heap.push(Panel { err: 0.0, ..worst });
            err = heap.iter().map(|p| p.err).sum();
            if err <= tol {
                continue;
            }
            return QuadResult { value: total, err, converged: false };
        }
        let (v1, e1) = gk15(&mut f, worst.a, m);
        let (v2, e2) = gk15(&mut f, m, worst.b);
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.err;
        heap.push(Panel { a: worst.a, b: m, value: v1, err: e1 });
        heap.push(Panel { a: m, b: worst.b, value: v2, err: e2 });
        n += 1;
        if n % 64 == 0 {
            // refresh accumulated sums to limit drift
            total = heap.iter().map(|p| p.value).sum();
            err = heap.iter().map(|p| p.err).sum();
        }
    }
}

/// Real-valued convenience wrapper around [`integrate_c`].
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, opts: QuadOptions) -> QuadResult {
    integrate_c(|x| Complex64::new(f(x), 0.0), a, b, opts)
}

/// Integrates `f` over `[0, ∞)` using panels `[0,s], [s,2s], [2s,4s], …`.
///
/// Stops once three consecutive panels each contribute less than the
/// relative tolerance of the running total. `floor` is an absolute size
/// below which contributions are treated as negligible.
pub fn integrate_half_line<F: FnMut(f64) -> Complex64>(
    mut f: F,
    scale: f64,
    floor: f64,
    rel_tol: f64,
) -> Result<Complex64> {
    let mut total = Complex64::new(0.0, 0.0);
    let mut quiet = 0;
    let mut lo = 0.0;
    let mut hi = scale;
    for _ in 0..160 {
        let opts = QuadOptions {
            abs_tol: 0.25 * rel_tol * total.norm().max(floor),
            rel_tol,
            max_panels: 4000,
        };
        let r = integrate_c(&mut f, lo, hi, opts);
        if !r.value.re.is_finite() || !r.value.im.is_finite() {
            return Err(TsError::Inversion(format!("non-finite integrand on [{lo:e}, {hi:e}]")));
        }
        if !r.converged && r.err > 1e-9 * total.norm().max(floor).max(r.value.norm()) {
            return Err(TsError::Inversion(format!(
                "panel [{lo:e}, {hi:e}] did not converge (err {:e})",
                r.err
            )));
        }
        total += r.value;
        if r.value.norm() <= rel_tol * total.norm().max(floor) {
            quiet += 1;
            if quiet >= 3 {
                return Ok(total);
            }
        } else {
            quiet = 0;
        }
        lo = hi;
        hi *= 2.0;
    }
    Err(TsError::Inversion("integrand does not decay along the contour".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x| 3.0 * x * x, 0.0, 2.0, QuadOptions::default());
        assert!((r.value.re - 8.0).abs() < 1e-13);
    }

    #[test]
    fn endpoint_singularity() {
        // ∫_0^1 x^{-1/2} dx = 2
        let r = integrate(|x| x.powf(-0.5), 0.0, 1.0, QuadOptions { max_panels: 5000, ..Default::default() });
        assert!((r.value.re - 2.0).abs() < 1e-9, "{}", r.value.re);
    }

    #[test]
    fn half_line_exponential() {
        let v = integrate_half_line(|x| Complex64::new((-x).exp(), 0.0), 1.0, 1e-300, 1e-13).unwrap();
        assert!((v.re - 1.0).abs() < 1e-13);
    }

    #[test]
    fn half_line_slow_tail() {
        // ∫_0^∞ 1/(1+x)^2 dx = 1
        let v = integrate_half_line(|x| Complex64::new((1.0 + x).powi(-2), 0.0), 1.0, 1e-300, 1e-12).unwrap();
        assert!((v.re - 1.0).abs() < 1e-10, "{}", v.re);
    }
}
