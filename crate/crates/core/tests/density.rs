mod common;

use ts_core::density::*;
use ts_core::simulate::sample_many;
use ts_core::{OneSidedParams, TemperedStableParams};

#[test]
fn symmetric_density_is_even() {
    let p = TemperedStableParams::symmetric(0.8, 0.6, 1.5).unwrap();
    for x in [0.1, 0.7, 2.0, 5.0] {
        let (a, b) = (pdf(&p, x).unwrap(), pdf(&p, -x).unwrap());
        assert!((a - b).abs() < 1e-8 * a, "{x}: {a} vs {b}");
    }
    assert!((cdf(&p, 0.0).unwrap() - 0.5).abs() < 1e-6);
}

#[test]
fn nearly_one_sided_gamma_leg() {
    let p = TemperedStableParams::new(2.0, 0.0, 1.0, 1e-12, 0.5, 1.0).unwrap();
    for x in [0.2, 1.0, 2.5, 6.0] {
        let want = x * (-x as f64).exp();
        let got = pdf(&p, x).unwrap();
        assert!((got - want).abs() < 1e-5, "{x}: {got} vs {want}");
    }
}

#[test]
fn density_integrates_to_one_and_cdf_limits() {
    for p in [
        TemperedStableParams::new(1.0, 0.3, 3.0, 2.0, 0.6, 4.0).unwrap(),
        TemperedStableParams::new(0.5, 0.0, 1.0, 0.7, 0.0, 2.0).unwrap(),
        TemperedStableParams::new(0.3, 0.9, 0.5, 1.5, 0.1, 2.0).unwrap(),
    ] {
        let (m, s) = location_scale(&p);
        let mass = common::sinh_sinh(|x| pdf(&p, x).unwrap(), m, s);
        assert!((mass - 1.0).abs() < 1e-4, "{mass}");
        assert!(cdf(&p, m + 12.0 * s).unwrap() >= 0.9999);
        assert!(cdf(&p, m - 12.0 * s).unwrap() <= 1e-4);
    }
}

#[test]
fn grid_cdf_matches_cumulative_trapezoid() {
    let p = TemperedStableParams::new(1.0, 0.4, 2.0, 0.6, 0.5, 1.5).unwrap();
    let g = density_grid(&p, &GridOptions { nodes: 4097, ..Default::default() }).unwrap();
    assert!(g.meta.warning.is_none());
    let mut acc = g.cdf[0];
    let mut worst: f64 = 0.0;
    for k in 1..g.x.len() {
        acc += 0.5 * (g.pdf[k] + g.pdf[k - 1]) * (g.x[k] - g.x[k - 1]);
        worst = worst.max((acc - g.cdf[k]).abs());
        assert!(g.cdf[k] >= g.cdf[k - 1] - 1e-12);
        assert!(g.pdf[k] >= 0.0);
    }
    assert!(worst < 1e-5, "{worst}");
    let h = g.x[1] - g.x[0];
    let mass: f64 = g.pdf.iter().sum::<f64>() * h;
    assert!((0.999..=1.001).contains(&mass));
    let mean: f64 = g.x.iter().zip(&g.pdf).map(|(x, f)| x * f).sum::<f64>() * h;
    let var: f64 = g.x.iter().zip(&g.pdf).map(|(x, f)| (x - mean).powi(2) * f).sum::<f64>() * h;
    let scale = p.plus().cumulant(1) + p.minus().cumulant(1);
    assert!((mean - p.mean()).abs() < 1e-3 * scale);
    assert!((var - p.variance()).abs() < 1e-3 * p.variance());
}

#[test]
fn unimodal_on_fine_grid() {
    let p = TemperedStableParams::new(1.2, 0.7, 2.0, 0.4, 0.3, 1.0).unwrap();
    let g = density_grid(&p, &GridOptions { nodes: 801, extent_sd: 6.0, tilt: None }).unwrap();
    let mut changes = 0;
    let mut rising = true;
    for w in g.pdf.windows(2) {
        let d = w[1] - w[0];
        if rising && d < -1e-9 {
            rising = false;
            changes += 1;
        } else if !rising && d > 1e-9 {
            rising = true;
            changes += 1;
        }
    }
    assert_eq!(changes, 1);
}

#[test]
fn ecdf_of_simulated_sample() {
    let p = TemperedStableParams::new(1.0, 0.5, 1.0, 0.8, 0.3, 1.5).unwrap();
    let mut xs = sample_many(&p, 1.0, 1_000_000, 11).unwrap();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len();
    // exact cdf at 2001 sample quantiles; between nodes the ECDF and cdf
    // are both monotone, which bounds the sup-distance from above
    let idx: Vec<usize> = (0..=2000).map(|k| (k * (n - 1)) / 2000).collect();
    let f: Vec<f64> = idx.iter().map(|&i| cdf(&p, xs[i]).unwrap()).collect();
    let mut d: f64 = 0.0;
    for k in 0..idx.len() {
        let fn_at = (idx[k] + 1) as f64 / n as f64;
        d = d.max((fn_at - f[k]).abs());
        if k + 1 < idx.len() {
            let fn_before_next = idx[k + 1] as f64 / n as f64;
            d = d.max(fn_before_next - f[k]).max(f[k + 1] - fn_at);
        }
    }
    assert!(d <= 2e-3, "{d}");
}

#[test]
fn xi0_and_one_sided_bracket() {
    let p = OneSidedParams::new(1.0, 0.5, 1.0).unwrap();
    let xi = mode_lower_root(&p).unwrap();
    assert!((xi - 0.4263027510061).abs() < 1e-10);
    assert!(((-2.0 * xi).exp() - xi).abs() < 1e-12);
    let (lo, hi) = mode_bracket_one_sided(&p).unwrap();
    assert!(lo > 0.0 && lo < hi && hi <= p.mean());
    let m = mode_one_sided(&p).unwrap();
    assert!(lo < m && m < hi);
    let g = OneSidedParams::new(2.0, 0.0, 1.0).unwrap();
    assert_eq!(mode_bracket_one_sided(&g).unwrap_err().code(), "PARAM_DOMAIN");
}

#[test]
fn modes() {
    let s = TemperedStableParams::symmetric(1.0, 0.5, 2.0).unwrap();
    assert!(mode(&s).unwrap().abs() < 1e-6);
    let g = TemperedStableParams::new(3.0, 0.0, 2.0, 1e-9, 0.5, 1.0).unwrap();
    assert!((mode(&g).unwrap() - 1.0).abs() < 1e-4);
    let p = TemperedStableParams::new(1.0, 0.3, 3.0, 2.0, 0.6, 4.0).unwrap();
    let m = mode(&p).unwrap();
    let (lo, hi) = mode_bracket(&p).unwrap();
    assert!(lo < m && m < hi);
    let sd = p.variance().sqrt();
    let f0 = pdf(&p, m).unwrap();
    for d in [1e-3 * sd, 1e-2 * sd] {
        assert!(f0 >= pdf(&p, m + d).unwrap() && f0 >= pdf(&p, m - d).unwrap());
    }
}

#[test]
fn small_x_asymptote() {
    let p = OneSidedParams::new(1.0, 0.5, 1.0).unwrap();
    for x in [0.5, 0.01] {
        let a = small_x_log_asymptote(&p, x).unwrap();
        assert!((a + std::f64::consts::PI / x).abs() < 1e-12 * a.abs());
    }
    assert!(small_x_log_asymptote(&p, 1e-8).unwrap() < -1e8);
    let sd = p.variance().sqrt();
    let mut prev = f64::INFINITY;
    for f in [0.1, 0.05, 0.02] {
        let x = f * sd;
        let ratio = log_pdf_one_sided(&p, x).unwrap() / small_x_log_asymptote(&p, x).unwrap();
        assert!((ratio - 1.0).abs() < prev, "ratio {ratio} at {x}");
        prev = (ratio - 1.0).abs();
    }
    let g = OneSidedParams::new(1.0, 0.0, 1.0).unwrap();
    assert!(small_x_log_asymptote(&g, 0.1).is_err());
}

#[test]
fn tail_constants() {
    // the relative correction to the asymptote shrinks like x^{−β}, so the
    // 10% band at 6 to 10 sd needs a small α; larger α only shows the trend
    let p = TemperedStableParams::symmetric(0.05, 0.5, 1.0).unwrap();
    let ratio = |p: &TemperedStableParams, k: f64| {
        let (m, s) = location_scale(p);
        let x: f64 = m + k * s;
        pdf(p, x).unwrap() * x.powf(1.0 + p.plus().beta()) * (p.plus().lambda() * x).exp() / tail_constant(p).unwrap()
    };
    assert!(tail_constant(&p).unwrap() > 0.0);
    for k in [6.0, 8.0, 10.0] {
        let r = ratio(&p, k);
        assert!((r - 1.0).abs() < 0.1, "k={k}: {r}");
    }
    for q in [
        TemperedStableParams::symmetric(1.0, 0.5, 1.0).unwrap(),
        TemperedStableParams::new(0.3, 0.8, 2.0, 0.3, 0.5, 1.0).unwrap(),
    ] {
        let gaps: Vec<f64> = [6.0, 10.0, 20.0, 40.0, 80.0].iter().map(|&k| (ratio(&q, k) - 1.0).abs()).collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
        assert!(gaps[4] < 0.1);
    }
    let one = OneSidedParams::new(1.0, 0.5, 1.0).unwrap();
    let near = TemperedStableParams::new(1.0, 0.5, 1.0, 1e-12, 0.5, 1.0).unwrap();
    let c1 = tail_constant_one_sided(&one).unwrap();
    assert!((tail_constant(&near).unwrap() - c1).abs() < 1e-10 * c1);
    let want = (-ts_core::special::gamma_neg(0.5)).exp();
    assert!((c1 - want).abs() < 1e-14 * want);
    let g = TemperedStableParams::new(1.0, 0.0, 1.0, 1.0, 0.5, 1.0).unwrap();
    assert!(tail_constant(&g).is_err());
}

#[test]
fn mode_inside_bracket_for_random_laws() {
    let mut r = common::rng(5);
    for _ in 0..50 {
        let p = common::random_params(&mut r, 0.05, 0.95);
        let (lo, hi) = mode_bracket(&p).unwrap();
        let m = mode(&p).unwrap();
        assert!(lo <= m && m <= hi, "{p:?}: {m} not in [{lo}, {hi}]");
    }
}
