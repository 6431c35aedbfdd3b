//! `tstab`: command-line front end for ts-core.
//!
//! Exit codes: 0 success, 2 rejected input, 3 numerical failure. Errors go to
//! stderr as one line `error CODE: message`.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{json, Value};
use ts_core::density::{density_grid, mode, mode_bracket, tail_constant, GridOptions};
use ts_core::estimate::{fit_two_sided, fit_two_sided_multistart, sample_cumulants, FitOptions};
use ts_core::limits::{berry_esseen_bound, BERRY_ESSEEN_C};
use ts_core::measure::{
    curve_grid, curve_point, esscher_martingale, martingale_curve_domain, minimal_martingale, MARTINGALE_TOL,
};
use ts_core::pricing::{fourier_price, mc_price, risk_neutral_gap, MarketConfig, OptionKind, OptionSpec};
use ts_core::simulate::{bg_index, simulate_path, PathConfig};
use ts_core::{cumulant, moment_stats, TemperedStableParams, TsError};

#[derive(Parser)]
#[command(name = "tstab", version, about = "Tempered stable distributions: densities, simulation, fits, measure changes, pricing")]
struct Cli {
    /// Suppress progress messages on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Density and cdf on a uniform grid, as CSV `x,pdf,cdf`.
    Density(DensityArgs),
    /// Simulate paths into a directory of CSV files.
    Simulate(SimulateArgs),
    /// Method-of-cumulants fit to observations.
    Fit(FitArgs),
    /// Moments, normal-approximation bound, mode, tails, activity index.
    Diagnose(DiagnoseArgs),
    /// Martingale measure changes.
    #[command(subcommand)]
    Measure(MeasureCmd),
    /// European option price by Fourier inversion.
    Price(PriceArgs),
}

#[derive(Args)]
struct DensityArgs {
    #[arg(long)]
    params: PathBuf,
    #[arg(long, default_value_t = 1025)]
    nodes: usize,
    #[arg(long, default_value_t = 12.0)]
    extent_sd: f64,
    /// Fixed tilt θ ∈ (−λ⁻, λ⁺) instead of the per-point saddle point.
    #[arg(long, allow_hyphen_values = true)]
    tilt: Option<f64>,
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    params: PathBuf,
    #[arg(long)]
    horizon: f64,
    #[arg(long)]
    step: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Path k uses seed + k.
    #[arg(long, default_value_t = 1)]
    paths: usize,
    /// Record jumps with |size| ≥ this value (0: no record).
    #[arg(long, default_value_t = 0.0)]
    jump_floor: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    /// One-column CSV of observations (a header line is allowed).
    #[arg(long, conflicts_with = "path", required_unless_present = "path")]
    data: Option<PathBuf>,
    /// A `t,x` path CSV from `simulate`: fits the increments and reports
    /// per-unit-time parameters.
    #[arg(long)]
    path: Option<PathBuf>,
    /// Starting parameters; without it the moment-informed multistart is used.
    #[arg(long, conflicts_with = "multistart")]
    init: Option<PathBuf>,
    #[arg(long)]
    multistart: bool,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[arg(long)]
    params: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct Rates {
    #[arg(long)]
    params: PathBuf,
    #[arg(long)]
    r: f64,
    #[arg(long)]
    q: f64,
}

#[derive(Subcommand)]
enum MeasureCmd {
    /// Esscher martingale measure.
    Esscher(Rates),
    /// Points (θ, Φ(θ)) of the bilateral martingale curve.
    Curve {
        #[command(flatten)]
        rates: Rates,
        /// `A:B:N`, N evenly spaced θ values from A to B; default is 50
        /// interior points of the curve's domain.
        #[arg(long, allow_hyphen_values = true)]
        theta_grid: Option<String>,
    },
    /// Minimal martingale measure.
    Mmm(Rates),
}

#[derive(Args)]
struct PriceArgs {
    #[arg(long)]
    params: PathBuf,
    #[arg(long)]
    s0: f64,
    #[arg(long)]
    r: f64,
    #[arg(long)]
    q: f64,
    #[arg(long)]
    strike: f64,
    #[arg(long)]
    maturity: f64,
    #[arg(long)]
    put: bool,
    /// Contour height in (1, λ⁺); default 1 + (λ⁺ − 1)/2.
    #[arg(long)]
    nu: Option<f64>,
    /// Also price with this many Monte Carlo paths.
    #[arg(long)]
    mc_check: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("bad arguments").trim_start_matches("error: ");
            eprintln!("error INVALID_INPUT: {first}");
            return ExitCode::from(2);
        }
    };
    if let Some(n) = std::env::var("TS_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error {}: {}", e.code(), e.to_string().replace('\n', " "));
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}

fn run(cli: Cli) -> Result<(), TsError> {
    let quiet = cli.quiet;
    match cli.cmd {
        Cmd::Density(a) => density(a),
        Cmd::Simulate(a) => simulate(a, quiet),
        Cmd::Fit(a) => fit(a, quiet),
        Cmd::Diagnose(a) => diagnose(a),
        Cmd::Measure(m) => measure(m),
        Cmd::Price(a) => price(a),
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> TsError {
    TsError::Input(format!("{}: {e}", path.display()))
}

fn read_params(path: &Path) -> Result<TemperedStableParams, TsError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    TemperedStableParams::from_json(&text)
}

fn f(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes to stdout; a closed pipe (e.g. `| head`) ends output quietly.
fn emit(s: &str) -> Result<(), TsError> {
    let mut out = io::stdout().lock();
    match out.write_all(s.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(TsError::Input(format!("stdout: {e}"))),
        _ => Ok(()),
    }
}

fn print_json(v: &Value) -> Result<(), TsError> {
    let s = serde_json::to_string_pretty(v).map_err(|e| TsError::Input(e.to_string()))?;
    emit(&(s + "\n"))
}

fn density(a: DensityArgs) -> Result<(), TsError> {
    let p = read_params(&a.params)?;
    let g = density_grid(&p, &GridOptions { nodes: a.nodes, extent_sd: a.extent_sd, tilt: a.tilt })?;
    if let Some(w) = &g.meta.warning {
        eprintln!("warning: {w}");
    }
    let mut out: Box<dyn Write> = match &a.out {
        Some(path) => Box::new(io::BufWriter::new(fs::File::create(path).map_err(|e| io_err(path, e))?)),
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    };
    let mut w = csv::Writer::from_writer(&mut out);
    let werr = |e: csv::Error| TsError::Input(e.to_string());
    w.write_record(["x", "pdf", "cdf"]).map_err(werr)?;
    for k in 0..g.x.len() {
        if let Err(e) = w.write_record([f(g.x[k]), f(g.pdf[k]), f(g.cdf[k])]) {
            return match e.kind() {
                csv::ErrorKind::Io(io) if io.kind() == io::ErrorKind::BrokenPipe => Ok(()),
                _ => Err(werr(e)),
            };
        }
    }
    match w.flush() {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(TsError::Input(e.to_string())),
        _ => Ok(()),
    }
}

fn simulate(a: SimulateArgs, quiet: bool) -> Result<(), TsError> {
    let p = read_params(&a.params)?;
    if a.paths == 0 {
        return Err(TsError::Input("--paths must be at least 1".into()));
    }
    fs::create_dir_all(&a.out).map_err(|e| io_err(&a.out, e))?;
    let werr = |e: csv::Error| TsError::Input(e.to_string());
    let paths: Vec<_> = (0..a.paths)
        .into_par_iter()
        .map(|k| {
            let cfg = PathConfig { horizon: a.horizon, step: a.step, seed: a.seed.wrapping_add(k as u64), jump_floor: a.jump_floor };
            simulate_path(&p, &cfg)
        })
        .collect();
    for (k, path) in paths.into_iter().enumerate() {
        let path = path?;
        let suffix = if a.paths == 1 { String::new() } else { format!("_{k:04}") };
        let file = a.out.join(format!("path{suffix}.csv"));
        let mut w = csv::Writer::from_path(&file).map_err(werr)?;
        w.write_record(["t", "x"]).map_err(werr)?;
        for (t, x) in path.times.iter().zip(&path.values) {
            w.write_record([f(*t), f(*x)]).map_err(werr)?;
        }
        w.flush().map_err(|e| io_err(&file, e))?;
        if a.jump_floor > 0.0 {
            let file = a.out.join(format!("jumps{suffix}.csv"));
            let mut w = csv::Writer::from_path(&file).map_err(werr)?;
            w.write_record(["t", "size"]).map_err(werr)?;
            for j in &path.jumps {
                w.write_record([f(j.time), f(j.size)]).map_err(werr)?;
            }
            w.flush().map_err(|e| io_err(&file, e))?;
        }
        if !quiet {
            eprintln!("path {}/{} written", k + 1, a.paths);
        }
    }
    Ok(())
}

/// Numeric rows of column `col`; a non-numeric first row is taken as a header.
fn read_column(path: &Path, col: usize) -> Result<Vec<f64>, TsError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_path(path).map_err(|e| io_err(path, e))?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        let cell = rec.get(col).ok_or_else(|| io_err(path, format!("row {} has no column {}", i + 1, col + 1)))?.trim();
        match cell.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            Ok(_) => return Err(io_err(path, format!("row {}: non-finite value", i + 1))),
            Err(_) if i == 0 => continue,
            Err(_) => return Err(io_err(path, format!("row {}: cannot parse {cell:?}", i + 1))),
        }
    }
    Ok(out)
}

fn fit(a: FitArgs, quiet: bool) -> Result<(), TsError> {
    // observations and the time step they span
    let (obs, dt) = match (&a.data, &a.path) {
        (Some(d), _) => (read_column(d, 0)?, 1.0),
        (None, Some(pf)) => {
            let t = read_column(pf, 0)?;
            let x = read_column(pf, 1)?;
            if t.len() != x.len() || t.len() < 2 {
                return Err(io_err(pf, "expected a t,x path with at least two rows"));
            }
            let dt = t[1] - t[0];
            if !(dt > 0.0) {
                return Err(io_err(pf, "times must increase"));
            }
            (x.windows(2).map(|w| w[1] - w[0]).collect(), dt)
        }
        (None, None) => unreachable!("clap requires --data or --path"),
    };
    let c = sample_cumulants(&obs)?;
    let opts = FitOptions { max_iter: a.max_iter, tol: a.tol, ..Default::default() };
    if !quiet {
        eprintln!("fitting {} observations", obs.len());
    }
    let res = match &a.init {
        Some(init) => {
            // the start is given per unit time
            let s = read_params(init)?.to_array();
            let s = TemperedStableParams::new(s[0] * dt, s[1], s[2], s[3] * dt, s[4], s[5])?;
            fit_two_sided(&c, &s, &opts)?
        }
        None => fit_two_sided_multistart(&c, &opts)?,
    };
    let v = res.params.to_array();
    let per_unit = TemperedStableParams::new(v[0] / dt, v[1], v[2], v[3] / dt, v[4], v[5])?;
    print_json(&json!({
        "params": per_unit,
        "residual": res.residual,
        "iterations": res.iterations,
        "converged": res.converged,
        "n_obs": obs.len(),
        "time_step": dt,
        "sample_cumulants": c,
    }))?;
    if !res.converged {
        return Err(TsError::NonConvergence { iterations: res.iterations, residual: res.residual });
    }
    Ok(())
}

fn diagnose(a: DiagnoseArgs) -> Result<(), TsError> {
    let p = read_params(&a.params)?;
    let m = moment_stats(&p);
    let be = berry_esseen_bound(&p, BERRY_ESSEEN_C)?;
    let ok_or_note = |r: Result<Value, TsError>| r.unwrap_or_else(|e| json!({ "unavailable": e.to_string() }));
    let bracket = ok_or_note(mode_bracket(&p).map(|(lo, hi)| json!([lo, hi])));
    let md = ok_or_note(mode(&p).map(|x| json!(x)));
    let tail = ok_or_note(tail_constant(&p).map(|x| json!(x)));
    let report = json!({
        "params": p,
        "cumulants": (1..=6).map(|n| cumulant(&p, n)).collect::<Vec<_>>(),
        "moments": m,
        "berry_esseen": be,
        "mode": md,
        "mode_bracket": bracket,
        "right_tail_constant": tail,
        "blumenthal_getoor_index": bg_index(&p),
    });
    if a.json {
        return print_json(&report);
    }
    let [ap, bp, lp, am, bm, lm] = p.to_array();
    let mut t = format!("TS({ap}, {bp}, {lp}; {am}, {bm}, {lm})\n");
    t += &format!("mean      {}\nvariance  {}\nskewness  {}\nkurtosis  {}\n", m.mean, m.variance, m.skewness, m.kurtosis);
    t += &format!("Berry-Esseen bound (c = {})  {}{}\n", be.c_const, be.bound, if be.vacuous { "  (vacuous)" } else { "" });
    t += &format!("mode          {}\nmode bracket  {}\n", report["mode"], report["mode_bracket"]);
    t += &format!("right tail constant  {}\n", report["right_tail_constant"]);
    t += &format!("Blumenthal-Getoor index  {}\n", bg_index(&p));
    emit(&t)?;
    Ok(())
}

fn solve_json(s: &ts_core::measure::MartingaleSolve) -> Value {
    json!({
        "exists": s.exists,
        "theta": s.theta,
        "new_params": s.new_params,
        "residual": s.residual,
        "diagnostic": s.diagnostic,
    })
}

fn parse_grid(spec: &str) -> Result<Vec<f64>, TsError> {
    let bad = || TsError::Input(format!("--theta-grid expects A:B:N, got {spec:?}"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].parse().map_err(|_| bad())?;
    let b: f64 = parts[1].parse().map_err(|_| bad())?;
    let n: usize = parts[2].parse().map_err(|_| bad())?;
    if n == 0 || !(a.is_finite() && b.is_finite()) {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    Ok((0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect())
}

fn measure(m: MeasureCmd) -> Result<(), TsError> {
    match m {
        MeasureCmd::Esscher(r) => {
            let p = read_params(&r.params)?;
            print_json(&solve_json(&esscher_martingale(&p, r.r, r.q)?))
        }
        MeasureCmd::Curve { rates: r, theta_grid } => {
            let p = read_params(&r.params)?;
            let Some(d) = martingale_curve_domain(&p, r.r, r.q)? else {
                return print_json(&json!({ "exists": false, "domain": null, "points": [] }));
            };
            let grid = match theta_grid {
                Some(s) => parse_grid(&s)?,
                None => curve_grid(&d, 50),
            };
            let points = grid
                .iter()
                .map(|&t| {
                    let s = curve_point(&p, t, r.r, r.q)?;
                    let y = s.new_params.expect("solved point").minus().lambda();
                    Ok(json!({ "theta": t, "phi": p.minus().lambda() - y, "new_params": s.new_params, "residual": s.residual }))
                })
                .collect::<Result<Vec<_>, TsError>>()?;
            print_json(&json!({
                "exists": true,
                "domain": { "theta1": if d.theta1.is_finite() { json!(d.theta1) } else { json!("-inf") }, "theta2": d.theta2 },
                "points": points,
            }))
        }
        MeasureCmd::Mmm(r) => {
            let p = read_params(&r.params)?;
            let mm = minimal_martingale(&p, r.r, r.q)?;
            let factors: Vec<Value> = mm.factors.iter().map(|(w, f)| json!({ "weight": w, "params": f })).collect();
            print_json(&json!({ "exists": mm.exists, "c": mm.c, "factors": factors, "residual": mm.residual }))
        }
    }
}

fn price(a: PriceArgs) -> Result<(), TsError> {
    let p = read_params(&a.params)?;
    let m = MarketConfig::new(a.s0, a.r, a.q)?;
    let o = OptionSpec::new(a.strike, a.maturity)?;
    let kind = if a.put { OptionKind::Put } else { OptionKind::Call };
    let gap = risk_neutral_gap(&p, &m)?;
    if gap.abs() > MARTINGALE_TOL {
        eprintln!("warning: e^(X_t - (r - q) t) is not a martingale under these parameters (Psi(1) - (r - q) = {gap:e})");
    }
    let nu = a.nu.unwrap_or_else(|| ts_core::pricing::default_nu(&p));
    let v = fourier_price(&p, kind, &m, &o, Some(nu))?;
    let mut out = json!({
        "kind": kind,
        "price": v,
        "nu": nu,
        "method": "fourier",
        "risk_neutral_gap": gap,
    });
    if let Some(n) = a.mc_check {
        let mc = mc_price(&p, kind, &m, &o, n, a.seed)?;
        out["mc_price"] = json!(mc.price);
        out["mc_se"] = json!(mc.std_error);
        out["mc_paths"] = json!(mc.paths);
    }
    print_json(&out)
}
