//! Experiment orchestration: configuration files, sweeps, log-log regression and the emitted
//! CSV tables, field files, SVG plots and JSON manifest.

pub mod config;
pub mod plot;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::dirac::{solve_dirac, DiracProblem};
use crate::eikonal::{estimate_threshold, loglog_slope, solve_fixed_point, solve_newton, solve_radial_series, EikonalMethod};
use crate::error::{Error, Result};
use crate::numerics::line_fit;
use crate::oracles::{lorentzian_alpha0_error, lorentzian_g_error};
use crate::potential::{Potential, PotentialKind};
use crate::riccati::reflection_k0;
use crate::spectral::fieldio::{save, ComplexField2D};
use crate::spectral::{CartesianGrid, PolarGrid, PolarSpectral};
use crate::wkb::{delta_fields, WKBLeadingOrder};

pub use config::{ExperimentConfig, ExperimentKind};
use plot::{emit_plot, render_heatmap, PlotStyle, Series};

/// Least-squares line through `(log₁₀ x, log₁₀ y)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegressionResult {
    pub slope: f64,
    pub intercept: f64,
    pub residual_rms: f64,
    pub points: Vec<(f64, f64)>,
}

pub fn regression_loglog(xs: &[f64], ys: &[f64]) -> Result<RegressionResult> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidArgument(format!("{} abscissae but {} values", xs.len(), ys.len())));
    }
    if xs.len() < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 points, got {}", xs.len())));
    }
    if let Some(v) = xs.iter().chain(ys).find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("log-log regression needs positive finite data, got {v}")));
    }
    let points: Vec<(f64, f64)> = xs.iter().zip(ys).map(|(x, y)| (x.log10(), y.log10())).collect();
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
    let (slope, intercept, residual_rms) = line_fit(&lx, &ly)?;
    Ok(RegressionResult { slope, intercept, residual_rms, points })
}

/// One threshold comparison recorded in the manifest.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub pass: bool,
}

impl Check {
    fn range(name: impl Into<String>, value: f64, min: Option<f64>, max: Option<f64>) -> Self {
        let pass = value.is_finite() && min.is_none_or(|m| value >= m) && max.is_none_or(|m| value <= m);
        Self { name: name.into(), value, min, max, pass }
    }

    fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self { name: name.into(), value: if ok { 1.0 } else { 0.0 }, min: Some(1.0), max: None, pass: ok }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub experiment: ExperimentKind,
    pub version: String,
    pub config: ExperimentConfig,
    pub artifacts: Vec<Artifact>,
    pub checks: Vec<Check>,
    /// Wall-clock seconds per stage.
    pub runtimes: BTreeMap<String, f64>,
    pub passed: bool,
    pub error: Option<String>,
}

/// Outcome classes used for process exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    ThresholdFailure,
    SolverError,
}

impl Manifest {
    pub fn status(&self) -> Status {
        if self.error.is_some() {
            Status::SolverError
        } else if self.passed {
            Status::Pass
        } else {
            Status::ThresholdFailure
        }
    }
}

struct Outputs {
    dir: PathBuf,
    artifacts: Vec<Artifact>,
    checks: Vec<Check>,
    runtimes: BTreeMap<String, f64>,
}

impl Outputs {
    fn register(&mut self, name: &str) -> Result<()> {
        let path = self.dir.join(name);
        let bytes = fs::read(&path)?;
        self.artifacts.push(Artifact {
            path: name.to_string(),
            sha256: hex::encode(Sha256::digest(&bytes)),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| Error::Format(e.to_string()))?;
        w.write_record(header).map_err(|e| Error::Format(e.to_string()))?;
        for r in rows {
            w.write_record(r).map_err(|e| Error::Format(e.to_string()))?;
        }
        w.flush()?;
        self.register(name)
    }

    fn plot(&mut self, name: &str, series: &[Series], style: &PlotStyle) -> Result<()> {
        emit_plot(self.dir.join(name), series, style)?;
        self.register(name)
    }

    fn field(&mut self, name: &str, field: &ComplexField2D) -> Result<()> {
        save(self.dir.join(name), field)?;
        self.register(name)
    }

    fn timed<T>(&mut self, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t = Instant::now();
        let out = f();
        *self.runtimes.entry(stage.to_string()).or_insert(0.0) += t.elapsed().as_secs_f64();
        out
    }
}

/// Fixed-format number for CSV cells, independent of locale and platform.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.15e}")
}

/// Runs one configured experiment into `cfg.output.dir` and writes `manifest.json` there.
///
/// Invalid configurations are returned as errors. Solver failures abort the experiment but
/// still produce a manifest (with `error` set and the artifacts written so far).
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Manifest> {
    cfg.validate()?;
    let potential = cfg.potential.build()?;
    let dir = cfg.output.dir.clone();
    fs::create_dir_all(&dir)?;
    let mut out = Outputs { dir: dir.clone(), artifacts: Vec::new(), checks: Vec::new(), runtimes: BTreeMap::new() };
    let t = Instant::now();
    let res = match cfg.experiment {
        ExperimentKind::EikonalAccuracy => eikonal_accuracy(cfg, &potential, &mut out),
        ExperimentKind::Alpha0Accuracy => alpha0_accuracy(cfg, &potential, &mut out),
        ExperimentKind::WkbConvergence => wkb_convergence(cfg, &potential, &mut out),
        ExperimentKind::ReflectionScan => reflection_scan(cfg, &potential, &mut out),
        ExperimentKind::RiccatiBounds => riccati_bounds(cfg, &potential, &mut out),
        ExperimentKind::ThresholdEstimate => threshold_estimate(cfg, &potential, &mut out),
    };
    out.runtimes.insert("total".into(), t.elapsed().as_secs_f64());
    let error = res.err().map(|e| e.to_string());
    let passed = error.is_none() && out.checks.iter().all(|c| c.pass);
    let manifest = Manifest {
        experiment: cfg.experiment,
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        artifacts: out.artifacts,
        checks: out.checks,
        runtimes: out.runtimes,
        passed,
        error,
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(dir.join("manifest.json"), json)?;
    Ok(manifest)
}

fn complex_k(k: f64) -> Complex64 {
    Complex64::new(k, 0.0)
}

fn is_lorentzian(p: &Potential) -> bool {
    matches!(p.kind(), PotentialKind::Lorentzian) && p.scale() == 1.0
}

fn eikonal_accuracy(cfg: &ExperimentConfig, p: &Potential, out: &mut Outputs) -> Result<()> {
    let grid = PolarGrid::new(cfg.grid.nc, cfg.grid.nphi)?;
    let methods = cfg.methods()?;
    let mut rows = Vec::new();
    for &k in &cfg.k {
        for &m in &methods {
            let kc = complex_k(k);
            let sol = out.timed(&format!("{m:?}"), || match m {
                EikonalMethod::FixedPoint => solve_fixed_point(p, kc, &grid, cfg.tolerances.eikonal, cfg.max_iter),
                _ => solve_newton(p, kc, &grid, cfg.tolerances.eikonal, cfg.max_iter),
            })?;
            let err = if is_lorentzian(p) { lorentzian_g_error(&grid, &sol.values(), kc) } else { f64::NAN };
            let tag = method_tag(m);
            if is_lorentzian(p) {
                out.checks.push(Check::range(format!("k={k} {tag} error"), err, None, cfg.thresholds.max_error));
            }
            if let Some(&cap) = cfg.thresholds.max_iterations.get(tag) {
                out.checks.push(Check::range(format!("k={k} {tag} iterations"), sol.iterations as f64, None, Some(cap as f64)));
            }
            out.checks.push(Check::flag(format!("k={k} {tag} converged"), sol.converged));
            rows.push(vec![
                fmt_num(k),
                tag.to_string(),
                sol.iterations.to_string(),
                fmt_num(sol.residual_sup),
                fmt_num(err),
            ]);
            if cfg.output.write_fields {
                out.field(&format!("g_k{k}_{tag}.dsfld"), &ComplexField2D::Polar(grid.clone(), sol.values()))?;
            }
        }
    }
    out.csv("eikonal.csv", &["k", "method", "iterations", "residual_sup", "oracle_error"], &rows)
}

fn method_tag(m: EikonalMethod) -> &'static str {
    match m {
        EikonalMethod::FixedPoint => "fixed-point",
        EikonalMethod::Newton => "newton",
        EikonalMethod::Series => "series",
        EikonalMethod::External => "external",
    }
}

fn leading_order(cfg: &ExperimentConfig, p: &Potential, k: f64) -> Result<WKBLeadingOrder> {
    let grid = PolarGrid::new(cfg.grid.nc, cfg.grid.nphi)?;
    let g = solve_newton(p, complex_k(k), &grid, cfg.tolerances.eikonal, cfg.max_iter)?;
    WKBLeadingOrder::solve(g, p, cfg.tolerances.alpha0)
}

fn alpha0_accuracy(cfg: &ExperimentConfig, p: &Potential, out: &mut Outputs) -> Result<()> {
    let mut rows = Vec::new();
    for &k in &cfg.k {
        let w = out.timed("alpha0", || leading_order(cfg, p, k))?;
        let vals = PolarSpectral::new(w.grid())?.to_values(&w.alpha0);
        let err = if is_lorentzian(p) {
            lorentzian_alpha0_error(w.grid(), &vals, complex_k(k), 0.1, 10.0)?
        } else {
            f64::NAN
        };
        if is_lorentzian(p) {
            out.checks.push(Check::range(format!("k={k} alpha0 error"), err, None, cfg.thresholds.max_error));
        }
        let sing = w.singularity_residual(p);
        rows.push(vec![fmt_num(k), fmt_num(err), fmt_num(sing), fmt_num(w.kernel_residual(p))]);
        if cfg.output.write_fields {
            out.field(&format!("alpha0_k{k}.dsfld"), &ComplexField2D::Polar(w.grid().clone(), vals))?;
        }
    }
    out.csv("alpha0.csv", &["k", "oracle_error", "singularity_residual", "kernel_residual"], &rows)
}

struct DeltaRow {
    k: f64,
    eps: f64,
    nx: usize,
    sup1: f64,
    sup2: f64,
    r0: Complex64,
    iterations: usize,
    psi2_abs: Option<(CartesianGrid, Vec<f64>)>,
}

fn wkb_convergence(cfg: &ExperimentConfig, p: &Potential, out: &mut Outputs) -> Result<()> {
    let mut all: Vec<DeltaRow> = Vec::new();
    let mut reg_rows = Vec::new();
    let mut series1 = Vec::new();
    let mut series2 = Vec::new();
    for &k in &cfg.k {
        let w = out.timed("wkb", || leading_order(cfg, p, k))?;
        let jobs: Vec<(usize, f64)> = cfg.eps.iter().copied().enumerate().collect();
        let smallest = cfg.eps.len() - 1;
        let t = Instant::now();
        let rows: Vec<Result<DeltaRow>> = jobs
            .par_iter()
            .map(|&(i, eps)| {
                let nx = cfg.nx_for(i, eps);
                let cart = CartesianGrid::square(nx)?;
                let prob = cfg.dirac_problem(p, eps, complex_k(k), cart.clone())?;
                let sol = solve_dirac(&prob)?;
                let d = delta_fields(&sol.psi1_scaled, &sol.psi2_scaled, &w.on_cartesian(p, &cart), eps)?;
                let psi2_abs = (i == smallest).then(|| (cart.clone(), sol.psi2_scaled.data.iter().map(|v| v.norm()).collect()));
                Ok(DeltaRow { k, eps, nx, sup1: d.sup1, sup2: d.sup2, r0: sol.r0, iterations: sol.iterations[0], psi2_abs })
            })
            .collect();
        *out.runtimes.entry("dirac".into()).or_insert(0.0) += t.elapsed().as_secs_f64();
        let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
        let eps: Vec<f64> = rows.iter().map(|r| r.eps).collect();
        for (name, ys, series) in [
            ("delta1", rows.iter().map(|r| r.sup1).collect::<Vec<_>>(), &mut series1),
            ("delta2", rows.iter().map(|r| r.sup2).collect::<Vec<_>>(), &mut series2),
        ] {
            let reg = regression_loglog(&eps, &ys)?;
            let (lo, hi) = cfg.thresholds.slope_for(k);
            out.checks.push(Check::range(format!("k={k} {name} slope"), reg.slope, lo, hi));
            reg_rows.push(vec![fmt_num(k), name.to_string(), fmt_num(reg.slope), fmt_num(reg.intercept), fmt_num(reg.residual_rms)]);
            series.push(Series::new(format!("k = {k}"), eps.iter().copied().zip(ys.iter().copied()).collect()));
        }
        if cfg.output.plots {
            if let Some((grid, abs)) = rows.iter().find_map(|r| r.psi2_abs.clone()) {
                let name = format!("psi2_abs_k{k}.svg");
                let svg = render_heatmap(
                    &abs,
                    grid.nx,
                    grid.ny,
                    (-grid.lx, grid.lx, -grid.ly, grid.ly),
                    &format!("|e^(-kz/eps) psi2|, k = {k}, eps = {}", cfg.eps[smallest]),
                    128,
                )?;
                fs::write(out.dir.join(&name), svg)?;
                out.register(&name)?;
            }
        }
        all.extend(rows);
    }
    let rows: Vec<Vec<String>> = all
        .iter()
        .map(|r| {
            vec![
                fmt_num(r.k),
                fmt_num(r.eps),
                r.nx.to_string(),
                fmt_num(r.sup1),
                fmt_num(r.sup2),
                fmt_num(r.r0.re),
                fmt_num(r.r0.im),
                r.iterations.to_string(),
            ]
        })
        .collect();
    out.csv("deltas.csv", &["k", "eps", "nx", "sup_delta1", "sup_delta2", "re_r", "im_r", "gmres_iterations"], &rows)?;
    out.csv("regression.csv", &["k", "quantity", "slope", "intercept", "residual_rms"], &reg_rows)?;
    if cfg.output.plots {
        for (name, series) in [("delta1.svg", &series1), ("delta2.svg", &series2)] {
            let style = PlotStyle {
                title: format!("sup-norm of {} vs eps", &name[..6]),
                x_label: "eps".into(),
                y_label: name[..6].into(),
                log_x: true,
                log_y: true,
                markers: true,
                ..Default::default()
            };
            out.plot(name, series, &style)?;
        }
    }
    Ok(())
}

/// The `k` grid of a scan: `steps` equal intervals on `[k_min, k_max]`.
pub fn scan_grid(k_min: f64, k_max: f64, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 || !(k_max > k_min) {
        return Err(Error::InvalidArgument(format!("scan needs k_min < k_max and steps ≥ 1, got [{k_min}, {k_max}] / {steps}")));
    }
    Ok((0..=steps).map(|i| k_min + (k_max - k_min) * i as f64 / steps as f64).collect())
}

/// `R(k)` along the real axis, one Dirac solve per `k` (solves run in parallel).
pub fn reflection_curve(
    p: &Potential,
    eps: f64,
    ks: &[f64],
    grid: &CartesianGrid,
    make: impl Fn(&Potential, f64, Complex64, CartesianGrid) -> Result<DiracProblem> + Sync,
) -> Result<Vec<Complex64>> {
    ks.par_iter()
        .map(|&k| solve_dirac(&make(p, eps, complex_k(k), grid.clone())?).map(|s| s.r0))
        .collect()
}

/// Structural checks on a scan: realness, monotone decay from `from`, `R(1)/R(0)`, and the
/// peak against `2√ln(1/ε)`.
#[derive(Clone, Debug, Serialize)]
pub struct ScanShape {
    pub max_imag: f64,
    pub monotone: bool,
    pub decay_ratio: Option<f64>,
    pub peak_rel_error: Option<f64>,
}

pub fn scan_shape(ks: &[f64], r: &[Complex64], eps: f64, from: f64) -> ScanShape {
    let max_imag = r.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    let tail: Vec<f64> = ks.iter().zip(r).filter(|(k, _)| **k >= from - 1e-12).map(|(_, v)| v.re).collect();
    let monotone = tail.windows(2).all(|w| w[1] < w[0]);
    let at = |k0: f64| ks.iter().position(|k| (k - k0).abs() < 1e-9).map(|i| r[i].re);
    let decay_ratio = match (at(0.0), at(1.0)) {
        (Some(a), Some(b)) if a != 0.0 => Some(b / a),
        _ => None,
    };
    let predicted = 2.0 * (1.0 / eps).ln().sqrt();
    let peak_rel_error = (eps < 1.0).then_some(()).and(at(0.0)).map(|a| (a - predicted).abs() / predicted);
    ScanShape { max_imag, monotone, decay_ratio, peak_rel_error }
}

fn reflection_scan(cfg: &ExperimentConfig, p: &Potential, out: &mut Outputs) -> Result<()> {
    let ks = match &cfg.scan {
        Some(s) => scan_grid(s.k_min, s.k_max, s.k_steps)?,
        None => cfg.k.clone(),
    };
    let mut series = Vec::new();
    for (i, &eps) in cfg.eps.iter().enumerate() {
        let grid = CartesianGrid::square(cfg.nx_for(i, eps))?;
        let r = out.timed("dirac", || reflection_curve(p, eps, &ks, &grid, |p, e, k, g| cfg.dirac_problem(p, e, k, g)))?;
        let rows: Vec<Vec<String>> =
            ks.iter().zip(&r).map(|(k, v)| vec![fmt_num(*k), fmt_num(v.re), fmt_num(v.im)]).collect();
        out.csv(&format!("scan_eps{eps}.csv"), &["k", "re_r", "im_r"], &rows)?;
        let t = &cfg.thresholds;
        let shape = scan_shape(&ks, &r, eps, t.monotone_from.unwrap_or(0.55));
        out.checks.push(Check::range(format!("eps={eps} max |Im R|"), shape.max_imag, None, t.imag_max));
        if t.monotone_from.is_some() {
            out.checks.push(Check::flag(format!("eps={eps} monotone"), shape.monotone));
        }
        if let (Some(cap), Some(v)) = (t.decay_ratio, shape.decay_ratio) {
            out.checks.push(Check::range(format!("eps={eps} R(1)/R(0)"), v, None, Some(cap)));
        }
        if let (Some(cap), Some(v)) = (t.peak_rel, shape.peak_rel_error) {
            out.checks.push(Check::range(format!("eps={eps} R(0) vs 2 sqrt(ln 1/eps)"), v, None, Some(cap)));
        }
        series.push(Series::new(format!("eps = {eps}"), ks.iter().zip(&r).map(|(k, v)| (*k, v.re)).collect()));
    }
    if cfg.output.plots {
        let style = PlotStyle {
            title: "reflection coefficient".into(),
            x_label: "k".into(),
            y_label: "R".into(),
            vlines: vec![0.5],
            ..Default::default()
        };
        out.plot("scan.svg", &series, &style)?;
    }
    Ok(())
}

fn riccati_bounds(cfg: &ExperimentConfig, p: &Potential, out: &mut Outputs) -> Result<()> {
    let mut rows = Vec::new();
    let (mut est, mut lo, mut hi, mut integ) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut prev_ratio: Option<f64> = None;
    for &eps in &cfg.eps {
        let r = out.timed("riccati", || reflection_k0(p, eps))?;
        let predicted = 2.0 * (1.0 / eps).ln().sqrt();
        let ratio = r.integrated / predicted;
        let cell = |v: Option<f64>| v.map(fmt_num).unwrap_or_default();
        rows.push(vec![fmt_num(eps), cell(r.estimate), cell(r.lower), cell(r.upper), fmt_num(r.integrated), fmt_num(ratio)]);
        if let (Some(l), Some(u)) = (r.lower, r.upper) {
            out.checks.push(Check::flag(format!("eps={eps} strictly inside bounds"), l < r.integrated && r.integrated < u));
            lo.push((eps, l));
            hi.push((eps, u));
        }
        if let Some([a, b]) = cfg.thresholds.ratio {
            out.checks.push(Check::range(format!("eps={eps} R0/(2 sqrt(ln 1/eps))"), ratio, Some(a), Some(b)));
            if let Some(pr) = prev_ratio {
                out.checks.push(Check::flag(format!("eps={eps} ratio increasing"), ratio > pr));
            }
        }
        prev_ratio = Some(ratio);
        if let Some(e) = r.estimate {
            est.push((eps, e));
        }
        integ.push((eps, r.integrated));
    }
    out.csv("riccati_r0.csv", &["eps", "estimate", "lower", "upper", "integrated", "ratio"], &rows)?;
    if cfg.output.plots {
        let series = vec![
            Series::new("integrated", integ),
            Series::new("estimate 2 r_match", est),
            Series::new("lower", lo),
            Series::new("upper", hi),
        ];
        let style = PlotStyle {
            title: "R0 at k = 0".into(),
            x_label: "eps".into(),
            y_label: "R0".into(),
            log_x: true,
            markers: true,
            ..Default::default()
        };
        out.plot("riccati_r0.svg", &series, &style)?;
    }
    Ok(())
}

fn threshold_estimate(cfg: &ExperimentConfig, p: &Potential, out: &mut Outputs) -> Result<()> {
    let s = out.timed("series", || solve_radial_series(p, cfg.grid.nc, cfg.grid.n_terms))?;
    let rows: Vec<Vec<String>> =
        s.sup_norms.iter().enumerate().map(|(n, v)| vec![n.to_string(), fmt_num(*v)]).collect();
    out.csv("series_norms.csv", &["n", "sup_norm"], &rows)?;
    let t = &cfg.thresholds;
    match estimate_threshold(&s) {
        Ok((kc, fit)) => {
            let [a, b] = t.k_crit.unwrap_or([f64::NEG_INFINITY, f64::INFINITY]);
            out.checks.push(Check::range("k_crit", kc, t.k_crit.map(|_| a), t.k_crit.map(|_| b)));
            if let Some([a, b]) = t.beta {
                out.checks.push(Check::range("beta", fit.beta, Some(a), Some(b)));
            }
            out.csv(
                "threshold_fit.csv",
                &["k_crit", "alpha", "beta", "gamma"],
                &[vec![fmt_num(kc), fmt_num(fit.alpha), fmt_num(fit.beta), fmt_num(fit.gamma)]],
            )?;
        }
        Err(e) if t.k_crit.is_some() || t.beta.is_some() => return Err(e),
        Err(_) => {}
    }
    if let Some([a, b]) = t.slope {
        out.checks.push(Check::range("log-log slope", loglog_slope(&s)?, Some(a), Some(b)));
    }
    if cfg.output.plots {
        let pts = s.sup_norms.iter().enumerate().skip(1).map(|(n, v)| (n as f64, *v)).collect();
        let style = PlotStyle {
            title: "series coefficient norms".into(),
            x_label: "n".into(),
            y_label: "sup |c_n|".into(),
            log_y: true,
            ..Default::default()
        };
        out.plot("series_norms.svg", &[Series::new("", pts)], &style)?;
    }
    Ok(())
}

/// Reads a configuration file and runs it.
pub fn run_config_file(path: impl AsRef<Path>) -> Result<Manifest> {
    let cfg = ExperimentConfig::from_file(path)?;
    run_experiment(&cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regression_of_exact_power_law() {
        let xs = [0.5, 0.25, 0.125, 0.0625];
        let ys: Vec<f64> = xs.iter().map(|x| 0.3 * x).collect();
        let r = regression_loglog(&xs, &ys).unwrap();
        assert!((r.slope - 1.0).abs() < 1e-13);
        assert!((r.intercept - 0.3f64.log10()).abs() < 1e-13);
        assert!(r.residual_rms < 1e-13);
        assert!(regression_loglog(&xs[..2], &ys[..2]).is_err());
        assert!(regression_loglog(&xs, &[1.0, 0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn scan_grid_and_shape() {
        let ks = scan_grid(0.0, 1.2, 12).unwrap();
        assert_eq!(ks.len(), 13);
        assert!((ks[10] - 1.0).abs() < 1e-15);
        assert!(scan_grid(1.0, 1.0, 4).is_err());
        let r: Vec<Complex64> = ks.iter().map(|k| Complex64::new(3.0 * (-4.0 * k * k).exp(), 0.0)).collect();
        let s = scan_shape(&ks, &r, 0.1, 0.55);
        assert!(s.monotone && s.max_imag == 0.0);
        assert!((s.decay_ratio.unwrap() - (-4.0f64).exp()).abs() < 1e-12);
        let want = (3.0 - 2.0 * 10f64.ln().sqrt()).abs() / (2.0 * 10f64.ln().sqrt());
        assert!((s.peak_rel_error.unwrap() - want).abs() < 1e-12);
    }
}
