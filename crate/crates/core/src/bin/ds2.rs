use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use serde_json::json;

use ds2::dirac::{solve_dirac, DerivativeRule, DiracProblem};
use ds2::eikonal::{
    estimate_threshold, series_to_solution, solve_fixed_point, solve_newton, solve_radial_series, EikonalMethod,
    EikonalSolution,
};
use ds2::harness::{fmt_num, reflection_curve, run_config_file, scan_grid, Status};
use ds2::oracles::{disk_reflection_k0, lorentzian_branch_points, lorentzian_f};
use ds2::potential::Potential;
use ds2::riccati::{integrate_riccati, nullclines, reflection_k0};
use ds2::spectral::fieldio::{load_all, save, write_field, ComplexField2D};
use ds2::spectral::{CartesianGrid, PolarGrid, PolarSpectral};
use ds2::wkb::{delta_fields, solve_alpha0, WKBLeadingOrder};
use ds2::{Error, Result};

#[derive(Parser)]
#[command(name = "ds2", version, about = "Semiclassical direct scattering for defocusing DS-II")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

fn parse_complex(s: &str) -> std::result::Result<Complex64, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |t: &str| t.parse::<f64>().map_err(|_| format!("bad number '{t}'"));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(format!("expected RE or RE,IM, got '{s}'")),
    }
}

fn parse_potential(s: &str) -> std::result::Result<Potential, String> {
    Potential::parse(s).map_err(|e| e.to_string())
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the eikonal problem on the polar grid.
    Eikonal {
        #[arg(long, value_parser = parse_potential)]
        potential: Potential,
        #[arg(long, value_parser = parse_complex)]
        k: Complex64,
        #[arg(long, default_value = "fixed-point")]
        method: EikonalMethod,
        #[arg(long, default_value_t = 32)]
        nc: usize,
        #[arg(long, default_value_t = 50)]
        nphi: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 100)]
        max_iter: usize,
        /// Number of series terms (series method only).
        #[arg(long, default_value_t = 120)]
        terms: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve for the WKB amplitude α₀ given g = f − kz.
    Alpha0 {
        #[arg(long)]
        g: PathBuf,
        #[arg(long, value_parser = parse_potential)]
        potential: Potential,
        #[arg(long, value_parser = parse_complex)]
        k: Complex64,
        #[arg(long, default_value_t = 1e-11)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the ε-dependent Dirac system on a Cartesian grid.
    Dirac {
        #[arg(long, value_parser = parse_potential)]
        potential: Potential,
        #[arg(long, value_parser = parse_complex)]
        k: Complex64,
        #[arg(long)]
        eps: f64,
        /// Grid size; defaults to the built-in table for ε.
        #[arg(long)]
        nx: Option<usize>,
        #[arg(long, default_value_t = 1e-10)]
        gmres_tol: f64,
        #[arg(long, default_value_t = 50)]
        restart: usize,
        #[arg(long, default_value_t = 400)]
        max_iter: usize,
        #[arg(long, default_value_t = 2)]
        reg_order: usize,
        #[arg(long, default_value = "spectral")]
        reg_rule: DerivativeRule,
        /// Two DSFLD1 records: e^{−kz/ε}ψ₁ then e^{−kz/ε}ψ₂.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        r0_out: Option<PathBuf>,
    },
    /// Integrate the k = 0 Riccati equation and tabulate X with the nullclines.
    Riccati {
        #[arg(long, value_parser = parse_potential)]
        potential: Potential,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// R₀(0) with its bounds for a list of ε.
    RiccatiR0 {
        #[arg(long, value_parser = parse_potential)]
        potential: Potential,
        #[arg(long, value_delimiter = ',', required = true)]
        eps_list: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-form reference values.
    Oracle {
        #[command(subcommand)]
        which: OracleCmd,
    },
    /// Compare a Dirac solution with the leading WKB term.
    WkbCompare {
        #[arg(long)]
        psi: PathBuf,
        #[arg(long)]
        g: PathBuf,
        #[arg(long)]
        alpha0: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long, value_parser = parse_potential)]
        potential: Potential,
        #[arg(long, value_parser = parse_complex)]
        k: Complex64,
        #[arg(long, default_value_t = 4.0 * std::f64::consts::PI)]
        half_width: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// R(k) for real k on [k_min, k_max].
    ReflectionScan {
        #[arg(long, value_parser = parse_potential)]
        potential: Potential,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 0.0)]
        k_min: f64,
        #[arg(long, default_value_t = 1.2)]
        k_max: f64,
        /// Number of equal intervals.
        #[arg(long, default_value_t = 60)]
        k_steps: usize,
        #[arg(long)]
        nx: Option<usize>,
        #[arg(long, default_value_t = 1e-10)]
        gmres_tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment described by a configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Subcommand)]
enum OracleCmd {
    /// f = kz + g for the Lorentzian amplitude.
    LorentzianF {
        #[arg(long, value_parser = parse_complex)]
        k: Complex64,
        #[arg(long, value_parser = parse_complex)]
        z: Complex64,
    },
    /// Branch points of the Lorentzian eikonal solution.
    BranchPoints {
        #[arg(long, value_parser = parse_complex)]
        k: Complex64,
    },
    /// 2ρ I₁(A₀ρ/ε)/I₀(A₀ρ/ε).
    DiskR0 {
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        a0: f64,
        #[arg(long)]
        eps: f64,
    },
}

fn cjson(z: Complex64) -> serde_json::Value {
    json!([z.re, z.im])
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("JSON values serialize"));
}

fn load_polar(path: &Path) -> Result<(PolarGrid, ds2::spectral::PolarField)> {
    match ds2::spectral::fieldio::load(path)? {
        ComplexField2D::Polar(g, f) => Ok((g, f)),
        ComplexField2D::Cartesian(_) => Err(Error::Format(format!("{} holds a Cartesian field", path.display()))),
    }
}

fn csv_writer(path: Option<&Path>) -> Result<csv::Writer<Box<dyn Write>>> {
    let sink: Box<dyn Write> = match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(std::io::stdout()),
    };
    Ok(csv::Writer::from_writer(sink))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

fn run(cmd: Cmd) -> Result<Status> {
    match cmd {
        Cmd::Eikonal { potential, k, method, nc, nphi, tol, max_iter, terms, out } => {
            let grid = PolarGrid::new(nc, nphi)?;
            let mut k_crit = None;
            let sol = match method {
                EikonalMethod::FixedPoint => solve_fixed_point(&potential, k, &grid, tol, max_iter)?,
                EikonalMethod::Newton => solve_newton(&potential, k, &grid, tol, max_iter)?,
                EikonalMethod::Series => {
                    let s = solve_radial_series(&potential, nc, terms)?;
                    k_crit = estimate_threshold(&s).ok().map(|(kc, _)| kc);
                    series_to_solution(&s, &potential, k, &grid)?
                }
                EikonalMethod::External => {
                    return Err(Error::InvalidArgument("method must be fixed-point, newton or series".into()))
                }
            };
            if let Some(p) = out {
                save(p, &ComplexField2D::Polar(grid, sol.values()))?;
            }
            let mut v = json!({
                "iterations": sol.iterations,
                "residual_sup": sol.residual_sup,
                "converged": sol.converged,
                "filter_threshold": sol.filter_threshold,
            });
            if let Some(kc) = k_crit {
                v["k_crit"] = json!(kc);
            }
            print_json(&v);
            Ok(if sol.converged { Status::Pass } else { Status::ThresholdFailure })
        }
        Cmd::Alpha0 { g, potential, k, tol, out } => {
            let (grid, values) = load_polar(&g)?;
            let eik = EikonalSolution::from_values(&potential, k, &grid, &values)?;
            let a = solve_alpha0(&eik, &potential, tol)?;
            if let Some(p) = out {
                let vals = PolarSpectral::new(&grid)?.to_values(&a.coeffs);
                save(p, &ComplexField2D::Polar(grid, vals))?;
            }
            print_json(&json!({
                "eikonal_residual_sup": eik.residual_sup,
                "gmres_iterations": a.gmres_iterations,
                "residual_sup": a.residual_sup,
            }));
            Ok(Status::Pass)
        }
        Cmd::Dirac { potential, k, eps, nx, gmres_tol, restart, max_iter, reg_order, reg_rule, out, r0_out } => {
            let n = nx.unwrap_or_else(|| DiracProblem::suggested_nx(eps));
            let mut prob = DiracProblem::new(potential, eps, k, CartesianGrid::square(n)?)?;
            prob.gmres.tol = gmres_tol;
            prob.gmres.restart = restart;
            prob.gmres.max_iter = max_iter;
            prob.reg_order = reg_order;
            prob.rule = reg_rule;
            let sol = solve_dirac(&prob)?;
            if let Some(p) = out {
                let mut w = BufWriter::new(File::create(p)?);
                write_field(&mut w, &ComplexField2D::Cartesian(sol.psi1_scaled.clone()))?;
                write_field(&mut w, &ComplexField2D::Cartesian(sol.psi2_scaled.clone()))?;
                w.flush()?;
            }
            let v = json!({
                "k": cjson(k),
                "eps": eps,
                "nx": n,
                "r0": cjson(sol.r0),
                "gmres_iterations": sol.iterations,
                "gmres_residuals": sol.residuals,
                "warnings": sol.warnings,
            });
            if let Some(p) = r0_out {
                std::fs::write(p, serde_json::to_string_pretty(&v).expect("JSON values serialize"))?;
            }
            print_json(&v);
            Ok(Status::Pass)
        }
        Cmd::Riccati { potential, eps, out } => {
            let sol = integrate_riccati(&potential, eps, None, 1e-11)?;
            let mut w = csv_writer(Some(&out))?;
            w.write_record(["r", "X", "X_plus", "X_minus"]).map_err(csv_err)?;
            for (&r, &x) in sol.r.iter().zip(&sol.x) {
                if r <= 0.0 {
                    continue;
                }
                let (xp, xm) = nullclines(r, eps, &potential)?;
                w.write_record([fmt_num(r), fmt_num(x), fmt_num(xp), fmt_num(xm)]).map_err(csv_err)?;
            }
            w.flush()?;
            print_json(&json!({ "eps": eps, "r0": sol.integrated, "r_end": sol.r_end, "r_match": sol.r_match }));
            Ok(Status::Pass)
        }
        Cmd::RiccatiR0 { potential, eps_list, out } => {
            let mut w = csv_writer(out.as_deref())?;
            w.write_record(["eps", "estimate", "lower", "upper", "integrated"]).map_err(csv_err)?;
            for eps in eps_list {
                let r = reflection_k0(&potential, eps)?;
                let cell = |v: Option<f64>| v.map(fmt_num).unwrap_or_default();
                w.write_record([fmt_num(eps), cell(r.estimate), cell(r.lower), cell(r.upper), fmt_num(r.integrated)])
                    .map_err(csv_err)?;
            }
            w.flush()?;
            Ok(Status::Pass)
        }
        Cmd::Oracle { which } => {
            let v = match which {
                OracleCmd::LorentzianF { k, z } => json!({ "k": cjson(k), "z": cjson(z), "f": cjson(lorentzian_f(z, k)?) }),
                OracleCmd::BranchPoints { k } => {
                    let pts = lorentzian_branch_points(k).map(|b| b.iter().map(|z| cjson(*z)).collect::<Vec<_>>());
                    json!({ "k": cjson(k), "branch_points": pts })
                }
                OracleCmd::DiskR0 { rho, a0, eps } => {
                    json!({ "rho": rho, "a0": a0, "eps": eps, "r0": disk_reflection_k0(rho, a0, eps)? })
                }
            };
            print_json(&v);
            Ok(Status::Pass)
        }
        Cmd::WkbCompare { psi, g, alpha0, eps, potential, k, half_width, out } => {
            let (psi1, psi2) = match <[ComplexField2D; 2]>::try_from(load_all(&psi)?) {
                Ok([ComplexField2D::Cartesian(a), ComplexField2D::Cartesian(b)]) => (a, b),
                _ => return Err(Error::Format("psi file must hold two Cartesian records".into())),
            };
            let grid = CartesianGrid::new(psi1.nx, psi1.ny, half_width, half_width)?;
            let (pg, gv) = load_polar(&g)?;
            let (ag, av) = load_polar(&alpha0)?;
            if ag != pg {
                return Err(Error::InvalidArgument("g and alpha0 live on different polar grids".into()));
            }
            let eik = EikonalSolution::from_values(&potential, k, &pg, &gv)?;
            let a = PolarSpectral::new(&pg)?.to_coeffs(&av);
            let w = WKBLeadingOrder::new(eik, a)?;
            let d = delta_fields(&psi1, &psi2, &w.on_cartesian(&potential, &grid), eps)?;
            let mut wr = csv_writer(Some(&out))?;
            wr.write_record(["eps", "sup_delta1", "sup_delta2"]).map_err(csv_err)?;
            wr.write_record([fmt_num(eps), fmt_num(d.sup1), fmt_num(d.sup2)]).map_err(csv_err)?;
            wr.flush()?;
            print_json(&json!({ "eps": eps, "sup_delta1": d.sup1, "sup_delta2": d.sup2 }));
            Ok(Status::Pass)
        }
        Cmd::ReflectionScan { potential, eps, k_min, k_max, k_steps, nx, gmres_tol, out } => {
            let ks = scan_grid(k_min, k_max, k_steps)?;
            let grid = CartesianGrid::square(nx.unwrap_or_else(|| DiracProblem::suggested_nx(eps)))?;
            let r = reflection_curve(&potential, eps, &ks, &grid, |p, e, k, g| {
                let mut prob = DiracProblem::new(p.clone(), e, k, g)?;
                prob.gmres.tol = gmres_tol;
                Ok(prob)
            })?;
            let mut w = csv_writer(Some(&out))?;
            w.write_record(["k", "re_r", "im_r"]).map_err(csv_err)?;
            for (k, v) in ks.iter().zip(&r) {
                w.write_record([fmt_num(*k), fmt_num(v.re), fmt_num(v.im)]).map_err(csv_err)?;
            }
            w.flush()?;
            Ok(Status::Pass)
        }
        Cmd::Run { config } => {
            let m = run_config_file(&config)?;
            for c in &m.checks {
                println!("{} {}: {:.6e}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value);
            }
            if let Some(e) = &m.error {
                eprintln!("error: {e}");
            }
            println!("manifest: {}", m.config.output.dir.join("manifest.json").display());
            Ok(m.status())
        }
    }
}

fn main() -> ExitCode {
    if let Ok(n) = std::env::var("DS2_THREADS") {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                // a second initialization can only fail if a pool already exists
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("warning: ignoring DS2_THREADS={n}"),
        }
    }
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(Status::Pass) => ExitCode::SUCCESS,
        Ok(Status::ThresholdFailure) => ExitCode::from(2),
        Ok(Status::SolverError) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
