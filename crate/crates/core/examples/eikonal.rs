//! Eikonal exponent for the Lorentzian bump by fixed-point, Newton and the radial series,
//! each checked against the closed form.

use num_complex::Complex64;

use ds2::eikonal::{estimate_threshold, series_to_solution, solve_fixed_point, solve_newton, solve_radial_series};
use ds2::oracles::lorentzian_g_error;
use ds2::potential::Potential;
use ds2::spectral::PolarGrid;

fn main() -> ds2::Result<()> {
    let p = Potential::lorentzian();
    let k = Complex64::new(1.0, 0.0);
    let grid = PolarGrid::new(32, 50)?;

    let fp = solve_fixed_point(&p, k, &grid, 1e-12, 100)?;
    let nt = solve_newton(&p, k, &grid, 1e-12, 20)?;
    let series = solve_radial_series(&p, 32, 60)?;
    let sr = series_to_solution(&series, &p, k, &grid)?;
    for (name, sol) in [("fixed-point", &fp), ("newton", &nt), ("series", &sr)] {
        let err = lorentzian_g_error(&grid, &sol.values(), k);
        println!("{name:>12}: {:>3} iterations, residual {:.1e}, error vs closed form {err:.1e}", sol.iterations, sol.residual_sup);
    }

    let gauss = solve_radial_series(&Potential::gaussian(), 40, 120)?;
    let (kc, _) = estimate_threshold(&gauss)?;
    println!("gaussian series converges for |k| > {kc:.4}");
    Ok(())
}
