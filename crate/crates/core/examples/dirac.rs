//! Reflection coefficient of the Gaussian at ε = 0.25 along a few real k, with the two
//! independent evaluations of R side by side.

use num_complex::Complex64;

use ds2::dirac::{equation_residual, reflection_from_solution, solve_dirac, DiracProblem};
use ds2::potential::Potential;
use ds2::spectral::CartesianGrid;

fn main() -> ds2::Result<()> {
    let eps = 0.25;
    let grid = CartesianGrid::square(DiracProblem::suggested_nx(eps))?;
    for k in [0.0, 0.5, 1.0] {
        let prob = DiracProblem::new(Potential::gaussian(), eps, Complex64::new(k, 0.0), grid.clone())?;
        let sol = solve_dirac(&prob)?;
        let area = reflection_from_solution(&sol, &prob);
        let (r1, r2) = equation_residual(&sol, &prob, 0.75)?;
        println!(
            "k {k:.2}: R = {:.10} (area integral {:.10}), gmres {:?}, residuals {r1:.1e} {r2:.1e}",
            sol.r0.re, area.re, sol.iterations
        );
    }
    Ok(())
}
