//! Leading WKB term for the Gaussian at k = 1 compared with the Dirac solution for a few ε.

use num_complex::Complex64;

use ds2::dirac::{solve_dirac, DiracProblem};
use ds2::eikonal::solve_newton;
use ds2::harness::regression_loglog;
use ds2::potential::Potential;
use ds2::spectral::{CartesianGrid, PolarGrid};
use ds2::wkb::{delta_fields, WKBLeadingOrder};

fn main() -> ds2::Result<()> {
    let p = Potential::gaussian();
    let k = Complex64::new(1.0, 0.0);
    let g = solve_newton(&p, k, &PolarGrid::new(40, 64)?, 1e-12, 20)?;
    let w = WKBLeadingOrder::solve(g, &p, 1e-11)?;
    println!("alpha0 kernel residual {:.1e}", w.kernel_residual(&p));

    let eps = [0.5, 0.25, 0.125];
    let (mut d1, mut d2) = (Vec::new(), Vec::new());
    for &e in &eps {
        let grid = CartesianGrid::square(DiracProblem::suggested_nx(e))?;
        let sol = solve_dirac(&DiracProblem::new(p.clone(), e, k, grid.clone())?)?;
        let d = delta_fields(&sol.psi1_scaled, &sol.psi2_scaled, &w.on_cartesian(&p, &grid), e)?;
        println!("eps {e:<6} |D1| {:.3e}  |D2| {:.3e}", d.sup1, d.sup2);
        d1.push(d.sup1);
        d2.push(d.sup2);
    }
    let (r1, r2) = (regression_loglog(&eps, &d1)?, regression_loglog(&eps, &d2)?);
    println!("slopes {:.3} and {:.3}", r1.slope, r2.slope);
    Ok(())
}
