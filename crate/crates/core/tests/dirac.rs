use num_complex::Complex64;

use ds2::dirac::{equation_residual, reflection_from_solution, solve_dirac, DiracProblem};
use ds2::oracles::disk_reflection_k0;
use ds2::potential::Potential;
use ds2::riccati::reflection_k0;
use ds2::spectral::CartesianGrid;
use ds2::Error;

fn problem(p: Potential, eps: f64, k: Complex64, n: usize) -> DiracProblem {
    DiracProblem::new(p, eps, k, CartesianGrid::square(n).unwrap()).unwrap()
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

#[test]
fn k_zero_agrees_with_riccati() {
    for (eps, n) in [(1.0, 256), (0.5, 256)] {
        let prob = problem(Potential::gaussian(), eps, Complex64::new(0.0, 0.0), n);
        let sol = solve_dirac(&prob).unwrap();
        let ric = reflection_k0(&Potential::gaussian(), eps).unwrap().integrated;
        let err = rel(sol.r0, Complex64::new(ric, 0.0));
        assert!(err < 1e-8, "eps {eps}: dirac {} riccati {ric}", sol.r0);
    }
}

#[test]
fn both_reflection_routes_agree_and_r_is_real() {
    let prob = problem(Potential::gaussian(), 0.5, Complex64::new(0.8, 0.0), 256);
    let sol = solve_dirac(&prob).unwrap();
    // origin value of the transform against the area integral of (q/2ε)E(m̄₊ + m̄₋ + 2)
    let area = reflection_from_solution(&sol, &prob);
    assert!(rel(area, sol.r0) < 1e-8, "{area} vs {}", sol.r0);
    assert!(sol.r0.im.abs() < 1e-10 * sol.r0.re.abs());
}

#[test]
fn equation_residual_is_small_away_from_the_boundary() {
    let prob = problem(Potential::gaussian(), 0.5, Complex64::new(1.0, 0.0), 256);
    let sol = solve_dirac(&prob).unwrap();
    let (r1, r2) = equation_residual(&sol, &prob, 0.75).unwrap();
    assert!(r1 < 1e-8 && r2 < 1e-8, "{r1} {r2}");
}

#[test]
fn negating_the_potential_swaps_the_branches() {
    let k = Complex64::new(0.6, 0.2);
    let a = solve_dirac(&problem(Potential::gaussian(), 0.5, k, 256)).unwrap();
    let b = solve_dirac(&problem(Potential::gaussian().scaled(-1.0), 0.5, k, 256)).unwrap();
    assert!(rel(-b.r0, a.r0) < 1e-10);
    let swap = a.m_plus.zip_map(&b.m_minus, |u, v| u - v).max_abs();
    assert!(swap < 1e-10 * a.m_plus.max_abs(), "{swap}");
}

#[test]
fn radial_potential_depends_on_modulus_of_k() {
    let k = 0.7;
    let rot = Complex64::from_polar(k, std::f64::consts::FRAC_PI_2);
    let a = solve_dirac(&problem(Potential::gaussian(), 0.5, Complex64::new(k, 0.0), 256)).unwrap();
    let b = solve_dirac(&problem(Potential::gaussian(), 0.5, rot, 256)).unwrap();
    // a quarter turn maps the square grid to itself
    assert!(rel(b.r0, a.r0) < 1e-9, "{} vs {}", b.r0, a.r0);
}

#[test]
fn disk_matches_bessel_ratio() {
    let p = Potential::disk(1.0, 1.0).unwrap();
    let sol = solve_dirac(&problem(p, 0.2, Complex64::new(0.0, 0.0), 512)).unwrap();
    let exact = disk_reflection_k0(1.0, 1.0, 0.2).unwrap();
    // the jump limits the FFT discretization to low-order accuracy
    assert!((sol.r0.re - exact).abs() / exact < 2e-3, "{} vs {exact}", sol.r0);
    assert!(!sol.warnings.is_empty());
}

#[test]
fn underresolved_smooth_problem_is_refused() {
    let prob = problem(Potential::gaussian(), 0.05, Complex64::new(1.0, 0.0), 64);
    assert!(matches!(solve_dirac(&prob), Err(Error::Resolution(_))));
    let mut lax = prob.clone();
    lax.strict_resolution = false;
    assert!(solve_dirac(&lax).is_ok_and(|s| !s.warnings.is_empty()));
}
