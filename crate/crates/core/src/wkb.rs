//! Leading-order WKB amplitude `α₀` and the comparison fields for the Dirac solution.
//!
//! With `S ≡ 0` the amplitude solves `∂f ∂̄α + ∂̄f ∂α + (∂∂̄f + ∂̄f ∂lnA)α = 0`, `α → 1` at
//! infinity. Writing `α = 1 + β` and dividing by `2k e^{iφ}/4` turns this into
//!
//! ```text
//! L₊β + e^{−iφ}(L₋g·L₊β + L₊g·L₋β)/(2k) + Wβ = −W,
//! W = e^{−iφ}Δg/(2k) + L₊g·∂lnA/k,
//! ```
//!
//! which is solved on the eikonal grid with the same tau rows as the eikonal problem.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::eikonal::{angular_factor, sample_amplitude, scale_by_angle, EikonalSolution};
use crate::error::{Error, Result};
use crate::numerics::{gmres, GmresOptions};
use crate::potential::Potential;
use crate::spectral::fourier::mode_of;
use crate::spectral::polar::{INNER, OUTER};
use crate::spectral::{CartesianField, CartesianGrid, DbarSolver, PolarField, PolarGrid, PolarSpectral, SpectralCoeffs};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Samples of `∂lnA` on the polar grid (0 at `r = ∞`). Zeros of `A` inside `r ≤ 10` are
/// rejected; farther out `A` may underflow without consequence since `L₊g` decays with it.
fn sample_dlog(p: &Potential, grid: &PolarGrid) -> Result<PolarField> {
    let mut bad = None;
    let f = PolarField::from_fn(grid, |r, phi| {
        if r.is_infinite() {
            return ZERO;
        }
        let (x, y) = (r * phi.cos(), r * phi.sin());
        let v = p.dlog(x, y);
        if !v.re.is_finite() || !v.im.is_finite() || (r <= 10.0 && p.amplitude(x, y) == 0.0) {
            bad.get_or_insert((r, phi));
        }
        v
    });
    match bad {
        Some((r, phi)) => Err(Error::InvalidArgument(format!("ln A is undefined or not differentiable at r = {r:.4}, φ = {phi:.4}"))),
        None => Ok(f),
    }
}

struct AlphaOperator {
    grid: PolarGrid,
    ops: PolarSpectral,
    dbar: DbarSolver,
    lp_g: PolarField,
    lm_g: PolarField,
    w: PolarField,
    e_minus: Vec<Complex64>,
    k: Complex64,
}

impl AlphaOperator {
    fn new(g: &EikonalSolution, p: &Potential) -> Result<Self> {
        p.require_smooth()?;
        let grid = g.grid.clone();
        let ops = PolarSpectral::new(&grid)?;
        let dbar = DbarSolver::new(&grid)?;
        let k = g.k;
        let lp_g = ops.l_values(&g.coeffs, 1.0);
        let lm_g = ops.l_values(&g.coeffs, -1.0);
        let lap = ops.laplacian_values(&g.coeffs);
        let dlog = sample_dlog(p, &grid)?;
        let e_minus = angular_factor(&grid, -1.0);
        let mut w = lap.map(|v| v / (2.0 * k));
        scale_by_angle(&mut w, &grid, &e_minus);
        for (idx, v) in w.data.iter_mut().enumerate() {
            *v += lp_g.data[idx] * dlog.data[idx] / k;
        }
        Ok(Self { grid, ops, dbar, lp_g, lm_g, w, e_minus, k })
    }

    /// Lower-order part `e^{−iφ}(L₋g·L₊β + L₊g·L₋β)/(2k) + Wβ` of the operator.
    fn lower(&self, beta: &SpectralCoeffs) -> PolarField {
        let lp = self.ops.l_values(beta, 1.0);
        let lm = self.ops.l_values(beta, -1.0);
        let vals = self.ops.to_values(beta);
        let inv2k = 1.0 / (2.0 * self.k);
        let mut out = PolarField::zeros(&self.grid);
        for (idx, v) in out.data.iter_mut().enumerate() {
            *v = (self.lm_g.data[idx] * lp.data[idx] + self.lp_g.data[idx] * lm.data[idx]) * inv2k;
        }
        scale_by_angle(&mut out, &self.grid, &self.e_minus);
        for (idx, v) in out.data.iter_mut().enumerate() {
            *v += self.w.data[idx] * vals.data[idx];
        }
        out
    }

    fn rows_of(&self, h: &PolarField) -> SpectralCoeffs {
        let mut rows = self.ops.weight_rows(h);
        self.dbar.zero_tau(&mut rows);
        rows
    }

    /// Pointwise residual of the full equation for `α = 1 + β`.
    fn residual(&self, beta: &SpectralCoeffs) -> PolarField {
        let mut res = self.lower(beta);
        let lp = self.ops.l_values(beta, 1.0);
        for (idx, v) in res.data.iter_mut().enumerate() {
            *v += lp.data[idx] + self.w.data[idx];
        }
        res
    }
}

/// Solution of the amplitude equation on the eikonal grid.
#[derive(Clone, Debug)]
pub struct Alpha0 {
    /// Coefficients of `α₀` (the constant 1 included).
    pub coeffs: SpectralCoeffs,
    pub gmres_iterations: usize,
    /// Sup of the equation residual over nodes with `r ≥ 0.1`.
    pub residual_sup: f64,
}

/// Solve for `α₀` with `α₀ → 1` at infinity given an eikonal solution for `A`.
pub fn solve_alpha0(g: &EikonalSolution, p: &Potential, tol: f64) -> Result<Alpha0> {
    if g.coeffs.max_abs() == 0.0 {
        // f = kz leaves k∂̄α = 0, so α ≡ 1
        let mut coeffs = SpectralCoeffs::zeros(&g.grid);
        for d in [INNER, OUTER] {
            coeffs.mode_mut(d, 0)[0] = ONE;
        }
        return Ok(Alpha0 { coeffs, gmres_iterations: 0, residual_sup: 0.0 });
    }
    let op = AlphaOperator::new(g, p)?;
    let (nc, n) = (op.grid.nc(), op.grid.n_phi());
    let rhs = op.rows_of(&op.w.map(|v| -v));
    let apply = |y: &[f64], out: &mut [f64]| {
        let beta = op.dbar.solve_rows(&SpectralCoeffs::from_real(nc, n, y));
        let rows = op.rows_of(&op.lower(&beta));
        for (idx, v) in rows.data.iter().enumerate() {
            out[2 * idx] = y[2 * idx] + v.re;
            out[2 * idx + 1] = y[2 * idx + 1] + v.im;
        }
    };
    let opts = GmresOptions { tol, restart: 80, max_iter: 800 };
    let sol = gmres(apply, &rhs.to_real(), None, &opts);
    if !sol.converged {
        return Err(Error::NoConvergence {
            iterations: sol.iterations,
            last_increment: sol.residuals.last().copied().unwrap_or(f64::NAN),
            history: sol.residuals,
        });
    }
    let beta = op.dbar.solve_rows(&SpectralCoeffs::from_real(nc, n, &sol.x));
    let res = op.residual(&beta);
    let mut residual_sup: f64 = 0.0;
    for d in 0..2 {
        for j in 0..=nc {
            let r = op.grid.radius(d, j);
            if r < 0.1 {
                continue;
            }
            for i in 0..n {
                residual_sup = residual_sup.max(res.get(d, j, i).norm());
            }
        }
    }
    let mut coeffs = beta;
    // the constant 1 is the first Chebyshev coefficient of mode 0 in both domains
    for d in [INNER, OUTER] {
        coeffs.mode_mut(d, 0)[0] += ONE;
    }
    Ok(Alpha0 { coeffs, gmres_iterations: sol.iterations, residual_sup })
}

/// Eikonal solution, amplitude and the derivatives of `f` on the polar grid.
#[derive(Clone, Debug)]
pub struct WKBLeadingOrder {
    pub eikonal: EikonalSolution,
    pub alpha0: SpectralCoeffs,
    pub k: Complex64,
    /// `∂f = k + ½e^{−iφ}L₋g` at the polar nodes.
    pub df: PolarField,
    /// `∂̄f = ½e^{iφ}L₊g` at the polar nodes.
    pub dbar_f: PolarField,
    lm_coeffs: SpectralCoeffs,
}

impl WKBLeadingOrder {
    pub fn new(eikonal: EikonalSolution, alpha0: SpectralCoeffs) -> Result<Self> {
        let grid = eikonal.grid.clone();
        if alpha0.nc() != grid.nc() || alpha0.n_phi() != grid.n_phi() {
            return Err(Error::InvalidArgument("α₀ and g live on different grids".into()));
        }
        let ops = PolarSpectral::new(&grid)?;
        let k = eikonal.k;
        let mut df = ops.l_values(&eikonal.coeffs, -1.0).map(|v| 0.5 * v);
        scale_by_angle(&mut df, &grid, &angular_factor(&grid, -1.0));
        df = df.map(|v| v + k);
        let mut dbar_f = ops.l_values(&eikonal.coeffs, 1.0).map(|v| 0.5 * v);
        scale_by_angle(&mut dbar_f, &grid, &angular_factor(&grid, 1.0));
        let lm_coeffs = ops.l_coeffs(&eikonal.coeffs, -1.0);
        Ok(Self { eikonal, alpha0, k, df, dbar_f, lm_coeffs })
    }

    /// Solve both problems in sequence.
    pub fn solve(eikonal: EikonalSolution, p: &Potential, tol: f64) -> Result<Self> {
        let a = solve_alpha0(&eikonal, p, tol)?;
        Self::new(eikonal, a.coeffs)
    }

    pub fn grid(&self) -> &PolarGrid {
        &self.eikonal.grid
    }

    /// `max |(2∂̄f)(2∂f) − A²|` over the finite polar nodes off the origin.
    pub fn singularity_residual(&self, p: &Potential) -> f64 {
        let grid = self.grid();
        let a = sample_amplitude(p, grid);
        let mut sup: f64 = 0.0;
        for d in 0..2 {
            for j in 0..=grid.nc() {
                if d == INNER && j == grid.nc() {
                    continue;
                }
                for i in 0..grid.n_phi() {
                    let v = 4.0 * self.dbar_f.get(d, j, i) * self.df.get(d, j, i) - a.get(d, j, i).powi(2);
                    sup = sup.max(v.norm());
                }
            }
        }
        sup
    }

    /// `max ‖M φ⁽⁰⁾‖ / ‖φ⁽⁰⁾‖` over the polar nodes off the origin, with
    /// `M = ½[[−2∂̄f, A], [A, −2∂f]]` and `φ⁽⁰⁾ = α₀/(2k)·(2∂f, A)`.
    pub fn kernel_residual(&self, p: &Potential) -> f64 {
        let grid = self.grid();
        let a = sample_amplitude(p, grid);
        let alpha = PolarSpectral::new(grid).expect("grid already validated").to_values(&self.alpha0);
        let mut worst: f64 = 0.0;
        for d in 0..2 {
            for j in 0..=grid.nc() {
                if d == INNER && j == grid.nc() {
                    continue;
                }
                for i in 0..grid.n_phi() {
                    let (df, dbf, av) = (self.df.get(d, j, i), self.dbar_f.get(d, j, i), a.get(d, j, i));
                    let s = alpha.get(d, j, i) / (2.0 * self.k);
                    let phi = [s * 2.0 * df, s * av];
                    let m_phi = [0.5 * (-2.0 * dbf * phi[0] + av * phi[1]), 0.5 * (av * phi[0] - 2.0 * df * phi[1])];
                    let nphi = (phi[0].norm_sqr() + phi[1].norm_sqr()).sqrt();
                    let nm = (m_phi[0].norm_sqr() + m_phi[1].norm_sqr()).sqrt();
                    if nphi > 0.0 {
                        worst = worst.max(nm / nphi);
                    }
                }
            }
        }
        worst
    }

    /// Values of `g`, `α₀`, `∂f` and `A` at the nodes of a Cartesian grid.
    pub fn on_cartesian(&self, p: &Potential, cart: &CartesianGrid) -> WkbOnGrid {
        let mut fields = interp_many(&[&self.eikonal.coeffs, &self.alpha0, &self.lm_coeffs], cart).into_iter();
        let g = fields.next().expect("three fields");
        let alpha0 = fields.next().expect("three fields");
        let lm = fields.next().expect("three fields");
        let k = self.k;
        let df = CartesianField::from_fn(cart, |x, y| {
            let i = ((x + cart.lx) / cart.hx()).round() as usize;
            let j = ((y + cart.ly) / cart.hy()).round() as usize;
            let phi = y.atan2(x);
            k + 0.5 * Complex64::from_polar(1.0, -phi) * lm.get(i, j)
        });
        let a = CartesianField::from_fn(cart, |x, y| Complex64::new(p.amplitude(x, y), 0.0));
        WkbOnGrid { grid: cart.clone(), k, g, alpha0, df, a }
    }
}

/// WKB ingredients sampled on a Cartesian grid.
#[derive(Clone, Debug)]
pub struct WkbOnGrid {
    pub grid: CartesianGrid,
    pub k: Complex64,
    pub g: CartesianField,
    pub alpha0: CartesianField,
    pub df: CartesianField,
    pub a: CartesianField,
}

/// Leading WKB term multiplied by `e^{−kz/ε}`:
/// `(α₀/(2k))·2∂f·e^{g/ε}` and `(α₀/(2k))·A·e^{g/ε}`.
pub fn assemble_wkb(w: &WkbOnGrid, eps: f64) -> Result<(CartesianField, CartesianField)> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("ε must be positive, got {eps}")));
    }
    let mut psi1 = CartesianField::zeros(&w.grid);
    let mut psi2 = CartesianField::zeros(&w.grid);
    for idx in 0..w.grid.len() {
        let e = (w.g.data[idx] / eps).exp();
        if !e.re.is_finite() || !e.im.is_finite() {
            let (i, j) = (idx % w.grid.nx, idx / w.grid.nx);
            return Err(Error::InvalidArgument(format!(
                "e^(g/ε) overflows at (x, y) = ({:.4}, {:.4})",
                w.grid.x(i),
                w.grid.y(j)
            )));
        }
        let s = w.alpha0.data[idx] / (2.0 * w.k) * e;
        psi1.data[idx] = s * 2.0 * w.df.data[idx];
        psi2.data[idx] = s * w.a.data[idx];
    }
    Ok((psi1, psi2))
}

/// `Δ₁ = |ψ₁e^{−f/ε} − α₀∂f/k|`, `Δ₂ = |ψ₂e^{−f/ε} − α₀A/(2k)|` on a Cartesian grid.
#[derive(Clone, Debug)]
pub struct DeltaFields {
    pub nx: usize,
    pub ny: usize,
    pub delta1: Vec<f64>,
    pub delta2: Vec<f64>,
    pub sup1: f64,
    pub sup2: f64,
}

/// Comparison fields from `psi1_scaled = e^{−kz/ε}ψ₁` and `psi2_scaled = e^{−kz/ε}ψ₂`.
pub fn delta_fields(psi1_scaled: &CartesianField, psi2_scaled: &CartesianField, w: &WkbOnGrid, eps: f64) -> Result<DeltaFields> {
    let (nx, ny) = (w.grid.nx, w.grid.ny);
    for f in [psi1_scaled, psi2_scaled] {
        if f.nx != nx || f.ny != ny {
            return Err(Error::InvalidArgument(format!("field is {}×{}, WKB grid is {nx}×{ny}", f.nx, f.ny)));
        }
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("ε must be positive, got {eps}")));
    }
    let mut delta1 = vec![0.0; nx * ny];
    let mut delta2 = vec![0.0; nx * ny];
    for idx in 0..nx * ny {
        let e = (-w.g.data[idx] / eps).exp();
        let alpha = w.alpha0.data[idx];
        delta1[idx] = (psi1_scaled.data[idx] * e - alpha * w.df.data[idx] / w.k).norm();
        delta2[idx] = (psi2_scaled.data[idx] * e - alpha * w.a.data[idx] / (2.0 * w.k)).norm();
    }
    let sup1 = delta1.iter().copied().fold(0.0, f64::max);
    let sup2 = delta2.iter().copied().fold(0.0, f64::max);
    Ok(DeltaFields { nx, ny, delta1, delta2, sup1, sup2 })
}

/// Evaluate the Chebyshev–Fourier sum of `coeffs` at every Cartesian node.
pub fn interp_polar_to_cartesian(coeffs: &SpectralCoeffs, cart: &CartesianGrid) -> CartesianField {
    interp_many(&[coeffs], cart).pop().expect("one field")
}

/// Evaluate several coefficient sets of the same shape at every Cartesian node, sharing the
/// Chebyshev and Fourier basis values between them.
pub fn interp_many(sets: &[&SpectralCoeffs], cart: &CartesianGrid) -> Vec<CartesianField> {
    let Some(first) = sets.first() else { return Vec::new() };
    let (nc, n_phi) = (first.nc(), first.n_phi());
    let modes: Vec<(usize, i64)> = (0..n_phi)
        .map(|i| (i, mode_of(i, n_phi)))
        .filter(|&(i, _)| sets.iter().any(|s| s.mode(INNER, i).iter().chain(s.mode(OUTER, i)).any(|c| *c != ZERO)))
        .collect();
    let rows: Vec<Vec<Vec<Complex64>>> = (0..cart.ny)
        .into_par_iter()
        .map(|j| {
            let y = cart.y(j);
            let mut t = vec![0.0; nc + 1];
            let mut out = vec![vec![ZERO; cart.nx]; sets.len()];
            for i in 0..cart.nx {
                let x = cart.x(i);
                let r = x.hypot(y);
                let phi = y.atan2(x);
                let (d, l) = if r <= 1.0 { (INNER, 2.0 * r - 1.0) } else { (OUTER, 2.0 / r - 1.0) };
                t[0] = 1.0;
                if nc >= 1 {
                    t[1] = l;
                }
                for m in 2..=nc {
                    t[m] = 2.0 * l * t[m - 1] - t[m - 2];
                }
                for &(mi, n) in &modes {
                    let e = Complex64::from_polar(1.0, n as f64 * phi);
                    for (s, o) in sets.iter().zip(out.iter_mut()) {
                        let c = s.mode(d, mi);
                        let v: Complex64 = c.iter().zip(&t).map(|(a, b)| a * b).sum();
                        o[i] += v * e;
                    }
                }
            }
            out
        })
        .collect();
    (0..sets.len())
        .map(|s| {
            let mut data = Vec::with_capacity(cart.len());
            for row in &rows {
                data.extend_from_slice(&row[s]);
            }
            CartesianField { nx: cart.nx, ny: cart.ny, data }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eikonal::solve_newton;
    use crate::oracles::{lorentzian_alpha0, lorentzian_g};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn lorentz_wkb() -> (WKBLeadingOrder, Alpha0) {
        let p = Potential::lorentzian();
        let g = PolarGrid::new(32, 50).unwrap();
        let sol = solve_newton(&p, c(1.0), &g, 1e-12, 20).unwrap();
        let a = solve_alpha0(&sol, &p, 1e-12).unwrap();
        (WKBLeadingOrder::new(sol, a.coeffs.clone()).unwrap(), a)
    }

    #[test]
    fn lorentzian_alpha0_matches_oracle() {
        let (w, a) = lorentz_wkb();
        let g = w.grid();
        let vals = PolarSpectral::new(g).unwrap().to_values(&w.alpha0);
        let mut err: f64 = 0.0;
        for d in 0..2 {
            for j in 0..=g.nc() {
                let r = g.radius(d, j);
                if !(0.1..=10.0).contains(&r) {
                    continue;
                }
                for (i, &phi) in g.angles().iter().enumerate() {
                    let want = lorentzian_alpha0(Complex64::from_polar(r, phi), c(1.0)).unwrap();
                    err = err.max((vals.get(d, j, i) - want).norm());
                }
            }
        }
        assert!(err < 1e-8, "{err}");
        assert!(a.residual_sup < 1e-8, "{}", a.residual_sup);
        // α₀ = 1 at infinity
        assert!((w.alpha0.eval(f64::INFINITY, 0.3) - 1.0).norm() < 1e-8);
        let p = Potential::lorentzian();
        assert!(w.singularity_residual(&p) < 1e-8);
        assert!(w.kernel_residual(&p) < 1e-8, "{}", w.kernel_residual(&p));
    }

    #[test]
    fn interpolation_matches_closed_form() {
        let (w, _) = lorentz_wkb();
        let cart = CartesianGrid::new(16, 16, 3.0, 3.0).unwrap();
        let f = interp_polar_to_cartesian(&w.eikonal.coeffs, &cart);
        for j in 0..16 {
            for i in 0..16 {
                let z = Complex64::new(cart.x(i), cart.y(j));
                assert!((f.get(i, j) - lorentzian_g(z, c(1.0))).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn interpolation_of_simple_modes() {
        let g = PolarGrid::new(6, 8).unwrap();
        let cart = CartesianGrid::new(8, 8, 2.0, 2.0).unwrap();
        let mut a = SpectralCoeffs::zeros(&g);
        a.set(INNER, 0, 0, ONE).unwrap();
        a.set(OUTER, 0, 0, ONE).unwrap();
        let f = interp_polar_to_cartesian(&a, &cart);
        assert!(f.data.iter().all(|v| (v - 1.0).norm() < 1e-15));
        let mut b = SpectralCoeffs::zeros(&g);
        b.set(INNER, -1, 2, ONE).unwrap();
        let fb = interp_polar_to_cartesian(&b, &cart);
        for j in 0..8 {
            for i in 0..8 {
                let (x, y) = (cart.x(i), cart.y(j));
                let r = x.hypot(y);
                let want = if r <= 1.0 {
                    let l = 2.0 * r - 1.0;
                    (2.0 * l * l - 1.0) * Complex64::from_polar(1.0, -y.atan2(x))
                } else {
                    ZERO
                };
                assert!((fb.get(i, j) - want).norm() < 1e-13);
            }
        }
        let sum = interp_many(&[&a, &b], &cart);
        let mut ab = a.clone();
        ab.axpy(ONE, &b);
        let fab = interp_polar_to_cartesian(&ab, &cart);
        for idx in 0..64 {
            assert!((sum[0].data[idx] + sum[1].data[idx] - fab.data[idx]).norm() < 1e-14);
        }
    }

    #[test]
    fn wkb_limits_and_deltas() {
        let (w, _) = lorentz_wkb();
        let p = Potential::lorentzian();
        let cart = CartesianGrid::new(16, 16, 40.0, 40.0).unwrap();
        let on = w.on_cartesian(&p, &cart);
        let (psi1, psi2) = assemble_wkb(&on, 0.25).unwrap();
        // the corner is far out; g decays only like 1/r so compare ψ₁e^{−f/ε} with 1
        assert!((psi1.get(0, 0) * (-on.g.get(0, 0) / 0.25).exp() - 1.0).norm() < 1e-3);
        assert!(psi2.get(0, 0).norm() < 1e-3);
        let d = delta_fields(&psi1, &psi2, &on, 0.25).unwrap();
        assert!(d.sup1 < 1e-12 && d.sup2 < 1e-12);
        assert!(delta_fields(&psi1, &CartesianField::zeros(&CartesianGrid::square(8).unwrap()), &on, 0.25).is_err());
        assert!(assemble_wkb(&on, 0.0).is_err());
    }

    #[test]
    fn zero_amplitude_gives_trivial_wkb() {
        let p = Potential::parse("expr:0").unwrap();
        let g = PolarGrid::new(8, 8).unwrap();
        let sol = solve_newton(&p, c(1.0), &g, 1e-10, 5).unwrap();
        let a = solve_alpha0(&sol, &p, 1e-12).unwrap();
        let w = WKBLeadingOrder::new(sol, a.coeffs).unwrap();
        let cart = CartesianGrid::new(8, 8, 2.0, 2.0).unwrap();
        let (psi1, psi2) = assemble_wkb(&w.on_cartesian(&p, &cart), 0.5).unwrap();
        assert!(psi2.max_abs() == 0.0);
        assert!(psi1.data.iter().all(|v| (v - 1.0).norm() < 1e-14));
    }
}
