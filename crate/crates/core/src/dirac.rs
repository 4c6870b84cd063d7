//! Direct scattering for the ε-dependent Dirac system at `t = 0`.
//!
//! With `m± = e^{−kz/ε}(ψ₁ ± ψ̄₂) − 1` each branch solves
//!
//! ```text
//! ∂̄m = (Q/2ε) E (m̄ + 1),   E = e^{(k̄z̄ − kz)/ε},   Q = ±q,
//! ```
//!
//! which in Fourier space reads `S = 𝒮 K₀ S + 𝒮 F` for `S = ξ·F{m}`. Splitting
//! `S = f + 𝒮h` with `h = K₀f + F` and eliminating `f` leaves the closed equation
//! `h = K₀(𝒮 K₀ 𝒮 h) + F`, solved here by GMRES on stacked real and imaginary parts. The
//! unknown is stored as the physical field `η = F⁻¹h`; every shift `𝒮` is then an exact
//! multiplication by `E`.
//!
//! Division by `ξ` uses a regularization: a Gaussian-weighted Taylor polynomial `G` in `ξ̄`
//! matching `S` at the origin is subtracted, `(S − G)/ξ` is inverted by FFT, and `F⁻¹{G/ξ}`
//! is added back in closed form.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{gmres_real_linear, GmresOptions};
use crate::potential::Potential;
use crate::spectral::fourier::index_of;
use crate::spectral::{CartesianField, CartesianGrid, Fourier2};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// How the derivatives `∂̄ξⁿS(0)` entering the regularization are estimated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DerivativeRule {
    /// Fourth-order centered finite differences on the frequency grid.
    Stencil,
    /// Exact derivatives of the discrete transform, i.e. moments of the physical field.
    Spectral,
}

impl std::str::FromStr for DerivativeRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stencil" => Ok(Self::Stencil),
            "spectral" => Ok(Self::Spectral),
            _ => Err(Error::Parse(format!("unknown derivative rule '{s}' (stencil, spectral)"))),
        }
    }
}

/// `F⁻¹{ξ̄ⁿ e^{−|ξ|²}/ξ} = i(2i)ⁿ n!/z^{n+1} · [1 − e^{−t} Σ_{j≤n} tʲ/j!]`, `t = |z|²/4`.
pub fn gauss_cauchy_kernel(n: usize, z: Complex64) -> Complex64 {
    let t = z.norm_sqr() / 4.0;
    let nf = factorial(n);
    let pre = I * (2.0 * I).powu(n as u32) * nf;
    if t < 1.0 {
        // bracket / t^{n+1} = e^{−t} Σ_{j≥0} tʲ/(j+n+1)!, which keeps z = 0 finite
        let mut term = 1.0 / factorial(n + 1);
        let mut sum = term;
        for j in 1..60 {
            term *= t / (j + n + 1) as f64;
            sum += term;
            if term < 1e-18 * sum {
                break;
            }
        }
        let ratio = (-t).exp() * sum;
        pre * z.conj().powu(n as u32 + 1) * ratio / 4f64.powi(n as i32 + 1)
    } else {
        let mut term = 1.0;
        let mut partial = 1.0;
        for j in 1..=n {
            term *= t / j as f64;
            partial += term;
        }
        let bracket = if t < (n + 1) as f64 {
            // upper tail of the exponential series is the accurate side here
            let mut term = term * t / (n + 1) as f64;
            let mut tail = term;
            for j in (n + 2)..(n + 200) {
                term *= t / j as f64;
                tail += term;
                if term < 1e-18 * tail {
                    break;
                }
            }
            (-t).exp() * tail
        } else {
            1.0 - (-t).exp() * partial
        };
        pre * bracket / z.powu(n as u32 + 1)
    }
}

/// `∂̄` of [`gauss_cauchy_kernel`]: `(i/4)(i z̄/2)ⁿ e^{−|z|²/4}`.
pub fn gauss_cauchy_kernel_dbar(n: usize, z: Complex64) -> Complex64 {
    0.25 * I * (0.5 * I * z.conj()).powu(n as u32) * (-z.norm_sqr() / 4.0).exp()
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|j| j as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Finite-difference weights for the `d`-th derivative at 0 on the nodes `xs` (Fornberg).
fn fd_weights(xs: &[f64], d: usize) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![vec![0.0; d + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0];
    for i in 1..n {
        let mn = i.min(d);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i];
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|row| row[d]).collect()
}

/// Centered fourth-order stencil for the `d`-th derivative: offsets and weights (unit spacing).
fn centered_stencil(d: usize) -> (Vec<i64>, Vec<f64>) {
    if d == 0 {
        return (vec![0], vec![1.0]);
    }
    let p = (d as i64 + 1) / 2 + 1;
    let offs: Vec<i64> = (-p..=p).collect();
    let xs: Vec<f64> = offs.iter().map(|&o| o as f64).collect();
    (offs, fd_weights(&xs, d))
}

/// Regularized inversion of `S ↦ F⁻¹{S/ξ}` on one grid.
#[derive(Debug)]
pub struct CauchyInverse {
    grid: CartesianGrid,
    fft: Fourier2,
    order: usize,
    rule: DerivativeRule,
    inv_xi: Vec<Complex64>,
    xi_bar: Vec<Complex64>,
    gauss: Vec<f64>,
    z: Vec<Complex64>,
    basis: Vec<Vec<Complex64>>,
}

/// Output of one regularized inversion.
#[derive(Clone, Debug)]
pub struct CauchyParts {
    /// `F⁻¹{S/ξ}` on the physical grid.
    pub value: Vec<Complex64>,
    /// Spectral samples of the regular part `(S − G)/ξ`.
    pub regular_hat: Vec<Complex64>,
    /// Taylor coefficients `∂̄ξⁿS(0)/n!` defining `G`.
    pub coeffs: Vec<Complex64>,
}

impl CauchyInverse {
    pub fn new(grid: &CartesianGrid, order: usize, rule: DerivativeRule) -> Result<Self> {
        let (nx, ny) = (grid.nx, grid.ny);
        if rule == DerivativeRule::Stencil {
            let need = order as i64 / 2 + 2;
            if (nx.min(ny) as i64) < 4 * need {
                return Err(Error::InvalidArgument(format!("grid too small for order-{order} stencils")));
            }
        }
        let mut inv_xi = vec![ZERO; nx * ny];
        let mut xi_bar = vec![ZERO; nx * ny];
        let mut gauss = vec![0.0; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                let xi = Complex64::new(grid.xi_x(i), grid.xi_y(j));
                let k = j * nx + i;
                xi_bar[k] = xi.conj();
                gauss[k] = (-xi.norm_sqr()).exp();
                if xi.norm_sqr() > 0.0 {
                    inv_xi[k] = 1.0 / xi;
                }
            }
        }
        let z: Vec<Complex64> =
            (0..nx * ny).map(|k| Complex64::new(grid.x(k % nx), grid.y(k / nx))).collect();
        let basis = (0..=order)
            .map(|n| z.par_iter().map(|&zz| gauss_cauchy_kernel(n, zz)).collect())
            .collect();
        Ok(Self { grid: grid.clone(), fft: Fourier2::new(grid), order, rule, inv_xi, xi_bar, gauss, z, basis })
    }

    pub fn grid(&self) -> &CartesianGrid {
        &self.grid
    }

    pub fn fft(&self) -> &Fourier2 {
        &self.fft
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Physical coordinates `z` of the grid nodes in storage order.
    pub fn nodes(&self) -> &[Complex64] {
        &self.z
    }

    fn spectral_at(&self, s_hat: &[Complex64], mx: i64, my: i64) -> Complex64 {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        match (index_of(mx, nx), index_of(my, ny)) {
            (Some(i), Some(j)) => s_hat[j * nx + i],
            _ => ZERO,
        }
    }

    // ∂ξx^a ∂ξy^b S(0) from tensor-product stencils
    fn partial_at_origin(&self, s_hat: &[Complex64], a: usize, b: usize) -> Complex64 {
        let (ox, wx) = centered_stencil(a);
        let (oy, wy) = centered_stencil(b);
        let mut acc = ZERO;
        for (&py, &cy) in oy.iter().zip(&wy) {
            for (&px, &cx) in ox.iter().zip(&wx) {
                acc += cx * cy * self.spectral_at(s_hat, px, py);
            }
        }
        acc / (self.grid.dxi_x().powi(a as i32) * self.grid.dxi_y().powi(b as i32))
    }

    /// Taylor data at `ξ = 0`: `∂̄ξⁿS(0)/n!` for `n ≤ M`, and `∂ξS(0)`.
    fn origin_data(&self, s_hat: &[Complex64], u: Option<&[Complex64]>) -> (Vec<Complex64>, Complex64) {
        let m = self.order;
        match (self.rule, u) {
            (DerivativeRule::Spectral, Some(u)) => {
                // ∂̄ξ acting on e^{−iξ·x} brings down −iz/2, ∂ξ brings down −iz̄/2
                let cell = self.grid.hx() * self.grid.hy() / (2.0 * PI);
                let mut coeffs = vec![ZERO; m + 1];
                let mut d = ZERO;
                for (&uk, &zk) in u.iter().zip(&self.z) {
                    let w = -0.5 * I * zk;
                    let mut p = uk;
                    for c in coeffs.iter_mut() {
                        *c += p;
                        p *= w;
                    }
                    d += uk * (-0.5 * I * zk.conj());
                }
                for (n, c) in coeffs.iter_mut().enumerate() {
                    *c *= cell / factorial(n);
                }
                // the zeroth moment equals the FFT value; use it so that (S − G)(0) = 0 exactly
                coeffs[0] = s_hat[0];
                (coeffs, d * cell)
            }
            _ => {
                let mut coeffs = vec![ZERO; m + 1];
                for (n, c) in coeffs.iter_mut().enumerate() {
                    // ∂̄ⁿ = 2⁻ⁿ Σ_j C(n,j) iʲ ∂xⁿ⁻ʲ ∂yʲ
                    let mut acc = ZERO;
                    for j in 0..=n {
                        acc += binomial(n, j) * I.powu(j as u32) * self.partial_at_origin(s_hat, n - j, j);
                    }
                    *c = acc / (2f64.powi(n as i32) * factorial(n));
                }
                let d = 0.5 * (self.partial_at_origin(s_hat, 1, 0) - I * self.partial_at_origin(s_hat, 0, 1));
                (coeffs, d)
            }
        }
    }

    /// `F⁻¹{S/ξ}` for spectral samples `S`.
    pub fn invert_spectral(&self, s_hat: &[Complex64]) -> CauchyParts {
        let u = match self.rule {
            DerivativeRule::Spectral => {
                let mut u = s_hat.to_vec();
                self.fft.inverse_in_place(&mut u);
                Some(u)
            }
            DerivativeRule::Stencil => None,
        };
        self.invert_with(s_hat.to_vec(), u.as_deref())
    }

    /// `F⁻¹{F{u}/ξ}` for a physical field `u`.
    pub fn invert_physical(&self, u: &[Complex64]) -> CauchyParts {
        let mut s = u.to_vec();
        self.fft.forward_in_place(&mut s);
        self.invert_with(s, Some(u))
    }

    fn invert_with(&self, mut s: Vec<Complex64>, u: Option<&[Complex64]>) -> CauchyParts {
        let (coeffs, d_origin) = self.origin_data(&s, u);
        let order = self.order;
        s.par_iter_mut().enumerate().for_each(|(k, v)| {
            let xb = self.xi_bar[k];
            let mut g = coeffs[order];
            for n in (0..order).rev() {
                g = g * xb + coeffs[n];
            }
            *v = (*v - g * self.gauss[k]) * self.inv_xi[k];
        });
        // the origin value of (S − G)/ξ is ∂ξS(0)
        s[0] = d_origin;
        let regular_hat = s.clone();
        self.fft.inverse_in_place(&mut s);
        s.par_iter_mut().enumerate().for_each(|(k, v)| {
            for (c, b) in coeffs.iter().zip(&self.basis) {
                *v += c * b[k];
            }
        });
        CauchyParts { value: s, regular_hat, coeffs }
    }

    /// `∂̄` of an inversion result, from the spectral regular part and the analytic `G` part.
    pub fn dbar_of(&self, parts: &CauchyParts) -> Vec<Complex64> {
        let mut d: Vec<Complex64> = parts
            .regular_hat
            .iter()
            .zip(&self.xi_bar)
            .map(|(v, xb)| 0.5 * I * xb.conj() * v)
            .collect();
        self.fft.inverse_in_place(&mut d);
        d.par_iter_mut().enumerate().for_each(|(k, v)| {
            for (n, c) in parts.coeffs.iter().enumerate() {
                *v += c * gauss_cauchy_kernel_dbar(n, self.z[k]);
            }
        });
        d
    }
}

/// `F⁻¹{S/ξ}` with regularization order `M`.
pub fn regularized_cauchy_inverse(
    grid: &CartesianGrid,
    s_hat: &CartesianField,
    order: i64,
    rule: DerivativeRule,
) -> Result<CartesianField> {
    if order < 0 {
        return Err(Error::InvalidArgument(format!("regularization order must be ≥ 0, got {order}")));
    }
    if s_hat.nx != grid.nx || s_hat.ny != grid.ny {
        return Err(Error::InvalidArgument("field does not match grid".into()));
    }
    let inv = CauchyInverse::new(grid, order as usize, rule)?;
    let parts = inv.invert_spectral(&s_hat.data);
    Ok(CartesianField { nx: grid.nx, ny: grid.ny, data: parts.value })
}

/// The modulation `E^{direction} = e^{±(k̄z̄ − kz)/ε}` on the grid.
pub fn modulation(grid: &CartesianGrid, k: Complex64, eps: f64, direction: i32) -> Vec<Complex64> {
    let nx = grid.nx;
    (0..grid.len())
        .map(|idx| {
            let (x, y) = (grid.x(idx % nx), grid.y(idx / nx));
            // (k̄z̄ − kz)/ε = −2i Im(kz)/ε
            let im_kz = k.re * y + k.im * x;
            Complex64::from_polar(1.0, -2.0 * direction as f64 * im_kz / eps)
        })
        .collect()
}

/// `f(ξ) ↦ f(ξ ± 2ik̄/ε)`, realized as a physical-space modulation.
pub fn apply_shift(
    grid: &CartesianGrid,
    field_hat: &CartesianField,
    k: Complex64,
    eps: f64,
    direction: i32,
) -> Result<CartesianField> {
    if direction != 1 && direction != -1 {
        return Err(Error::InvalidArgument(format!("shift direction must be ±1, got {direction}")));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("ε must be positive, got {eps}")));
    }
    let fft = Fourier2::new(grid);
    let mut u = field_hat.data.clone();
    fft.inverse_in_place(&mut u);
    for (v, e) in u.iter_mut().zip(modulation(grid, k, eps, direction)) {
        *v *= e;
    }
    fft.forward_in_place(&mut u);
    Ok(CartesianField { nx: grid.nx, ny: grid.ny, data: u })
}

/// One direct scattering problem.
#[derive(Clone, Debug)]
pub struct DiracProblem {
    pub potential: Potential,
    pub eps: f64,
    pub k: Complex64,
    pub grid: CartesianGrid,
    pub gmres: GmresOptions,
    pub reg_order: usize,
    pub rule: DerivativeRule,
    /// Refuse under-resolved smooth potentials instead of only warning.
    pub strict_resolution: bool,
}

impl DiracProblem {
    pub fn new(potential: Potential, eps: f64, k: Complex64, grid: CartesianGrid) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::InvalidArgument(format!("ε must be positive, got {eps}")));
        }
        if !(k.re.is_finite() && k.im.is_finite()) {
            return Err(Error::InvalidArgument("k must be finite".into()));
        }
        Ok(Self {
            potential,
            eps,
            k,
            grid,
            gmres: GmresOptions::default(),
            reg_order: 2,
            rule: DerivativeRule::Spectral,
            strict_resolution: true,
        })
    }

    /// Suggested grid size for `ε`; smaller `ε` needs finer grids.
    pub fn suggested_nx(eps: f64) -> usize {
        match eps {
            e if e >= 0.75 => 1 << 8,
            e if e >= 0.2 => 1 << 9,
            e if e >= 0.05 => 1 << 10,
            _ => 1 << 11,
        }
    }
}

/// Result of one branch `Q = ±q`.
#[derive(Clone, Debug)]
pub struct BranchSolution {
    pub m: CauchyParts,
    /// `(1/2π)∬ F⁻¹{S} dA = S(0)`.
    pub s_origin: Complex64,
    pub iterations: usize,
    pub residual: f64,
    pub history: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct DiracSolution {
    pub m_plus: CartesianField,
    pub m_minus: CartesianField,
    /// `e^{−kz/ε}ψ₁`.
    pub psi1_scaled: CartesianField,
    /// `e^{−kz/ε}ψ₂`.
    pub psi2_scaled: CartesianField,
    pub r0: Complex64,
    pub iterations: [usize; 2],
    pub residuals: [f64; 2],
    pub warnings: Vec<String>,
    pub branches: [BranchSolution; 2],
}

/// Shared operator data for one problem.
struct DiracOperator<'a> {
    inv: &'a CauchyInverse,
    e: Vec<Complex64>,
}

impl DiracOperator<'_> {
    // η ↦ −iw·conj(P(E·(−iw·conj(P(Eη))))) with w = Q/ε
    fn apply(&self, w: &[f64], eta: &[Complex64]) -> Vec<Complex64> {
        let (_, b) = self.half(w, eta);
        let u2: Vec<Complex64> = b.iter().zip(&self.e).map(|(b, e)| b * e).collect();
        let c = self.inv.invert_physical(&u2).value;
        c.iter().zip(w).map(|(c, &w)| -I * w * c.conj()).collect()
    }

    // P(Eη) and b = −iw·conj(P(Eη))
    fn half(&self, w: &[f64], eta: &[Complex64]) -> (CauchyParts, Vec<Complex64>) {
        let u1: Vec<Complex64> = eta.iter().zip(&self.e).map(|(v, e)| v * e).collect();
        let a = self.inv.invert_physical(&u1);
        let b = a.value.iter().zip(w).map(|(a, &w)| -I * w * a.conj()).collect();
        (a, b)
    }
}

fn stack(v: &[Complex64]) -> Vec<f64> {
    v.iter().map(|c| c.re).chain(v.iter().map(|c| c.im)).collect()
}

fn unstack(x: &[f64]) -> Vec<Complex64> {
    let n = x.len() / 2;
    (0..n).map(|k| Complex64::new(x[k], x[n + k])).collect()
}

fn solve_branch(op: &DiracOperator, w: &[f64], opts: &GmresOptions) -> Result<BranchSolution> {
    let n = w.len();
    let rhs_c: Vec<Complex64> = w.iter().map(|&w| -I * w).collect();
    let rhs = stack(&rhs_c);
    let out = gmres_real_linear(
        |x, y| {
            let eta = unstack(x);
            let t = op.apply(w, &eta);
            for k in 0..n {
                y[k] = x[k] - t[k].re;
                y[n + k] = x[n + k] - t[k].im;
            }
        },
        &rhs,
        opts,
    )?;
    let eta = unstack(&out.x);
    let (_, b) = op.half(w, &eta);
    // F⁻¹{S} = E·(b + η): the shifted K₀-term plus the shifted h
    let s_phys: Vec<Complex64> = b.iter().zip(&eta).zip(&op.e).map(|((b, h), e)| e * (b + h)).collect();
    let g = op.inv.grid();
    let s_origin = s_phys.iter().sum::<Complex64>() * g.hx() * g.hy() / (2.0 * PI);
    let m = op.inv.invert_physical(&s_phys);
    Ok(BranchSolution {
        m,
        s_origin,
        iterations: out.iterations,
        residual: out.residuals.last().copied().unwrap_or(0.0),
        history: out.residuals,
    })
}

/// Spectral tail of `(q/ε)E` relative to its peak (outer quarter of each frequency axis).
pub fn spectral_tail(prob: &DiracProblem) -> f64 {
    let g = &prob.grid;
    let e = modulation(g, prob.k, prob.eps, 1);
    let mut u: Vec<Complex64> = (0..g.len())
        .map(|idx| prob.potential.amplitude(g.x(idx % g.nx), g.y(idx / g.nx)) / prob.eps * e[idx])
        .collect();
    Fourier2::new(g).forward_in_place(&mut u);
    let peak = u.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return 0.0;
    }
    let (cx, cy) = (3 * g.nx as i64 / 8, 3 * g.ny as i64 / 8);
    let mut tail: f64 = 0.0;
    for j in 0..g.ny {
        let my = crate::spectral::fourier::mode_of(j, g.ny).abs();
        for i in 0..g.nx {
            let mx = crate::spectral::fourier::mode_of(i, g.nx).abs();
            if mx > cx || my > cy {
                tail = tail.max(u[j * g.nx + i].norm());
            }
        }
    }
    tail / peak
}

/// Solves both branches and assembles `m±`, the scaled `ψ` and `R`.
pub fn solve_dirac(prob: &DiracProblem) -> Result<DiracSolution> {
    let g = &prob.grid;
    let mut warnings = Vec::new();
    let tail = spectral_tail(prob);
    if tail > 1e-8 {
        let msg = format!(
            "spectral tail of q/ε·E is {tail:.1e} of its peak on {}×{}; try nx = {}",
            g.nx,
            g.ny,
            (2 * g.nx).max(DiracProblem::suggested_nx(prob.eps))
        );
        if prob.strict_resolution && prob.potential.is_smooth() {
            return Err(Error::Resolution(msg));
        }
        warnings.push(msg);
    }
    let inv = CauchyInverse::new(g, prob.reg_order, prob.rule)?;
    let op = DiracOperator { inv: &inv, e: modulation(g, prob.k, prob.eps, 1) };
    let q: Vec<f64> =
        (0..g.len()).map(|idx| prob.potential.amplitude(g.x(idx % g.nx), g.y(idx / g.nx))).collect();
    let branch = |sign: f64| -> Result<BranchSolution> {
        let w: Vec<f64> = q.iter().map(|a| sign * a / prob.eps).collect();
        solve_branch(&op, &w, &prob.gmres)
    };
    let plus = branch(1.0)?;
    let minus = branch(-1.0)?;
    let field = |data: Vec<Complex64>| CartesianField { nx: g.nx, ny: g.ny, data };
    let m_plus = field(plus.m.value.clone());
    let m_minus = field(minus.m.value.clone());
    let psi1 = field(m_plus.data.iter().zip(&m_minus.data).map(|(a, b)| 1.0 + 0.5 * (a + b)).collect());
    let psi2 = field(
        m_plus.data.iter().zip(&m_minus.data).zip(&op.e).map(|((a, b), e)| e * (0.5 * (a - b)).conj()).collect(),
    );
    warnings.extend(boundary_warning(&inv, &plus.m, "m+"));
    warnings.extend(boundary_warning(&inv, &minus.m, "m-"));
    let mut sol = DiracSolution {
        m_plus,
        m_minus,
        psi1_scaled: psi1,
        psi2_scaled: psi2,
        r0: ZERO,
        iterations: [plus.iterations, minus.iterations],
        residuals: [plus.residual, minus.residual],
        warnings,
        branches: [plus, minus],
    };
    sol.r0 = reflection_from_solution(&sol, prob);
    Ok(sol)
}

// m ~ R/(2z) by construction, so decay is checked on the regular part only
fn boundary_warning(inv: &CauchyInverse, m: &CauchyParts, name: &str) -> Option<String> {
    let g = inv.grid();
    let mut reg = m.regular_hat.clone();
    inv.fft().inverse_in_place(&mut reg);
    let interior = reg.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let edge = boundary_ring_max(g, &reg, 2);
    (interior > 0.0 && edge > 1e-3 * interior)
        .then(|| format!("{name}: regular part is {:.1e} of its maximum at the box boundary", edge / interior))
}

fn boundary_ring_max(g: &CartesianGrid, v: &[Complex64], width: usize) -> f64 {
    let mut edge: f64 = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let near = i < width || j < width || i >= g.nx - width || j >= g.ny - width;
            if near {
                edge = edge.max(v[j * g.nx + i].norm());
            }
        }
    }
    edge
}

/// `R = (1/π)∬(∂̄m₊ − ∂̄m₋) dA` with `∂̄m±` taken from the right-hand sides of the equations.
pub fn reflection_from_solution(sol: &DiracSolution, prob: &DiracProblem) -> Complex64 {
    let g = &prob.grid;
    let e = modulation(g, prob.k, prob.eps, 1);
    let mut acc = ZERO;
    for idx in 0..g.len() {
        let a = prob.potential.amplitude(g.x(idx % g.nx), g.y(idx / g.nx));
        if a == 0.0 {
            continue;
        }
        // ∂̄m₊ − ∂̄m₋ = (q/2ε)E(m̄₊ + m̄₋ + 2)
        let s = sol.m_plus.data[idx].conj() + sol.m_minus.data[idx].conj() + 2.0;
        acc += a / (2.0 * prob.eps) * e[idx] * s;
    }
    acc * g.hx() * g.hy() / PI
}

/// Relative residuals of `2ε∂̄ψ₁ = qψ₂` and `2ε∂ψ₂ = q̄ψ₁` on `|x|, |y| ≤ frac·L`.
pub fn equation_residual(sol: &DiracSolution, prob: &DiracProblem, frac: f64) -> Result<(f64, f64)> {
    let g = &prob.grid;
    let inv = CauchyInverse::new(g, prob.reg_order, prob.rule)?;
    let dp = inv.dbar_of(&sol.branches[0].m);
    let dm = inv.dbar_of(&sol.branches[1].m);
    let e = modulation(g, prob.k, prob.eps, 1);
    let (mut r1, mut r2, mut s1, mut s2): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for j in 0..g.ny {
        for i in 0..g.nx {
            let (x, y) = (g.x(i), g.y(j));
            if x.abs() > frac * g.lx || y.abs() > frac * g.ly {
                continue;
            }
            let k = j * g.nx + i;
            let a = prob.potential.amplitude(x, y);
            let (p1, p2) = (sol.psi1_scaled.data[k], sol.psi2_scaled.data[k]);
            // with ψ₁ = e^{kz/ε}P₁, ψ₂ = e^{kz/ε}E·conj(D), D = (m₊ − m₋)/2:
            // 2ε∂̄P₁ = qP₂ and 2εE·conj(∂̄D) = qP₁
            let lhs1 = prob.eps * (dp[k] + dm[k]);
            let lhs2 = prob.eps * e[k] * (dp[k] - dm[k]).conj();
            r1 = r1.max((lhs1 - a * p2).norm());
            r2 = r2.max((lhs2 - a * p1).norm());
            s1 = s1.max(lhs1.norm().max((a * p2).norm()));
            s2 = s2.max(lhs2.norm().max((a * p1).norm()));
        }
    }
    let rel = |r: f64, s: f64| if s > 0.0 { r / s } else { r };
    Ok((rel(r1, s1), rel(r2, s2)))
}
