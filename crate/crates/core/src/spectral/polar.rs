//! Two-domain Chebyshev–Fourier discretization of the plane in polar coordinates.
//!
//! Domain I covers `r ∈ [0,1]` with `r = (1+l)/2`, domain II covers `r ∈ [1,∞]` with
//! `s = 1/r = (1+l)/2`. A field is a set of samples at `(l_j, φ_i)` per domain; its
//! spectral form holds Chebyshev coefficients per Fourier mode per domain.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, LU};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::cheb::{self, ChebTransform};
use super::fourier::{derivative_mode, mode_of};
use crate::error::{Error, Result};

pub const INNER: usize = 0;
pub const OUTER: usize = 1;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct PolarGrid {
    nc: usize,
    n_phi: usize,
    l: Vec<f64>,
    phi: Vec<f64>,
}

impl PolarGrid {
    pub fn new(nc: usize, n_phi: usize) -> Result<Self> {
        if n_phi < 2 || n_phi % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "number of angular nodes must be even and ≥ 2, got {n_phi}"
            )));
        }
        let l = cheb::cheb_nodes(nc)?;
        let phi = (0..n_phi).map(|i| 2.0 * PI * i as f64 / n_phi as f64).collect();
        Ok(Self { nc, n_phi, l, phi })
    }

    pub fn nc(&self) -> usize {
        self.nc
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn nodes(&self) -> &[f64] {
        &self.l
    }

    pub fn angles(&self) -> &[f64] {
        &self.phi
    }

    /// Number of complex samples (or coefficients) over both domains.
    pub fn len(&self) -> usize {
        2 * (self.nc + 1) * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Domain coordinate `(1+l_j)/2`: `r` in domain I, `s` in domain II.
    pub fn coordinate(&self, j: usize) -> f64 {
        0.5 * (1.0 + self.l[j])
    }

    /// Physical radius of node `j` in domain `d`; infinite at the outer end of domain II.
    pub fn radius(&self, d: usize, j: usize) -> f64 {
        let c = self.coordinate(j);
        if d == INNER {
            c
        } else if c == 0.0 {
            f64::INFINITY
        } else {
            1.0 / c
        }
    }

    pub fn mode(&self, i: usize) -> i64 {
        mode_of(i, self.n_phi)
    }

    pub fn nyquist(&self) -> usize {
        self.n_phi / 2
    }
}

/// Samples on the polar grid, indexed `(domain, radial node j, angle i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolarField {
    nc: usize,
    n_phi: usize,
    pub data: Vec<Complex64>,
}

impl PolarField {
    pub fn zeros(grid: &PolarGrid) -> Self {
        Self { nc: grid.nc, n_phi: grid.n_phi, data: vec![ZERO; grid.len()] }
    }

    /// Samples `f(r, φ)`; `r` is `+∞` at the outer node of domain II.
    pub fn from_fn(grid: &PolarGrid, mut f: impl FnMut(f64, f64) -> Complex64) -> Self {
        let mut out = Self::zeros(grid);
        for d in 0..2 {
            for j in 0..=grid.nc {
                let r = grid.radius(d, j);
                for i in 0..grid.n_phi {
                    let k = out.idx(d, j, i);
                    out.data[k] = f(r, grid.phi[i]);
                }
            }
        }
        out
    }

    #[inline]
    pub fn idx(&self, d: usize, j: usize, i: usize) -> usize {
        (d * (self.nc + 1) + j) * self.n_phi + i
    }

    pub fn get(&self, d: usize, j: usize, i: usize) -> Complex64 {
        self.data[self.idx(d, j, i)]
    }

    pub fn set(&mut self, d: usize, j: usize, i: usize, v: Complex64) {
        let k = self.idx(d, j, i);
        self.data[k] = v;
    }

    pub fn ring(&self, d: usize, j: usize) -> &[Complex64] {
        let k = self.idx(d, j, 0);
        &self.data[k..k + self.n_phi]
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Self { nc: self.nc, n_phi: self.n_phi, data }
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self { nc: self.nc, n_phi: self.n_phi, data: self.data.iter().map(|&a| f(a)).collect() }
    }

    /// Pointwise map with access to the node location.
    pub fn map_nodes(
        &self,
        grid: &PolarGrid,
        f: impl Fn(usize, usize, usize, Complex64) -> Complex64,
    ) -> Self {
        let mut out = self.clone();
        for d in 0..2 {
            for j in 0..=self.nc {
                for i in 0..self.n_phi {
                    let k = self.idx(d, j, i);
                    out.data[k] = f(d, j, i, self.data[k]);
                }
            }
            let _ = grid;
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Chebyshev coefficients per Fourier mode per domain, indexed `(domain, FFT index i, m)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralCoeffs {
    nc: usize,
    n_phi: usize,
    pub data: Vec<Complex64>,
}

impl SpectralCoeffs {
    pub fn zeros(grid: &PolarGrid) -> Self {
        Self::zeros_dims(grid.nc, grid.n_phi)
    }

    pub fn zeros_dims(nc: usize, n_phi: usize) -> Self {
        Self { nc, n_phi, data: vec![ZERO; 2 * (nc + 1) * n_phi] }
    }

    pub fn from_data(nc: usize, n_phi: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != 2 * (nc + 1) * n_phi {
            return Err(Error::InvalidArgument("coefficient array has wrong length".into()));
        }
        Ok(Self { nc, n_phi, data })
    }

    pub fn nc(&self) -> usize {
        self.nc
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    #[inline]
    pub fn idx(&self, d: usize, i: usize, m: usize) -> usize {
        (d * self.n_phi + i) * (self.nc + 1) + m
    }

    /// Coefficient of `T_m` in mode `n` (signed) of domain `d`; zero if the mode is not stored.
    pub fn get(&self, d: usize, n: i64, m: usize) -> Complex64 {
        match super::fourier::index_of(n, self.n_phi) {
            Some(i) => self.data[self.idx(d, i, m)],
            None => ZERO,
        }
    }

    pub fn set(&mut self, d: usize, n: i64, m: usize, v: Complex64) -> Result<()> {
        let i = super::fourier::index_of(n, self.n_phi)
            .ok_or_else(|| Error::InvalidArgument(format!("mode {n} not representable")))?;
        let k = self.idx(d, i, m);
        self.data[k] = v;
        Ok(())
    }

    pub fn mode(&self, d: usize, i: usize) -> &[Complex64] {
        let k = self.idx(d, i, 0);
        &self.data[k..k + self.nc + 1]
    }

    pub fn mode_mut(&mut self, d: usize, i: usize) -> &mut [Complex64] {
        let k = self.idx(d, i, 0);
        &mut self.data[k..k + self.nc + 1]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn axpy(&mut self, alpha: Complex64, x: &Self) {
        for (a, b) in self.data.iter_mut().zip(&x.data) {
            *a += alpha * b;
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Self { nc: self.nc, n_phi: self.n_phi, data }
    }

    /// Zero every coefficient with modulus below `tol`; returns how many were zeroed.
    pub fn filter(&mut self, tol: f64) -> usize {
        let mut count = 0;
        for v in self.data.iter_mut() {
            if *v != ZERO && v.norm() < tol {
                *v = ZERO;
                count += 1;
            }
        }
        count
    }

    /// Value at `l ∈ [−1,1]` of mode index `i` in domain `d`.
    pub fn mode_value(&self, d: usize, i: usize, l: f64) -> Complex64 {
        cheb::cheb_eval(self.mode(d, i), l)
    }

    /// Evaluate the Chebyshev–Fourier sum at `(r, φ)`; domain I for `r ≤ 1`, II otherwise.
    pub fn eval(&self, r: f64, phi: f64) -> Complex64 {
        let (d, l) = if r <= 1.0 {
            (INNER, 2.0 * r - 1.0)
        } else if r.is_infinite() {
            (OUTER, -1.0)
        } else {
            (OUTER, 2.0 / r - 1.0)
        };
        let mut acc = ZERO;
        for i in 0..self.n_phi {
            let c = self.mode_value(d, i, l);
            if c != ZERO {
                let n = mode_of(i, self.n_phi) as f64;
                acc += c * Complex64::from_polar(1.0, n * phi);
            }
        }
        acc
    }

    /// Largest mismatch `|a_n(r=1) − a_n(s=1)|` over modes.
    pub fn continuity_jump(&self) -> f64 {
        (0..self.n_phi)
            .map(|i| {
                let a: Complex64 = self.mode(INNER, i).iter().sum();
                let b: Complex64 = self.mode(OUTER, i).iter().sum();
                (a - b).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Stack as `[re, im, re, im, …]` for real-linear Krylov solvers.
    pub fn to_real(&self) -> Vec<f64> {
        self.data.iter().flat_map(|c| [c.re, c.im]).collect()
    }

    pub fn from_real(nc: usize, n_phi: usize, v: &[f64]) -> Self {
        let data = v.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect();
        Self { nc, n_phi, data }
    }
}

/// Grid transforms and coefficient-space operators on the polar grid.
#[derive(Clone)]
pub struct PolarSpectral {
    grid: PolarGrid,
    cheb: ChebTransform,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for PolarSpectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PolarSpectral").field("grid", &self.grid).finish()
    }
}

impl PolarSpectral {
    pub fn new(grid: &PolarGrid) -> Result<Self> {
        let mut planner = FftPlanner::new();
        Ok(Self {
            grid: grid.clone(),
            cheb: ChebTransform::new(grid.nc)?,
            fwd: planner.plan_fft_forward(grid.n_phi),
            inv: planner.plan_fft_inverse(grid.n_phi),
        })
    }

    pub fn grid(&self) -> &PolarGrid {
        &self.grid
    }

    pub fn to_coeffs(&self, f: &PolarField) -> SpectralCoeffs {
        let (nc, n) = (self.grid.nc, self.grid.n_phi);
        let mut out = SpectralCoeffs::zeros(&self.grid);
        let mut ring = vec![ZERO; n];
        let mut col = vec![ZERO; nc + 1];
        let mut tmp = vec![ZERO; nc + 1];
        let scale = 1.0 / n as f64;
        for d in 0..2 {
            // angular transform ring by ring, scattered into (i, j)
            let mut modes = vec![ZERO; n * (nc + 1)];
            for j in 0..=nc {
                ring.copy_from_slice(f.ring(d, j));
                self.fwd.process(&mut ring);
                for i in 0..n {
                    modes[i * (nc + 1) + j] = ring[i] * scale;
                }
            }
            for i in 0..n {
                col.copy_from_slice(&modes[i * (nc + 1)..(i + 1) * (nc + 1)]);
                self.cheb.fct_into(&col, &mut tmp);
                out.mode_mut(d, i).copy_from_slice(&tmp);
            }
        }
        out
    }

    pub fn to_values(&self, a: &SpectralCoeffs) -> PolarField {
        let (nc, n) = (self.grid.nc, self.grid.n_phi);
        let mut out = PolarField::zeros(&self.grid);
        let mut ring = vec![ZERO; n];
        let mut tmp = vec![ZERO; nc + 1];
        for d in 0..2 {
            let mut vals = vec![ZERO; n * (nc + 1)];
            for i in 0..n {
                self.cheb.ifct_into(a.mode(d, i), &mut tmp);
                vals[i * (nc + 1)..(i + 1) * (nc + 1)].copy_from_slice(&tmp);
            }
            for j in 0..=nc {
                for i in 0..n {
                    ring[i] = vals[i * (nc + 1) + j];
                }
                self.inv.process(&mut ring);
                let k = out.idx(d, j, 0);
                out.data[k..k + n].copy_from_slice(&ring);
            }
        }
        out
    }

    /// Mode-wise `(1+l)·d/dl + shift(domain, n)` on coefficients (exact, no truncation loss).
    pub fn euler(&self, a: &SpectralCoeffs, shift: impl Fn(usize, i64) -> f64) -> SpectralCoeffs {
        let n = self.grid.n_phi;
        let mut out = SpectralCoeffs::zeros(&self.grid);
        for d in 0..2 {
            for i in 0..n {
                let src = a.mode(d, i);
                let der = cheb::cheb_diff(src);
                let mut v = cheb::mult_by_shifted_l(&der, 1.0);
                let c = shift(d, derivative_mode(i, n));
                if c != 0.0 {
                    for (x, &y) in v.iter_mut().zip(src) {
                        *x += y * c;
                    }
                }
                out.mode_mut(d, i).copy_from_slice(&v);
            }
        }
        out
    }

    /// Divide domain-I coefficients by `r = (1+l)/2` (assumes each mode vanishes at `r = 0`).
    fn divide_inner_by_r(&self, a: &mut SpectralCoeffs) {
        for i in 0..self.grid.n_phi {
            let (q, _) = cheb::divide_by_shifted_l_unchecked(a.mode(INNER, i), 1.0);
            for (x, y) in a.mode_mut(INNER, i).iter_mut().zip(q) {
                *x = y * 2.0;
            }
        }
    }

    /// Scale domain-II samples by `factor(s)` pointwise.
    fn scale_outer(&self, f: &mut PolarField, factor: impl Fn(f64) -> f64) {
        for j in 0..=self.grid.nc {
            let s = self.grid.coordinate(j);
            let w = factor(s);
            for i in 0..self.grid.n_phi {
                let k = f.idx(OUTER, j, i);
                f.data[k] *= w;
            }
        }
    }

    /// Samples of `g_r ± (i/r) g_φ` (`sign = +1` gives `L₊ = 2e^{−iφ}∂̄`, `−1` gives `L₋ = 2e^{iφ}∂`).
    pub fn l_values(&self, a: &SpectralCoeffs, sign: f64) -> PolarField {
        // domain I: r·L± = (1+l)D ∓ n ;  domain II: L± = −s[(1+l)D ± n]
        let mut c = self.euler(a, |d, n| if d == INNER { -sign * n as f64 } else { sign * n as f64 });
        self.divide_inner_by_r(&mut c);
        let mut v = self.to_values(&c);
        self.scale_outer(&mut v, |s| -s);
        v
    }

    /// Coefficients of `L± g`.
    pub fn l_coeffs(&self, a: &SpectralCoeffs, sign: f64) -> SpectralCoeffs {
        self.to_coeffs(&self.l_values(a, sign))
    }

    /// Samples of the Laplacian `g_rr + g_r/r + g_φφ/r²`.
    pub fn laplacian_values(&self, a: &SpectralCoeffs) -> PolarField {
        // Δ = (∂_r + (n+1)/r) L₊ mode by mode
        let u = self.l_coeffs(a, 1.0);
        let mut c = self.euler(&u, |d, n| if d == INNER { n as f64 + 1.0 } else { -(n as f64 + 1.0) });
        self.divide_inner_by_r(&mut c);
        let mut v = self.to_values(&c);
        self.scale_outer(&mut v, |s| -s);
        v
    }

    /// Row-space image of the equation `L₊a = h`: coefficients of `r·h` (domain I) and
    /// `−r·h` (domain II). The value at `r = ∞` is taken as its limit 0.
    pub fn weight_rows(&self, h: &PolarField) -> SpectralCoeffs {
        let mut w = h.clone();
        for d in 0..2 {
            for j in 0..=self.grid.nc {
                let r = self.grid.radius(d, j);
                let fac = if d == INNER { r } else if r.is_infinite() { 0.0 } else { -r };
                for i in 0..self.grid.n_phi {
                    let k = w.idx(d, j, i);
                    w.data[k] = if fac == 0.0 { ZERO } else { w.data[k] * fac };
                }
            }
        }
        self.to_coeffs(&w)
    }
}

/// Which rows of a mode's two-domain system are replaced by matching conditions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TauRows {
    /// Nyquist mode: the solution is pinned to zero.
    Pinned,
    /// Continuity replaces the top row of domain I.
    InnerContinuity,
    /// Continuity replaces the top row of domain II.
    OuterContinuity,
    /// Continuity in domain I plus decay at `s = 0` in domain II.
    ContinuityAndDecay,
}

/// Mode-wise solver for `L₊a = h` (the ∂̄-problem `2∂̄a = e^{iφ}h`) with regularity at the
/// origin, decay at infinity and continuity across `r = 1`.
pub struct DbarSolver {
    grid: PolarGrid,
    lu: Vec<Option<LU<f64, nalgebra::Dyn, nalgebra::Dyn>>>,
    tau: Vec<TauRows>,
}

impl std::fmt::Debug for DbarSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DbarSolver").field("grid", &self.grid).field("tau", &self.tau).finish()
    }
}

impl DbarSolver {
    pub fn new(grid: &PolarGrid) -> Result<Self> {
        let nc = grid.nc;
        let n = grid.n_phi;
        let euler = cheb::mult_by_shifted_l_matrix(nc, 1.0) * cheb::cheb_diff_matrix(nc);
        let mut lu = Vec::with_capacity(n);
        let mut tau = Vec::with_capacity(n);
        for i in 0..n {
            if i == grid.nyquist() {
                lu.push(None);
                tau.push(TauRows::Pinned);
                continue;
            }
            let m = grid.mode(i);
            let t = Self::tau_for_mode(m);
            let mut a = DMatrix::zeros(2 * (nc + 1), 2 * (nc + 1));
            for r in 0..=nc {
                for c in 0..=nc {
                    a[(r, c)] = euler[(r, c)];
                    a[(nc + 1 + r, nc + 1 + c)] = euler[(r, c)];
                }
                a[(r, r)] -= m as f64;
                a[(nc + 1 + r, nc + 1 + r)] += m as f64;
            }
            let continuity = |a: &mut DMatrix<f64>, row: usize| {
                for c in 0..2 * (nc + 1) {
                    a[(row, c)] = if c <= nc { 1.0 } else { -1.0 };
                }
            };
            match t {
                TauRows::InnerContinuity => continuity(&mut a, nc),
                TauRows::OuterContinuity => continuity(&mut a, 2 * nc + 1),
                TauRows::ContinuityAndDecay => {
                    continuity(&mut a, nc);
                    for c in 0..2 * (nc + 1) {
                        a[(2 * nc + 1, c)] =
                            if c <= nc { 0.0 } else if (c - nc - 1) % 2 == 0 { 1.0 } else { -1.0 };
                    }
                }
                TauRows::Pinned => unreachable!(),
            }
            let f = a.lu();
            if !f.is_invertible() {
                return Err(Error::Singular(format!("∂̄ system for mode {m} is singular")));
            }
            lu.push(Some(f));
            tau.push(t);
        }
        Ok(Self { grid: grid.clone(), lu, tau })
    }

    /// Tau-row placement: the matching condition goes into the domain whose operator has
    /// the homogeneous solution `r^n` in its polynomial space.
    pub fn tau_for_mode(n: i64) -> TauRows {
        match n.signum() {
            1 => TauRows::InnerContinuity,
            -1 => TauRows::OuterContinuity,
            _ => TauRows::ContinuityAndDecay,
        }
    }

    pub fn grid(&self) -> &PolarGrid {
        &self.grid
    }

    pub fn tau(&self, i: usize) -> TauRows {
        self.tau[i]
    }

    /// Zero the rows that carry matching conditions (the right side of those rows is 0).
    pub fn zero_tau(&self, rows: &mut SpectralCoeffs) {
        let nc = self.grid.nc;
        for i in 0..self.grid.n_phi {
            match self.tau[i] {
                TauRows::Pinned => {
                    rows.mode_mut(INNER, i).fill(ZERO);
                    rows.mode_mut(OUTER, i).fill(ZERO);
                }
                TauRows::InnerContinuity => rows.mode_mut(INNER, i)[nc] = ZERO,
                TauRows::OuterContinuity => rows.mode_mut(OUTER, i)[nc] = ZERO,
                TauRows::ContinuityAndDecay => {
                    rows.mode_mut(INNER, i)[nc] = ZERO;
                    rows.mode_mut(OUTER, i)[nc] = ZERO;
                }
            }
        }
    }

    /// Apply the row operator: `r·L₊a` / `−r·L₊a` per domain with matching rows evaluated.
    pub fn apply_rows(&self, ops: &PolarSpectral, a: &SpectralCoeffs) -> SpectralCoeffs {
        let nc = self.grid.nc;
        let mut out = ops.euler(a, |d, n| if d == INNER { -(n as f64) } else { n as f64 });
        for i in 0..self.grid.n_phi {
            let inner: Complex64 = a.mode(INNER, i).iter().sum();
            let outer: Complex64 = a.mode(OUTER, i).iter().sum();
            let jump = inner - outer;
            match self.tau[i] {
                TauRows::Pinned => {
                    out.mode_mut(INNER, i).copy_from_slice(a.mode(INNER, i));
                    let src = a.mode(OUTER, i).to_vec();
                    out.mode_mut(OUTER, i).copy_from_slice(&src);
                }
                TauRows::InnerContinuity => out.mode_mut(INNER, i)[nc] = jump,
                TauRows::OuterContinuity => out.mode_mut(OUTER, i)[nc] = jump,
                TauRows::ContinuityAndDecay => {
                    out.mode_mut(INNER, i)[nc] = jump;
                    out.mode_mut(OUTER, i)[nc] = cheb::cheb_eval(a.mode(OUTER, i), -1.0);
                }
            }
        }
        out
    }

    /// Invert the row operator mode by mode.
    pub fn solve_rows(&self, rows: &SpectralCoeffs) -> SpectralCoeffs {
        let nc = self.grid.nc;
        let mut out = SpectralCoeffs::zeros(&self.grid);
        let n2 = 2 * (nc + 1);
        for i in 0..self.grid.n_phi {
            let Some(lu) = &self.lu[i] else { continue };
            let mut rhs = DMatrix::zeros(n2, 2);
            for (k, v) in rows.mode(INNER, i).iter().chain(rows.mode(OUTER, i)).enumerate() {
                rhs[(k, 0)] = v.re;
                rhs[(k, 1)] = v.im;
            }
            let x = lu.solve(&rhs).expect("factorization checked at construction");
            for k in 0..n2 {
                let v = Complex64::new(x[(k, 0)], x[(k, 1)]);
                if k <= nc {
                    out.mode_mut(INNER, i)[k] = v;
                } else {
                    out.mode_mut(OUTER, i)[k - nc - 1] = v;
                }
            }
        }
        out
    }

    /// Solve `L₊a = h` with `a → 0` at infinity.
    pub fn solve(&self, ops: &PolarSpectral, h: &PolarField) -> SpectralCoeffs {
        let mut rows = ops.weight_rows(h);
        self.zero_tau(&mut rows);
        self.solve_rows(&rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> (PolarGrid, PolarSpectral) {
        let g = PolarGrid::new(24, 16).unwrap();
        let ops = PolarSpectral::new(&g).unwrap();
        (g, ops)
    }

    #[test]
    fn transform_round_trip() {
        let (g, ops) = grid();
        let f = PolarField::from_fn(&g, |r, p| {
            let r = if r.is_infinite() { 1e300 } else { r };
            Complex64::new((2.0 * p).cos() / (1.0 + r * r), p.sin() * r / (1.0 + r * r))
        });
        let back = ops.to_values(&ops.to_coeffs(&f));
        let err = f.zip_map(&back, |a, b| a - b).max_abs();
        assert!(err < 1e-13, "{err}");
    }

    #[test]
    fn l_operators_on_smooth_mode() {
        // g = e^{-iφ} r/(1+r²): L₊g = 2e^{-iφ}/(1+r²)², L₋g = -2r² e^{-iφ}/(1+r²)²
        let (g, ops) = grid();
        let field = PolarField::from_fn(&g, |r, p| {
            if r.is_infinite() {
                return ZERO;
            }
            Complex64::from_polar(r / (1.0 + r * r), -p)
        });
        let a = ops.to_coeffs(&field);
        let lp = ops.l_values(&a, 1.0);
        let lm = ops.l_values(&a, -1.0);
        let want_p = PolarField::from_fn(&g, |r, p| {
            if r.is_infinite() {
                return ZERO;
            }
            Complex64::from_polar(2.0 / (1.0 + r * r).powi(2), -p)
        });
        let want_m = PolarField::from_fn(&g, |r, p| {
            if r.is_infinite() {
                return ZERO;
            }
            Complex64::from_polar(-2.0 * r * r / (1.0 + r * r).powi(2), -p)
        });
        assert!(lp.zip_map(&want_p, |a, b| a - b).max_abs() < 1e-10);
        assert!(lm.zip_map(&want_m, |a, b| a - b).max_abs() < 1e-10);
    }

    #[test]
    fn laplacian_of_gaussian_like_mode() {
        // g = 1/(1+r²): Δg = (4r² − 4)/(1+r²)³ … written as g'' + g'/r
        let (g, ops) = grid();
        let field = PolarField::from_fn(&g, |r, _| {
            if r.is_infinite() {
                return ZERO;
            }
            Complex64::new(1.0 / (1.0 + r * r), 0.0)
        });
        let lap = ops.laplacian_values(&ops.to_coeffs(&field));
        let want = PolarField::from_fn(&g, |r, _| {
            if r.is_infinite() {
                return ZERO;
            }
            Complex64::new((4.0 * r * r - 4.0) / (1.0 + r * r).powi(3), 0.0)
        });
        let err = lap.zip_map(&want, |a, b| a - b).max_abs();
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn dbar_solver_recovers_modes() {
        let (g, ops) = grid();
        let solver = DbarSolver::new(&g).unwrap();
        // a = e^{-iφ} r/(1+r²) + 1/(1+r²) + e^{iφ} r/(1+r²)²
        let a_exact = |r: f64, p: f64| {
            if r.is_infinite() {
                return ZERO;
            }
            let q = 1.0 + r * r;
            Complex64::from_polar(r / q, -p) + 1.0 / q + Complex64::from_polar(r / (q * q), p)
        };
        // L₊: mode n → a' − n a/r
        let h = |r: f64, p: f64| {
            if r.is_infinite() {
                return ZERO;
            }
            let q = 1.0 + r * r;
            let m1 = 2.0 / (q * q);
            let m0 = -2.0 * r / (q * q);
            let mp = (1.0 - 3.0 * r * r) / (q * q * q) - 1.0 / (q * q);
            Complex64::from_polar(m1, -p) + m0 + Complex64::from_polar(mp, p)
        };
        let hf = PolarField::from_fn(&g, h);
        let a = solver.solve(&ops, &hf);
        let want = ops.to_coeffs(&PolarField::from_fn(&g, a_exact));
        let err = a.max_abs_diff(&want);
        assert!(err < 1e-10, "{err}");
        assert!(a.continuity_jump() < 1e-12);
        // apply_rows inverts solve_rows
        let rows = solver.apply_rows(&ops, &a);
        let back = solver.solve_rows(&rows);
        assert!(back.max_abs_diff(&a) < 1e-12);
    }
}
