//! Uniform Cartesian grids, the continuous-normalization 2-D Fourier transform and the
//! Wiener-norm estimate.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use super::fourier::mode_of;
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Periodic box `[−Lx, Lx) × [−Ly, Ly)` with `Nx × Ny` nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct CartesianGrid {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl CartesianGrid {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if !nx.is_power_of_two() || !ny.is_power_of_two() || nx < 2 || ny < 2 {
            return Err(Error::InvalidArgument(format!("grid sizes must be powers of two, got {nx}×{ny}")));
        }
        if !(lx > 0.0 && ly > 0.0) {
            return Err(Error::InvalidArgument("box half-widths must be positive".into()));
        }
        Ok(Self { nx, ny, lx, ly })
    }

    /// Square grid on the default box `4[−π,π]²`.
    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n, 4.0 * PI, 4.0 * PI)
    }

    pub fn hx(&self) -> f64 {
        2.0 * self.lx / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        2.0 * self.ly / self.ny as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.lx + i as f64 * self.hx()
    }

    pub fn y(&self, j: usize) -> f64 {
        -self.ly + j as f64 * self.hy()
    }

    pub fn xi_x(&self, i: usize) -> f64 {
        PI / self.lx * mode_of(i, self.nx) as f64
    }

    pub fn xi_y(&self, j: usize) -> f64 {
        PI / self.ly * mode_of(j, self.ny) as f64
    }

    pub fn dxi_x(&self) -> f64 {
        PI / self.lx
    }

    pub fn dxi_y(&self) -> f64 {
        PI / self.ly
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of the physical node at the origin (the zero frequency sits at index `(0, 0)`).
    pub fn center(&self) -> (usize, usize) {
        (self.nx / 2, self.ny / 2)
    }
}

/// Complex samples on a Cartesian grid, row-major with `x` fastest: `data[j·Nx + i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CartesianField {
    pub nx: usize,
    pub ny: usize,
    pub data: Vec<Complex64>,
}

impl CartesianField {
    pub fn zeros(grid: &CartesianGrid) -> Self {
        Self { nx: grid.nx, ny: grid.ny, data: vec![ZERO; grid.len()] }
    }

    pub fn from_fn(grid: &CartesianGrid, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            let y = grid.y(j);
            for i in 0..grid.nx {
                data.push(f(grid.x(i), y));
            }
        }
        Self { nx: grid.nx, ny: grid.ny, data }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[j * self.nx + i]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.nx == other.nx && self.ny == other.ny
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Self { nx: self.nx, ny: self.ny, data }
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self { nx: self.nx, ny: self.ny, data: self.data.iter().map(|&a| f(a)).collect() }
    }
}

/// Unitary 2-D Fourier transform `F{u}(ξ) = (1/2π)∬u e^{−iξ·x}` realised by FFTs.
#[derive(Clone)]
pub struct Fourier2 {
    grid: CartesianGrid,
    fx: Arc<dyn Fft<f64>>,
    fy: Arc<dyn Fft<f64>>,
    ix: Arc<dyn Fft<f64>>,
    iy: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fourier2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fourier2").field("grid", &self.grid).finish()
    }
}

impl Fourier2 {
    pub fn new(grid: &CartesianGrid) -> Self {
        let mut p = FftPlanner::new();
        Self {
            grid: grid.clone(),
            fx: p.plan_fft_forward(grid.nx),
            fy: p.plan_fft_forward(grid.ny),
            ix: p.plan_fft_inverse(grid.nx),
            iy: p.plan_fft_inverse(grid.ny),
        }
    }

    pub fn grid(&self) -> &CartesianGrid {
        &self.grid
    }

    fn transform(&self, data: &mut [Complex64], row: &Arc<dyn Fft<f64>>, col: &Arc<dyn Fft<f64>>) {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        data.par_chunks_mut(nx).for_each(|r| row.process(r));
        let mut t = vec![ZERO; nx * ny];
        transpose(data, &mut t, nx, ny);
        t.par_chunks_mut(ny).for_each(|c| col.process(c));
        transpose(&t, data, ny, nx);
    }

    /// Physical samples → continuous Fourier transform at the dual frequencies.
    pub fn forward(&self, u: &CartesianField) -> CartesianField {
        let mut out = u.clone();
        self.forward_in_place(&mut out.data);
        out
    }

    pub fn forward_in_place(&self, data: &mut [Complex64]) {
        self.transform(data, &self.fx, &self.fy);
        let scale = self.grid.hx() * self.grid.hy() / (2.0 * PI);
        self.apply_checkerboard(data, scale);
    }

    /// Continuous Fourier samples → physical samples.
    pub fn inverse(&self, s: &CartesianField) -> CartesianField {
        let mut out = s.clone();
        self.inverse_in_place(&mut out.data);
        out
    }

    pub fn inverse_in_place(&self, data: &mut [Complex64]) {
        let scale = self.grid.dxi_x() * self.grid.dxi_y() / (2.0 * PI);
        self.apply_checkerboard(data, scale);
        self.transform(data, &self.ix, &self.iy);
    }

    // the box starts at −L, giving a factor (−1)^{i+j} against the plain DFT
    fn apply_checkerboard(&self, data: &mut [Complex64], scale: f64) {
        let nx = self.grid.nx;
        for (k, v) in data.iter_mut().enumerate() {
            let (i, j) = (k % nx, k / nx);
            *v *= if (i + j) % 2 == 0 { scale } else { -scale };
        }
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], nx: usize, ny: usize) {
    const B: usize = 32;
    for jb in (0..ny).step_by(B) {
        for ib in (0..nx).step_by(B) {
            for j in jb..(jb + B).min(ny) {
                for i in ib..(ib + B).min(nx) {
                    dst[i * ny + j] = src[j * nx + i];
                }
            }
        }
    }
}

/// Result of a Wiener-norm estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct WienerEstimate {
    pub norm: f64,
    /// Set when the field does not decay towards the box boundary.
    pub unreliable: bool,
}

/// `‖b‖_W = ∬|b̂| dξ` with `b̂ = (1/4π²)∬ b e^{−iξ·x} dx`.
pub fn wiener_norm_estimate(grid: &CartesianGrid, b: &CartesianField) -> WienerEstimate {
    let f = Fourier2::new(grid).forward(b);
    let cell = grid.dxi_x() * grid.dxi_y();
    let norm = f.data.iter().map(|v| v.norm() / (2.0 * PI)).sum::<f64>() * cell;
    let interior = b.max_abs();
    let mut edge: f64 = 0.0;
    for i in 0..grid.nx {
        edge = edge.max(b.get(i, 0).norm());
    }
    for j in 0..grid.ny {
        edge = edge.max(b.get(0, j).norm());
    }
    WienerEstimate { norm, unreliable: interior > 0.0 && edge > 1e-6 * interior }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_transform_matches_closed_form() {
        // F{e^{−|x|²}} = ½ e^{−|ξ|²/4}
        let g = CartesianGrid::square(128).unwrap();
        let f = Fourier2::new(&g);
        let u = CartesianField::from_fn(&g, |x, y| Complex64::new((-(x * x + y * y)).exp(), 0.0));
        let s = f.forward(&u);
        let mut err: f64 = 0.0;
        for j in 0..g.ny {
            for i in 0..g.nx {
                let (a, b) = (g.xi_x(i), g.xi_y(j));
                let want = 0.5 * (-(a * a + b * b) / 4.0).exp();
                err = err.max((s.get(i, j) - want).norm());
            }
        }
        assert!(err < 1e-12, "{err}");
        let back = f.inverse(&s);
        assert!(back.zip_map(&u, |a, b| a - b).max_abs() < 1e-14);
    }

    #[test]
    fn wiener_norm_examples() {
        let g = CartesianGrid::square(256).unwrap();
        let gauss = CartesianField::from_fn(&g, |x, y| Complex64::new((-2.0 * (x * x + y * y)).exp(), 0.0));
        let w = wiener_norm_estimate(&g, &gauss);
        assert!((w.norm - 1.0).abs() < 1e-6 && !w.unreliable, "{w:?}");
        let zero = CartesianField::zeros(&g);
        assert_eq!(wiener_norm_estimate(&g, &zero).norm, 0.0);
    }
}
