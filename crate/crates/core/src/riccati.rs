//! `k = 0` scattering for radial amplitudes with `S ≡ 0`.
//!
//! The ratio `X = w₂/(r w₁)` of the radial system `εr w₁' = A w₂`, `εr w₂' = r²A w₁` obeys
//!
//! ```text
//! εX' = −A X² − (ε/r) X + A,   X(r) ~ A(0) r/(2ε) as r → 0,
//! ```
//!
//! and the reflection coefficient is `R₀(0) = 2 lim rX`. The module also provides the
//! nullclines, the matching radius, the two-sided bounds on `R₀(0)` and the reconstruction of
//! `ψ` from `X`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{dopri5, find_root, integrate, integrate_to_infinity, OdeOptions};
use crate::potential::{Potential, PotentialKind};
use crate::spectral::{CartesianField, CartesianGrid};

/// Nullclines `X±` of the Riccati equation at radius `r > 0`.
pub fn nullclines(r: f64, eps: f64, p: &Potential) -> Result<(f64, f64)> {
    if !(r > 0.0) || eps < 0.0 {
        return Err(Error::InvalidArgument(format!("need r > 0 and ε ≥ 0, got r = {r}, ε = {eps}")));
    }
    let a = radial_amplitude(p, r)?;
    let e = eps / r;
    let root = (e * e + 4.0 * a * a).sqrt();
    // X₊ = 2A/(ε/r + √…) avoids cancellation when A ≪ ε/r
    let plus = if root == 0.0 { 0.0 } else { 2.0 * a / (e + root) };
    let minus = if a == 0.0 { f64::NEG_INFINITY } else { -(e + root) / (2.0 * a) };
    Ok((plus, minus))
}

fn radial_amplitude(p: &Potential, r: f64) -> Result<f64> {
    if !p.is_radial() {
        return Err(Error::InvalidArgument(format!("potential {p} is not radial")));
    }
    Ok(p.radial(r))
}

fn support_end(p: &Potential) -> Option<f64> {
    match p.kind() {
        PotentialKind::Disk { rho, .. } => Some(*rho),
        _ => None,
    }
}

/// Location and value of the maximum of `rA(r)` (coarse scan refined by golden section).
fn max_r_a(p: &Potential) -> (f64, f64) {
    if let Some(rho) = support_end(p) {
        return (rho, rho * p.radial(rho));
    }
    let f = |r: f64| r * p.radial(r);
    let (mut best_r, mut best) = (0.0, 0.0);
    let mut r = 1e-3;
    while r < 1e3 {
        let v = f(r);
        if v > best {
            best = v;
            best_r = r;
        }
        r *= 1.02;
    }
    let (mut a, mut b) = (best_r / 1.02, best_r * 1.02);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let r = 0.5 * (a + b);
    (r, f(r))
}

/// Largest root of `rA(r) = level` beyond the maximum of `rA`.
fn outer_root(p: &Potential, level: f64) -> Result<f64> {
    let (r_peak, peak) = max_r_a(p);
    if level >= peak {
        return Err(Error::InvalidArgument(format!(
            "level {level:.4e} is not below max rA = {peak:.4e}: no semiclassical regime"
        )));
    }
    let f = |r: f64| r * p.radial(r) - level;
    let mut hi = r_peak.max(1e-3) * 2.0;
    while f(hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e8 {
            return Err(Error::InvalidArgument("rA(r) does not decay".into()));
        }
    }
    find_root(f, r_peak, hi, 1e-14)
}

/// Matching radius: the support endpoint for compact support, otherwise the large root of
/// `rA(r) = ε`.
pub fn r_match(p: &Potential, eps: f64) -> Result<f64> {
    radial_amplitude(p, 1.0)?;
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("ε must be positive, got {eps}")));
    }
    if let Some(rho) = support_end(p) {
        let (_, peak) = max_r_a(p);
        if eps >= peak {
            return Err(Error::InvalidArgument(format!("ε = {eps} is not below max rA = {peak:.4e}")));
        }
        return Ok(rho);
    }
    outer_root(p, eps)
}

/// `r₀(ε)`: smallest positive root of `(A(r)/ε)(1 − r²) = 2`.
pub fn r0(p: &Potential, eps: f64) -> Option<f64> {
    let f = |r: f64| p.radial(r) / eps * (1.0 - r * r) - 2.0;
    if f(0.0) <= 0.0 {
        return None;
    }
    let mut r = 1e-3;
    while f(r) > 0.0 {
        r += 1e-3;
        if r > 1.0 {
            return None;
        }
    }
    find_root(f, r - 1e-3, r, 1e-14).ok()
}

/// `r₁(ε, δ)`: large root of `rA(r) = (ε/δ)(1−δ)/(2−δ)`.
pub fn r1(p: &Potential, eps: f64, delta: f64) -> Option<f64> {
    let level = eps / delta * (1.0 - delta) / (2.0 - delta);
    outer_root(p, level).ok()
}

/// `δ(ε) = 1/ln(1/ε)`.
pub fn delta_of(eps: f64) -> f64 {
    1.0 / (1.0 / eps).ln()
}

/// Integrated Riccati solution and derived quantities.
#[derive(Clone, Debug, Serialize)]
pub struct RiccatiSolution {
    pub eps: f64,
    /// Sample radii (increasing).
    pub r: Vec<f64>,
    /// `X` at the sample radii.
    pub x: Vec<f64>,
    /// `Y(r) = (1/ε)∫₀^r X A` at the sample radii.
    pub y: Vec<f64>,
    /// End of the integration; beyond it `X = C/r` with `C = r_end X(r_end)`.
    pub r_end: f64,
    /// `Y(∞)`, including the analytic tail beyond `r_end`.
    pub y_inf: f64,
    pub r_match: Option<f64>,
    pub r0: Option<f64>,
    pub r1: Option<f64>,
    pub delta: f64,
    /// `2 lim rX`.
    pub integrated: f64,
}

/// Tail radius beyond which `∫_r^∞ sA(s)/ε ds` is below `1e−15` (geometric search from `start`).
fn tail_radius(p: &Potential, eps: f64, start: f64) -> Result<f64> {
    let mut r = start.max(1.0);
    loop {
        let t = integrate_to_infinity(|s| s * p.radial(s) / eps, r, 1e-3)?;
        if t < 1e-15 {
            return Ok(r);
        }
        r *= 1.25;
        if r > 1e4 {
            return Err(Error::InvalidArgument("amplitude tail too heavy for the Riccati integration".into()));
        }
    }
}

/// Integrate the Riccati equation from its series start near `r = 0`.
///
/// `r_max` defaults to the larger of `3·r_Match` and the radius where the remaining tail
/// `∫ sA/ε` drops below `1e−15`; for compact support the integration stops at the support edge.
pub fn integrate_riccati(p: &Potential, eps: f64, r_max: Option<f64>, tol: f64) -> Result<RiccatiSolution> {
    let a0 = radial_amplitude(p, 0.0)?;
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("ε must be positive, got {eps}")));
    }
    if !(a0 > 0.0) {
        return Err(Error::InvalidArgument("A(0) must be positive".into()));
    }
    let rm = r_match(p, eps).ok();
    let end = match (support_end(p), r_max) {
        (Some(rho), Some(m)) => m.min(rho),
        (Some(rho), None) => rho,
        (None, Some(m)) => m,
        (None, None) => tail_radius(p, eps, 3.0 * rm.unwrap_or(1.0))?.max(3.0 * rm.unwrap_or(0.0)),
    };
    let r_start = (1e-6f64).min(eps * 1e-3) / a0;
    let x_start = a0 * r_start / (2.0 * eps);
    let y_start = a0 * x_start * r_start / (2.0 * eps);
    let opts = OdeOptions { rtol: tol, atol: tol * 1e-3, h0: r_start * 1e-2, max_steps: 5_000_000, ..Default::default() };
    let traj = dopri5(
        |r, s, ds| {
            let a = p.radial(r);
            ds[0] = (a * (1.0 - s[0] * s[0])) / eps - s[0] / r;
            ds[1] = s[0] * a / eps;
        },
        r_start,
        &[x_start, y_start],
        end,
        &opts,
    )
    .map_err(|e| {
        Error::Singular(format!("Riccati integration failed at ε = {eps} ({e}); desk scale needs ε ≥ 1e-4"))
    })?;
    let (r, x): (Vec<f64>, Vec<f64>) = traj.t.iter().zip(&traj.y).map(|(&r, s)| (r, s[0])).unzip();
    let y: Vec<f64> = traj.y.iter().map(|s| s[1]).collect();
    let (r_end, last) = traj.last();
    let c = r_end * last[0];
    // beyond r_end, X = C/r: the remaining part of Y is (C/ε)∫ A/s ds
    let y_tail = if support_end(p).is_some_and(|rho| r_end >= rho) {
        0.0
    } else {
        integrate_to_infinity(|s| c * p.radial(s) / (s * eps), r_end, 1e-12)?
    };
    let delta = delta_of(eps);
    Ok(RiccatiSolution {
        eps,
        r,
        x,
        y,
        r_end,
        y_inf: last[1] + y_tail,
        r_match: rm,
        r0: r0(p, eps),
        r1: if eps < 1.0 { r1(p, eps, delta) } else { None },
        delta,
        integrated: 2.0 * c,
    })
}

impl RiccatiSolution {
    /// `X(r)` by cubic Hermite interpolation between samples (series below the first sample,
    /// `C/r` beyond the last).
    pub fn x_at(&self, p: &Potential, r: f64) -> f64 {
        let n = self.r.len();
        if r <= self.r[0] {
            return self.x[0] * r / self.r[0];
        }
        if r >= self.r_end {
            return self.x[n - 1] * self.r_end / r;
        }
        let i = self.r.partition_point(|&t| t <= r) - 1;
        let slope = |j: usize| {
            let (rj, xj) = (self.r[j], self.x[j]);
            p.radial(rj) * (1.0 - xj * xj) / self.eps - xj / rj
        };
        hermite(self.r[i], self.r[i + 1], self.x[i], self.x[i + 1], slope(i), slope(i + 1), r)
    }

    /// `Y(r) = (1/ε)∫₀^r XA`, interpolated like `x_at`.
    pub fn y_at(&self, p: &Potential, r: f64) -> f64 {
        let n = self.r.len();
        if r <= self.r[0] {
            return self.y[0] * (r / self.r[0]).powi(2);
        }
        if r >= self.r_end {
            let c = self.x[n - 1] * self.r_end;
            let extra = integrate(|s| c * p.radial(s) / (s * self.eps), self.r_end, r, 1e-12).unwrap_or(0.0);
            return self.y[n - 1] + extra;
        }
        let i = self.r.partition_point(|&t| t <= r) - 1;
        let slope = |j: usize| self.x[j] * p.radial(self.r[j]) / self.eps;
        hermite(self.r[i], self.r[i + 1], self.y[i], self.y[i + 1], slope(i), slope(i + 1), r)
    }
}

fn hermite(t0: f64, t1: f64, y0: f64, y1: f64, d0: f64, d1: f64, t: f64) -> f64 {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let (s2, s3) = (s * s, s * s * s);
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * h * d0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * h * d1
}

/// Heuristic estimate `2r_Match`, the rigorous bounds and the integrated value of `R₀(0)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ReflectionK0 {
    pub eps: f64,
    pub estimate: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub integrated: f64,
}

pub fn reflection_k0(p: &Potential, eps: f64) -> Result<ReflectionK0> {
    let sol = integrate_riccati(p, eps, None, 1e-11)?;
    let estimate = sol.r_match.map(|r| 2.0 * r);
    let lower = sol.r1.map(|r1| 2.0 * (1.0 - sol.delta) * r1);
    let upper = match sol.r_match {
        Some(rm) => {
            let tail = if let Some(rho) = support_end(p) {
                integrate(|s| s * p.radial(s) / eps, rm, rho, 1e-13)?
            } else {
                integrate_to_infinity(|s| s * p.radial(s) / eps, rm, 1e-13)?
            };
            Some(2.0 * rm + 2.0 * tail)
        }
        None => None,
    };
    // the bounds are proved for small ε, δ and ε/δ only
    let valid = eps < 1.0 && lower.zip(upper).is_some_and(|(l, u)| l < u);
    Ok(ReflectionK0 {
        eps,
        estimate,
        lower: lower.filter(|_| valid),
        upper: upper.filter(|_| valid),
        integrated: sol.integrated,
    })
}

/// Largest violation of the four sandwich inequalities of the rigorous analysis over the
/// integration samples (0 when all hold). Requires `r₀`, `r₁` and `r_Match`.
pub fn sandwich_violation(sol: &RiccatiSolution, p: &Potential) -> Result<f64> {
    let (Some(r0), Some(r1), Some(rm)) = (sol.r0, sol.r1, sol.r_match) else {
        return Err(Error::InvalidArgument("sandwich bounds need r₀, r₁ and r_Match".into()));
    };
    let delta = sol.delta;
    let mut worst: f64 = 0.0;
    let mut phi5_int = 0.0;
    let mut prev = rm;
    for (&r, &x) in sol.r.iter().zip(&sol.x) {
        let (lo, hi) = if r <= r0 {
            (r, 1.0)
        } else if r <= r1 {
            (1.0 - delta, 1.0)
        } else if r <= rm {
            ((1.0 - delta) * r1 / r, 1.0)
        } else {
            phi5_int += integrate(|s| s * p.radial(s) / sol.eps, prev, r, 1e-13)?;
            prev = r;
            ((1.0 - delta) * r1 / r, (rm + phi5_int) / r)
        };
        worst = worst.max(lo - x).max(x - hi);
    }
    Ok(worst.max(0.0))
}

/// Radial `k = 0` solution on a Cartesian grid:
/// `ψ₁ = exp(−(1/ε)∫_r^∞ XA)` and `ψ₂ = e^{iφ}X ψ₁`.
pub fn riccati_to_psi(sol: &RiccatiSolution, p: &Potential, grid: &CartesianGrid) -> (CartesianField, CartesianField) {
    let psi1 = CartesianField::from_fn(grid, |x, y| {
        let r = x.hypot(y);
        Complex64::new((sol.y_at(p, r) - sol.y_inf).exp(), 0.0)
    });
    let mut psi2 = CartesianField::zeros(grid);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let (x, y) = (grid.x(i), grid.y(j));
            let r = x.hypot(y);
            let e = if r == 0.0 { Complex64::new(0.0, 0.0) } else { Complex64::new(x / r, y / r) };
            psi2.data[j * grid.nx + i] = e * sol.x_at(p, r) * psi1.get(i, j);
        }
    }
    (psi1, psi2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::{bessel_ratio_i1_i0, disk_reflection_k0};

    #[test]
    fn nullcline_values() {
        let g = Potential::gaussian();
        let (p, m) = nullclines(1.0, 0.1, &g).unwrap();
        let a = (-1.0f64).exp();
        let want = (-0.1 + (0.01 + 4.0 * a * a).sqrt()) / (2.0 * a);
        assert!((p - want).abs() < 1e-15);
        assert!((p * m + 1.0).abs() < 1e-14);
        let (p0, m0) = nullclines(0.7, 0.0, &g).unwrap();
        assert_eq!((p0, m0), (1.0, -1.0));
        let (ps, _) = nullclines(1e-6, 0.1, &g).unwrap();
        assert!((ps / 1e-5 - 1.0).abs() < 1e-9);
        let (pd, md) = nullclines(2.0, 0.1, &Potential::disk(1.0, 1.0).unwrap()).unwrap();
        assert_eq!(pd, 0.0);
        assert_eq!(md, f64::NEG_INFINITY);
    }

    #[test]
    fn matching_radius() {
        assert_eq!(r_match(&Potential::disk(1.5, 2.0).unwrap(), 0.1).unwrap(), 1.5);
        let eps = (-4.0f64).exp();
        let r = r_match(&Potential::gaussian(), eps).unwrap();
        // r² − ln r = 4
        assert!((r * r - r.ln() - 4.0).abs() < 1e-12);
        assert!((r - 2.187).abs() < 1e-3);
        assert!(r_match(&Potential::gaussian(), 0.5).is_err());
    }

    #[test]
    fn disk_matches_bessel() {
        let p = Potential::disk(1.0, 1.0).unwrap();
        for eps in [0.2, 0.1, 0.05] {
            let sol = integrate_riccati(&p, eps, None, 1e-12).unwrap();
            let want = disk_reflection_k0(1.0, 1.0, eps).unwrap();
            assert!(((sol.integrated - want) / want).abs() < 1e-6, "ε={eps}");
            for r in [0.1, 0.5, 0.9] {
                let x = sol.x_at(&p, r);
                assert!((x - bessel_ratio_i1_i0(r / eps)).abs() < 1e-8, "ε={eps} r={r}");
            }
            // exact C/r beyond the support
            assert!((sol.x_at(&p, 3.0) * 3.0 - sol.integrated / 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn gaussian_bounds_and_sandwich() {
        let p = Potential::gaussian();
        let mut last_ratio = 0.0;
        for eps in [1e-2, 1e-3, 1e-4] {
            let r = reflection_k0(&p, eps).unwrap();
            let (lo, hi) = (r.lower.unwrap(), r.upper.unwrap());
            assert!(lo < r.integrated && r.integrated < hi, "ε={eps}: {lo} {} {hi}", r.integrated);
            let ratio = r.integrated / (2.0 * (1.0 / eps).ln().sqrt());
            assert!(ratio > last_ratio && (0.6..=1.0).contains(&ratio), "ratio {ratio}");
            last_ratio = ratio;
        }
        let sol = integrate_riccati(&p, 1e-3, None, 1e-11).unwrap();
        assert!(sandwich_violation(&sol, &p).unwrap() < 1e-6);
        assert!(sol.x.iter().skip(1).all(|&x| x > 0.0 && x < 1.0));
    }

    #[test]
    fn riccati_matches_linear_system() {
        let p = Potential::gaussian();
        let eps = 0.1;
        let sol = integrate_riccati(&p, eps, None, 1e-12).unwrap();
        let r_s = 1e-4;
        let a0 = 1.0;
        let w = dopri5(
            |r, w, dw| {
                let a = p.radial(r);
                dw[0] = a * w[1] / (eps * r);
                dw[1] = r * a * w[0] / eps;
            },
            r_s,
            &[1.0 + a0 * a0 * r_s * r_s / (4.0 * eps * eps), a0 * r_s * r_s / (2.0 * eps)],
            3.0,
            &OdeOptions { rtol: 1e-12, atol: 1e-14, ..Default::default() },
        )
        .unwrap();
        for (r, s) in w.t.iter().zip(&w.y) {
            if *r < 1e-2 {
                continue;
            }
            let x = sol.x_at(&p, *r);
            assert!((x * r * s[0] - s[1]).abs() < 1e-8 * s[1].abs().max(1.0), "r={r}");
        }
    }

    #[test]
    fn psi_reconstruction_limits() {
        let p = Potential::gaussian();
        let sol = integrate_riccati(&p, 0.1, None, 1e-11).unwrap();
        let grid = CartesianGrid::new(32, 32, 20.0, 20.0).unwrap();
        let (psi1, psi2) = riccati_to_psi(&sol, &p, &grid);
        // corner is at r ≈ 28: ψ₁ → 1 and rψ₂ → R/2
        assert!((psi1.get(0, 0) - 1.0).norm() < 1e-10);
        let r = grid.x(0).hypot(grid.y(0));
        assert!((psi2.get(0, 0).norm() * r - sol.integrated / 2.0).abs() < 1e-8);
        assert!(r0(&Potential::parse("expr:0").unwrap(), 0.1).is_none());
    }
}
