//! General numerical building blocks: adaptive quadrature, bracketed roots, an adaptive
//! Dormand–Prince integrator, restarted GMRES over the reals and least-squares line fits.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

// Gauss–Kronrod 7/15 nodes and weights on [−1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for k in 0..7 {
        let x = h * XGK[k];
        let s = f(c - x) + f(c + x);
        kron += WGK[k] * s;
        if k % 2 == 1 {
            gauss += WG[k / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod quadrature of `f` over `[a, b]`; bisects the interval with the
/// largest error estimate until the total estimate drops below `tol · max(|I|, 1)`.
pub fn integrate(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    const MAX_INTERVALS: usize = 4000;
    let (v, e) = gk15(&mut f, a, b);
    let mut parts = vec![(a, b, v, e)];
    loop {
        let total: f64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if !total.is_finite() {
            return Err(Error::InvalidArgument("integrand is not finite".into()));
        }
        if err <= tol * total.abs().max(1.0) || parts.len() >= MAX_INTERVALS {
            return Ok(total);
        }
        let (worst, _) = parts
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        let (lo, hi, _, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(total);
        }
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
}

/// `∫_a^∞ f` through the map `x = a + t/(1 − t)`.
pub fn integrate_to_infinity(mut f: impl FnMut(f64) -> f64, a: f64, tol: f64) -> Result<f64> {
    let v = integrate(
        |t| {
            if t >= 1.0 {
                return 0.0;
            }
            let u = 1.0 - t;
            let y = f(a + t / u) / (u * u);
            if y.is_finite() {
                y
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        tol,
    )?;
    Ok(v)
}

/// Root of `f` in `[a, b]` by Brent's method; `f(a)` and `f(b)` must differ in sign.
pub fn find_root(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    let (mut a, mut b) = (a, b);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::InvalidArgument(format!("root not bracketed in [{a}, {b}]")));
    }
    if fa.abs() < fb.abs() {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut bisected = true;
    for _ in 0..200 {
        if fb == 0.0 || (b - a).abs() < tol * (1.0 + b.abs()) {
            return Ok(b);
        }
        let mut s = if fa != fc && fb != fc {
            a * fb * fc / ((fa - fb) * (fa - fc)) + b * fa * fc / ((fb - fa) * (fb - fc)) + c * fa * fb / ((fc - fa) * (fc - fb))
        } else {
            b - fb * (b - a) / (fb - fa)
        };
        let lo = (3.0 * a + b) / 4.0;
        let between = (s > lo.min(b)) && (s < lo.max(b));
        if !between
            || (bisected && (s - b).abs() >= (b - c).abs() / 2.0)
            || (!bisected && (s - b).abs() >= (c - d).abs() / 2.0)
        {
            s = 0.5 * (a + b);
            bisected = true;
        } else {
            bisected = false;
        }
        let fs = f(s);
        d = c;
        c = b;
        fc = fb;
        if fa.signum() != fs.signum() {
            b = s;
            fb = fs;
        } else {
            a = s;
            fa = fs;
        }
        if fa.abs() < fb.abs() {
            std::mem::swap(&mut a, &mut b);
            std::mem::swap(&mut fa, &mut fb);
        }
    }
    Ok(b)
}

/// Settings for [`dopri5`].
#[derive(Clone, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h0: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, h0: 1e-6, h_max: f64::INFINITY, max_steps: 1_000_000 }
    }
}

/// Accepted steps of an ODE integration.
#[derive(Clone, Debug, Default)]
pub struct OdeTrajectory {
    pub t: Vec<f64>,
    pub y: Vec<Vec<f64>>,
}

impl OdeTrajectory {
    pub fn last(&self) -> (f64, &[f64]) {
        (*self.t.last().unwrap(), self.y.last().unwrap())
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Adaptive Dormand–Prince 5(4) integration of `y' = f(t, y)` from `t0` to `t1`.
pub fn dopri5(
    mut f: impl FnMut(f64, &[f64], &mut [f64]),
    t0: f64,
    y0: &[f64],
    t1: f64,
    opts: &OdeOptions,
) -> Result<OdeTrajectory> {
    let n = y0.len();
    let dir = (t1 - t0).signum();
    let mut traj = OdeTrajectory { t: vec![t0], y: vec![y0.to_vec()] };
    if t0 == t1 {
        return Ok(traj);
    }
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut h = opts.h0.abs().min((t1 - t0).abs()).min(opts.h_max);
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut y5 = vec![0.0; n];
    f(t, &y, &mut k[0]);
    let mut steps = 0;
    while (t1 - t) * dir > 0.0 {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::NoConvergence { iterations: steps, last_increment: h, history: vec![t] });
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(Error::Singular(format!("step size underflow at t = {t}; the problem is too stiff")));
        }
        let last = (t + dir * h - t1) * dir >= 0.0;
        if last {
            h = (t1 - t).abs();
        }
        let hs = dir * h;
        let stage = |coef: &[(usize, f64)], k: &Vec<Vec<f64>>, out: &mut [f64]| {
            for i in 0..n {
                out[i] = y[i] + hs * coef.iter().map(|&(j, a)| a * k[j][i]).sum::<f64>();
            }
        };
        stage(&[(0, A21)], &k, &mut tmp);
        f(t + C2 * hs, &tmp, &mut k[1]);
        stage(&[(0, A31), (1, A32)], &k, &mut tmp);
        f(t + C3 * hs, &tmp, &mut k[2]);
        stage(&[(0, A41), (1, A42), (2, A43)], &k, &mut tmp);
        f(t + C4 * hs, &tmp, &mut k[3]);
        stage(&[(0, A51), (1, A52), (2, A53), (3, A54)], &k, &mut tmp);
        f(t + C5 * hs, &tmp, &mut k[4]);
        stage(&[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)], &k, &mut tmp);
        f(t + hs, &tmp, &mut k[5]);
        stage(&[(0, B1), (2, B3), (3, B4), (4, B5), (5, B6)], &k, &mut y5);
        f(t + hs, &y5, &mut k[6]);
        let mut err: f64 = 0.0;
        for i in 0..n {
            let e = hs * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(y5[i].abs());
            err = err.max((e / sc).abs());
        }
        if !err.is_finite() {
            h *= 0.2;
            continue;
        }
        if err <= 1.0 {
            t = if last { t1 } else { t + hs };
            y.copy_from_slice(&y5);
            k.swap(0, 6);
            traj.t.push(t);
            traj.y.push(y.clone());
        }
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h = (h * if err <= 1.0 { fac } else { fac.min(1.0) }).min(opts.h_max);
    }
    Ok(traj)
}

/// Settings for [`gmres`].
#[derive(Clone, Debug)]
pub struct GmresOptions {
    pub tol: f64,
    pub restart: usize,
    pub max_iter: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self { tol: 1e-10, restart: 50, max_iter: 400 }
    }
}

#[derive(Clone, Debug)]
pub struct GmresOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Relative residual `‖Ax − b‖/‖b‖` after each inner iteration.
    pub residuals: Vec<f64>,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Restarted GMRES for a real-linear operator `apply(x, out)`; returns the best iterate even
/// without convergence.
pub fn gmres(
    mut apply: impl FnMut(&[f64], &mut [f64]),
    rhs: &[f64],
    x0: Option<&[f64]>,
    opts: &GmresOptions,
) -> GmresOutcome {
    let n = rhs.len();
    let bnorm = norm(rhs);
    let mut x = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![0.0; n]);
    let mut residuals = Vec::new();
    if bnorm == 0.0 {
        return GmresOutcome { x: vec![0.0; n], iterations: 0, residuals: vec![0.0], converged: true };
    }
    let m = opts.restart.max(1);
    let mut iterations = 0;
    let mut w = vec![0.0; n];
    loop {
        apply(&x, &mut w);
        let r: Vec<f64> = rhs.iter().zip(&w).map(|(b, a)| b - a).collect();
        let beta = norm(&r);
        if beta / bnorm <= opts.tol {
            residuals.push(beta / bnorm);
            return GmresOutcome { x, iterations, residuals, converged: true };
        }
        if iterations >= opts.max_iter {
            return GmresOutcome { x, iterations, residuals, converged: false };
        }
        let mut v: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        v.push(r.iter().map(|ri| ri / beta).collect());
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut used = 0;
        for j in 0..m {
            apply(&v[j], &mut w);
            iterations += 1;
            // modified Gram–Schmidt
            for i in 0..=j {
                let hij = dot(&w, &v[i]);
                h[i][j] = hij;
                for (wk, vk) in w.iter_mut().zip(&v[i]) {
                    *wk -= hij * vk;
                }
            }
            let hn = norm(&w);
            h[j + 1][j] = hn;
            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let d = (h[j][j] * h[j][j] + h[j + 1][j] * h[j + 1][j]).sqrt();
            if d == 0.0 {
                used = j;
                break;
            }
            cs[j] = h[j][j] / d;
            sn[j] = h[j + 1][j] / d;
            h[j][j] = d;
            h[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            used = j + 1;
            let rel = g[j + 1].abs() / bnorm;
            residuals.push(rel);
            if rel <= opts.tol || iterations >= opts.max_iter || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|wk| wk / hn).collect());
        }
        // back substitution for the least-squares update
        let mut yk = vec![0.0; used];
        for i in (0..used).rev() {
            let s: f64 = (i + 1..used).map(|l| h[i][l] * yk[l]).sum();
            yk[i] = (g[i] - s) / h[i][i];
        }
        for (i, yi) in yk.iter().enumerate() {
            for (xk, vk) in x.iter_mut().zip(&v[i]) {
                *xk += yi * vk;
            }
        }
        if used == 0 {
            return GmresOutcome { x, iterations, residuals, converged: false };
        }
    }
}

/// GMRES that reports non-convergence as an error carrying the residual history.
pub fn gmres_real_linear(
    apply: impl FnMut(&[f64], &mut [f64]),
    rhs: &[f64],
    opts: &GmresOptions,
) -> Result<GmresOutcome> {
    let out = gmres(apply, rhs, None, opts);
    if out.converged {
        Ok(out)
    } else {
        Err(Error::NoConvergence {
            iterations: out.iterations,
            last_increment: out.residuals.last().copied().unwrap_or(f64::NAN),
            history: out.residuals,
        })
    }
}

/// Ordinary least squares `y ≈ X β` via SVD.
pub fn least_squares(design: &DMatrix<f64>, y: &[f64]) -> Result<Vec<f64>> {
    let rhs = DVector::from_column_slice(y);
    let svd = design.clone().svd(true, true);
    let beta = svd
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::Singular(format!("least squares: {e}")))?;
    Ok(beta.iter().copied().collect())
}

/// Straight-line fit `y ≈ slope·x + intercept`, returning `(slope, intercept, rms residual)`.
pub fn line_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidArgument("line fit needs at least two paired points".into()));
    }
    let design = DMatrix::from_fn(xs.len(), 2, |i, j| if j == 0 { xs[i] } else { 1.0 });
    let b = least_squares(&design, ys)?;
    let rms = (xs.iter().zip(ys).map(|(x, y)| (b[0] * x + b[1] - y).powi(2)).sum::<f64>() / xs.len() as f64).sqrt();
    Ok((b[0], b[1], rms))
}
