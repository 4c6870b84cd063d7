//! Closed-form reference solutions: the Lorentzian eikonal solution and amplitude, Catalan
//! numbers, modified Bessel functions and the disk reflection coefficient at `k = 0`, and the
//! radial `k = 0` eikonal integral.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{integrate, integrate_to_infinity};
use crate::potential::{Potential, PotentialKind};
use crate::spectral::{PolarField, PolarGrid};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `W = z̄ / (k(1 + |z|²))`.
pub fn lorentzian_w(z: Complex64, k: Complex64) -> Complex64 {
    z.conj() / (k * (1.0 + z.norm_sqr()))
}

/// `g(W) = f − kz = ½ arcsin W + ((1 − W²)^{1/2} − 1)/(2W)`, written without the removable
/// singularity at `W = 0`.
pub fn lorentzian_g_of_w(w: Complex64) -> Complex64 {
    let s = (c(1.0) - w * w).sqrt();
    0.5 * w.asin() - w / (2.0 * (c(1.0) + s))
}

pub fn lorentzian_g(z: Complex64, k: Complex64) -> Complex64 {
    lorentzian_g_of_w(lorentzian_w(z, k))
}

/// The Lorentzian eikonal solution `f(z; k)` on principal branches.
pub fn lorentzian_f(z: Complex64, k: Complex64) -> Result<Complex64> {
    if k == c(0.0) {
        return Err(Error::InvalidArgument("k = 0".into()));
    }
    Ok(k * z + lorentzian_g(z, k))
}

/// True when `W` lies on one of the cuts `(−∞, −1] ∪ [1, ∞)` of the principal branches.
pub fn lorentzian_on_cut(z: Complex64, k: Complex64) -> bool {
    let w = lorentzian_w(z, k);
    w.im.abs() <= 1e-14 * w.norm().max(1.0) && w.re.abs() >= 1.0
}

/// One-sided limits of `g` across a cut, approaching from `Im W > 0` (`side = 1`) or `Im W < 0`.
pub fn lorentzian_g_one_sided(z: Complex64, k: Complex64, side: f64) -> Complex64 {
    let w = lorentzian_w(z, k);
    lorentzian_g_of_w(Complex64::new(w.re, side.signum() * 1e-300_f64.max(1e-15 * w.norm())))
}

/// `∂f = (k/2)(1 + (1 − W²)^{1/2})`.
pub fn lorentzian_df(z: Complex64, k: Complex64) -> Complex64 {
    let w = lorentzian_w(z, k);
    0.5 * k * (c(1.0) + (c(1.0) - w * w).sqrt())
}

/// `∂̄f = 1 / (2k(1 + (1 − W²)^{1/2})(1 + |z|²)²)`.
pub fn lorentzian_dbar_f(z: Complex64, k: Complex64) -> Complex64 {
    let w = lorentzian_w(z, k);
    let d = 1.0 + z.norm_sqr();
    c(1.0) / (2.0 * k * (c(1.0) + (c(1.0) - w * w).sqrt()) * d * d)
}

/// `α₀(W) = √2 ((1 − W²)^{1/2}(1 + (1 − W²)^{1/2}))^{−1/2}`.
pub fn lorentzian_alpha0_of_w(w: Complex64) -> Result<Complex64> {
    let s = (c(1.0) - w * w).sqrt();
    if s.norm() < 1e-300 {
        return Err(Error::Singular("W = ±1 is a branch point of the amplitude".into()));
    }
    Ok(std::f64::consts::SQRT_2 * (s * (c(1.0) + s)).sqrt().inv())
}

pub fn lorentzian_alpha0(z: Complex64, k: Complex64) -> Result<Complex64> {
    lorentzian_alpha0_of_w(lorentzian_w(z, k))
}

/// The four preimages of `W = ±1`, `±(1/(2k))(1 + σ(1 − 4|k|²)^{1/2})`, for `0 < |k| < 1/2`.
pub fn lorentzian_branch_points(k: Complex64) -> Option<[Complex64; 4]> {
    let a = k.norm();
    if !(a > 0.0 && a < 0.5) {
        return None;
    }
    let root = (1.0 - 4.0 * a * a).sqrt();
    let base = c(1.0) / (2.0 * k);
    Some([base * (1.0 + root), base * (1.0 - root), -base * (1.0 + root), -base * (1.0 - root)])
}

/// Catalan number `C_n = (2n)!/((n+1)! n!)`, exact for `n ≤ 30`.
pub fn catalan(n: u32) -> Result<u64> {
    if n > 30 {
        return Err(Error::InvalidArgument(format!("C_{n} exceeds the exact range; use catalan_f64")));
    }
    let mut v: u128 = 1;
    for j in 0..n as u128 {
        v = v * 2 * (2 * j + 1) / (j + 2);
    }
    Ok(v as u64)
}

/// Catalan number in floating point, valid well beyond the exact range.
pub fn catalan_f64(n: u32) -> f64 {
    let mut v = 1.0;
    for j in 0..n {
        let j = j as f64;
        v *= 2.0 * (2.0 * j + 1.0) / (j + 2.0);
    }
    v
}

/// `Σ_{n=1}^{terms} 4^{−n} C_{n−1}/(2n − 1) W^{2n−1}`, the Taylor series of `g(W)`.
pub fn lorentzian_series(w: Complex64, terms: u32) -> Complex64 {
    let mut sum = c(0.0);
    let mut pw = w;
    let w2 = w * w;
    let mut coef = 0.25; // 4^{−n} C_{n−1} at n = 1
    for n in 1..=terms {
        sum += pw * (coef / (2.0 * n as f64 - 1.0));
        // C_n/C_{n−1} = 2(2n−1)/(n+1)
        coef *= 0.25 * 2.0 * (2.0 * n as f64 - 1.0) / (n as f64 + 1.0);
        pw *= w2;
    }
    sum
}

/// `I₀(x)` by its power series (all terms positive, accurate for moderate `x`).
pub fn bessel_i0(x: f64) -> f64 {
    bessel_series(x, 0)
}

/// `I₁(x)` by its power series.
pub fn bessel_i1(x: f64) -> f64 {
    bessel_series(x, 1)
}

fn bessel_series(x: f64, nu: u32) -> f64 {
    let q = 0.25 * x * x;
    let mut term = if nu == 0 { 1.0 } else { 0.5 * x };
    let mut sum = term;
    let mut j = 0.0;
    loop {
        j += 1.0;
        term *= q / (j * (j + nu as f64));
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

/// `I₁(x)/I₀(x)`: power series for `x ≤ 10`, Lentz continued fraction above.
pub fn bessel_ratio_i1_i0(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if x.abs() <= 10.0 {
        return bessel_i1(x) / bessel_i0(x);
    }
    bessel_ratio_cf(x)
}

// I₁/I₀ = 1/(2/x + 1/(4/x + 1/(6/x + …)))
pub(crate) fn bessel_ratio_cf(x: f64) -> f64 {
    let tiny = 1e-300;
    let mut f = tiny;
    let mut cc = f;
    let mut d = 0.0;
    let mut j = 1.0;
    loop {
        let b = 2.0 * j / x;
        d = b + d;
        if d == 0.0 {
            d = tiny;
        }
        cc = b + 1.0 / cc;
        if cc == 0.0 {
            cc = tiny;
        }
        d = 1.0 / d;
        let delta = cc * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 || j > 10_000.0 {
            break;
        }
        j += 1.0;
    }
    // the tiny seed stands in for a zero leading term, so f is the ratio itself
    f
}

/// Exact `k = 0` reflection coefficient of the disk potential: `2ρ I₁(A₀ρ/ε)/I₀(A₀ρ/ε)`.
pub fn disk_reflection_k0(rho: f64, a0: f64, eps: f64) -> Result<f64> {
    if !(rho > 0.0 && a0 > 0.0 && eps > 0.0) {
        return Err(Error::InvalidArgument("rho, a0 and eps must be positive".into()));
    }
    Ok(2.0 * rho * bessel_ratio_i1_i0(a0 * rho / eps))
}

/// Radial `k = 0` eikonal solution `F(m) = ±∫_{√m}^∞ a(s²) ds`.
pub fn radial_k0_eikonal(p: &Potential, sign: f64, m: f64) -> Result<f64> {
    let a = p
        .radial_profile()
        .ok_or_else(|| Error::InvalidArgument(format!("potential {p} is not radial")))?;
    if m < 0.0 {
        return Err(Error::InvalidArgument("m must be nonnegative".into()));
    }
    let r = m.sqrt();
    let v = match p.kind() {
        PotentialKind::Disk { rho, .. } => {
            if r >= *rho {
                0.0
            } else {
                integrate(|s| a(s * s), r, *rho, 1e-14)?
            }
        }
        _ => {
            let tail = integrate_to_infinity(|s| a(s * s), r, 1e-13)?;
            if !tail.is_finite() {
                return Err(Error::InvalidArgument("amplitude is not integrable along rays".into()));
            }
            tail
        }
    };
    Ok(sign.signum() * v)
}

/// Sup over the polar nodes of `|g − g_exact|` for the Lorentzian, with `g = 0` at `r = ∞`.
pub fn lorentzian_g_error(grid: &PolarGrid, values: &PolarField, k: Complex64) -> f64 {
    let mut err: f64 = 0.0;
    for d in 0..2 {
        for j in 0..=grid.nc() {
            let r = grid.radius(d, j);
            for (i, &phi) in grid.angles().iter().enumerate() {
                let want = if r.is_infinite() { c(0.0) } else { lorentzian_g(Complex64::from_polar(r, phi), k) };
                err = err.max((values.get(d, j, i) - want).norm());
            }
        }
    }
    err
}

/// Sup of `|α₀ − α₀_exact|` over the polar nodes with `r_min ≤ r ≤ r_max` (Lorentzian).
pub fn lorentzian_alpha0_error(
    grid: &PolarGrid,
    values: &PolarField,
    k: Complex64,
    r_min: f64,
    r_max: f64,
) -> Result<f64> {
    let mut err: f64 = 0.0;
    for d in 0..2 {
        for j in 0..=grid.nc() {
            let r = grid.radius(d, j);
            if !(r_min..=r_max).contains(&r) {
                continue;
            }
            for (i, &phi) in grid.angles().iter().enumerate() {
                let want = lorentzian_alpha0(Complex64::from_polar(r, phi), k)?;
                err = err.max((values.get(d, j, i) - want).norm());
            }
        }
    }
    Ok(err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ci(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn lorentzian_values() {
        let k = c(1.0);
        let g = lorentzian_g(ci(0.0, 1.0), k);
        // W = −i/2: g = ½ asin(−i/2) + (√(5/4) − 1)/(−i)
        let w = ci(0.0, -0.5);
        let direct = 0.5 * w.asin() + (1.25f64.sqrt() - 1.0) / (2.0 * w);
        assert!((g - direct).norm() < 1e-15);
        assert!((g - ci(0.0, -0.122_57)).norm() < 5e-6, "{g}");
        assert_eq!(lorentzian_g(c(0.0), k), c(0.0));
        assert!(lorentzian_g(ci(1e8, 3e8), k).norm() < 1e-8);
        let a = lorentzian_alpha0(ci(0.0, 1.0), k).unwrap();
        let s = 1.25f64.sqrt();
        assert!((a - c(2f64.sqrt() / (s * (1.0 + s)).sqrt())).norm() < 1e-15);
        assert!((lorentzian_alpha0_of_w(c(0.0)).unwrap() - 1.0).norm() < 1e-16);
        assert!(lorentzian_alpha0_of_w(c(1.0)).is_err());
        assert!(lorentzian_f(c(1.0), c(0.0)).is_err());
    }

    #[test]
    fn alpha0_quarter_power_blowup() {
        let ratio = |t: f64| {
            let w = c(1.0 - t);
            lorentzian_alpha0_of_w(w).unwrap().norm() * (1.0 - (1.0 - t) * (1.0 - t)).powf(0.25)
        };
        assert!((ratio(1e-6) - ratio(1e-8)).abs() < 1e-3);
    }

    #[test]
    fn eikonal_identity_at_random_points() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for k in [c(0.6), c(1.0), ci(1.0, 1.0)] {
            for _ in 0..1000 {
                let z = ci(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
                let lhs = lorentzian_dbar_f(z, k) * lorentzian_df(z, k);
                let want = 0.25 / (1.0 + z.norm_sqr()).powi(2);
                assert!((lhs - want).norm() <= 1e-12);
            }
        }
    }

    fn wirtinger(f: &dyn Fn(Complex64) -> Complex64, z: Complex64) -> (Complex64, Complex64) {
        // Richardson-extrapolated central differences in x and y
        let d = |h: f64| {
            let fx = (f(z + h) - f(z - h)) / (2.0 * h);
            let fy = (f(z + ci(0.0, h)) - f(z - ci(0.0, h))) / (2.0 * h);
            (fx, fy)
        };
        let h = 1e-3;
        let (ax, ay) = d(h);
        let (bx, by) = d(h / 2.0);
        let fx = (4.0 * bx - ax) / 3.0;
        let fy = (4.0 * by - ay) / 3.0;
        (0.5 * (fx - ci(0.0, 1.0) * fy), 0.5 * (fx + ci(0.0, 1.0) * fy))
    }

    #[test]
    fn alpha0_solves_transport_equation() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        let p = Potential::lorentzian();
        for k in [c(0.6), c(1.0), ci(1.0, 1.0)] {
            for _ in 0..50 {
                let z = ci(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
                let alpha = |z: Complex64| lorentzian_alpha0(z, k).unwrap();
                let (da, dba) = wirtinger(&alpha, z);
                let (ddbf, _) = wirtinger(&|z| lorentzian_dbar_f(z, k), z);
                let res = lorentzian_df(z, k) * dba
                    + lorentzian_dbar_f(z, k) * da
                    + (ddbf + lorentzian_dbar_f(z, k) * p.dlog(z.re, z.im)) * alpha(z);
                assert!(res.norm() < 1e-10, "k={k} z={z} res={}", res.norm());
            }
        }
    }

    #[test]
    fn branch_points() {
        assert!(lorentzian_branch_points(c(0.5)).is_none());
        let k = Complex64::from_polar(0.45, std::f64::consts::PI / 8.0);
        let pts = lorentzian_branch_points(k).unwrap();
        for p in pts {
            let w = lorentzian_w(p, k);
            assert!((w.re.abs() - 1.0).abs() < 1e-12 && w.im.abs() < 1e-12, "{w}");
        }
        assert!((pts[0].norm() * pts[1].norm() - 1.0).abs() < 1e-12);
        let near = lorentzian_branch_points(c(0.5 - 1e-9)).unwrap();
        assert!((near[0] - near[1]).norm() < 1e-3 && (near[0] - 1.0).norm() < 1e-3);
        assert!(lorentzian_on_cut(pts[0] * 1.0, k));
        let up = lorentzian_g_one_sided(c(0.0), c(1.0), 1.0);
        assert!(up.norm() < 1e-14);
    }

    #[test]
    fn catalan_numbers() {
        let first: Vec<u64> = (0..5).map(|n| catalan(n).unwrap()).collect();
        assert_eq!(first, vec![1, 1, 2, 5, 14]);
        let c4: u64 = (0..4).map(|l| catalan(l).unwrap() * catalan(3 - l).unwrap()).sum();
        assert_eq!(c4, 14);
        assert_eq!(catalan(30).unwrap(), 3_814_986_502_092_304);
        assert!(catalan(31).is_err());
        assert!((catalan_f64(30) / 3_814_986_502_092_304.0 - 1.0).abs() < 1e-14);
        let stirling = |n: u32| catalan_f64(n - 1) * 4f64.powi(-(n as i32)) * 4.0 * std::f64::consts::PI.sqrt() * (n as f64).powf(1.5);
        assert!((stirling(400) - 1.0).abs() < (stirling(40) - 1.0).abs());
        assert!((stirling(400) - 1.0).abs() < 2e-3);
    }

    #[test]
    fn series_matches_closed_form() {
        for w in [ci(0.45, 0.0), ci(0.0, 0.45), ci(0.3, -0.2), ci(-0.1, 0.4)] {
            let err = (lorentzian_series(w, 200) - lorentzian_g_of_w(w)).norm();
            assert!(err < 1e-10, "{w}: {err}");
        }
    }

    #[test]
    fn bessel_and_disk() {
        assert!((bessel_i0(1.0) - 1.266_065_877_752_008_4).abs() < 1e-15);
        assert!((bessel_i1(1.0) - 0.565_159_103_992_485_0).abs() < 1e-15);
        let r = disk_reflection_k0(1.0, 1.0, 1.0).unwrap();
        assert!((r - 0.892_78).abs() < 1e-5, "{r}");
        assert!((bessel_ratio_cf(10.0) - bessel_i1(10.0) / bessel_i0(10.0)).abs() < 1e-14);
        assert!((disk_reflection_k0(1.0, 1.0, 1e-4).unwrap() - 2.0).abs() < 1e-3);
        let small = disk_reflection_k0(1.0, 1e-6, 1.0).unwrap();
        assert!((small / 1e-6 - 1.0).abs() < 1e-6);
        assert!(disk_reflection_k0(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn radial_k0_examples() {
        let d = Potential::disk(2.0, 0.5).unwrap();
        let v = radial_k0_eikonal(&d, -1.0, 1.0).unwrap();
        assert!((v + 0.5 * (2.0 - 1.0)).abs() < 1e-14);
        assert_eq!(radial_k0_eikonal(&d, -1.0, 9.0).unwrap(), 0.0);
        let g = Potential::gaussian();
        for m in [0.0f64, 0.3, 1.0, 4.0] {
            let want = -std::f64::consts::PI.sqrt() / 2.0 * statrs::function::erf::erfc(m.sqrt());
            let got = radial_k0_eikonal(&g, -1.0, m).unwrap();
            assert!((got - want).abs() < 1e-9, "m={m} {got} {want}");
        }
        // (√π/2)·erfc(√0.3) to 15 digits, from an arbitrary-precision evaluation
        assert!((radial_k0_eikonal(&g, 1.0, 0.3).unwrap() - 0.388_679_655_624_904).abs() < 1e-14);
        assert!(radial_k0_eikonal(&g, 1.0, 100.0).unwrap().abs() < 1e-40);
        assert!(radial_k0_eikonal(&Potential::aniso_gaussian(), 1.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn w_symmetric_under_inversion(x in -4.0f64..4.0, y in -4.0f64..4.0) {
            prop_assume!(x * x + y * y > 1e-4);
            let z = ci(x, y);
            let zi = c(1.0) / z.conj();
            let k = ci(0.8, 0.3);
            prop_assert!((lorentzian_g(z, k) - lorentzian_g(zi, k)).norm() < 1e-14);
        }
    }
}
