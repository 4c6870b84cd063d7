//! Chebyshev collocation nodes, fast cosine transform and coefficient-space operators.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Gauss–Lobatto nodes `l_j = cos(πj/Nc)`, `j = 0..=Nc`, running from 1 down to −1.
pub fn cheb_nodes(nc: usize) -> Result<Vec<f64>> {
    if nc == 0 {
        return Err(Error::InvalidArgument("Chebyshev degree must be at least 1".into()));
    }
    let mut l: Vec<f64> = (0..=nc)
        .map(|j| (std::f64::consts::PI * j as f64 / nc as f64).cos())
        .collect();
    // exact endpoints and midpoint
    l[0] = 1.0;
    l[nc] = -1.0;
    if nc % 2 == 0 {
        l[nc / 2] = 0.0;
    }
    Ok(l)
}

/// Transform between values at the Gauss–Lobatto nodes and Chebyshev coefficients.
///
/// Uses the even extension of length `2Nc` so both directions cost one FFT.
#[derive(Clone)]
pub struct ChebTransform {
    nc: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for ChebTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ChebTransform").field("nc", &self.nc).finish()
    }
}

impl ChebTransform {
    pub fn new(nc: usize) -> Result<Self> {
        if nc == 0 {
            return Err(Error::InvalidArgument("Chebyshev degree must be at least 1".into()));
        }
        let fft = FftPlanner::new().plan_fft_forward(2 * nc);
        Ok(Self { nc, fft })
    }

    pub fn nc(&self) -> usize {
        self.nc
    }

    fn even_extension_dft(&self, v: &[Complex64], out: &mut [Complex64]) {
        let nc = self.nc;
        let mut buf: Vec<Complex64> = Vec::with_capacity(2 * nc);
        buf.extend_from_slice(v);
        buf.extend(v[1..nc].iter().rev());
        self.fft.process(&mut buf);
        out.copy_from_slice(&buf[..=nc]);
    }

    /// Values at nodes → coefficients `b_m`, with `F(l) = Σ b_m T_m(l)`.
    pub fn fct(&self, values: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(values.len())?;
        let mut out = vec![Complex64::new(0.0, 0.0); self.nc + 1];
        self.fct_into(values, &mut out);
        Ok(out)
    }

    /// Coefficients → values at nodes.
    pub fn ifct(&self, coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(coeffs.len())?;
        let mut out = vec![Complex64::new(0.0, 0.0); self.nc + 1];
        self.ifct_into(coeffs, &mut out);
        Ok(out)
    }

    pub(crate) fn fct_into(&self, values: &[Complex64], out: &mut [Complex64]) {
        let nc = self.nc;
        self.even_extension_dft(values, out);
        let scale = 1.0 / nc as f64;
        for b in out.iter_mut() {
            *b *= scale;
        }
        out[0] *= 0.5;
        out[nc] *= 0.5;
    }

    pub(crate) fn ifct_into(&self, coeffs: &[Complex64], out: &mut [Complex64]) {
        let nc = self.nc;
        // F_j = Σ b_m cos(πjm/Nc) is the same cosine sum with endpoint weights undone
        let mut w: Vec<Complex64> = coeffs.to_vec();
        w[0] *= 2.0;
        w[nc] *= 2.0;
        self.even_extension_dft(&w, out);
        for v in out.iter_mut() {
            *v *= 0.5;
        }
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.nc + 1 {
            return Err(Error::InvalidArgument(format!(
                "expected {} Chebyshev samples, got {len}",
                self.nc + 1
            )));
        }
        Ok(())
    }
}

/// Coefficient-space differentiation matrix: maps coefficients of `F` to those of `dF/dl`.
pub fn cheb_diff_matrix(nc: usize) -> DMatrix<f64> {
    let n = nc + 1;
    let mut d = DMatrix::zeros(n, n);
    for j in 1..n {
        // T_j' = j·(2 Σ_{m<j, j−m odd} T_m), halved for m = 0
        let mut m = j as isize - 1;
        while m >= 0 {
            let w = if m == 0 { 1.0 } else { 2.0 };
            d[(m as usize, j)] = w * j as f64;
            m -= 2;
        }
    }
    d
}

/// Derivative coefficients via the backward recurrence `b_{m−1} = b_{m+1} + 2m a_m`.
pub fn cheb_diff(a: &[Complex64]) -> Vec<Complex64> {
    let n = a.len();
    let zero = Complex64::new(0.0, 0.0);
    let mut b = vec![zero; n];
    if n < 2 {
        return b;
    }
    let nc = n - 1;
    let mut next = zero; // b_{m+1}
    let mut cur = zero; // b_m
    for m in (1..=nc).rev() {
        let prev = next + a[m] * (2.0 * m as f64);
        b[m - 1] = prev;
        next = cur;
        cur = prev;
    }
    b[0] *= 0.5;
    b
}

/// Truncated matrix of multiplication by `(l + sign)`, `sign = ±1`.
///
/// Exact on polynomials of degree ≤ Nc−1.
pub fn mult_by_shifted_l_matrix(nc: usize, sign: f64) -> DMatrix<f64> {
    let n = nc + 1;
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        m[(j, j)] = sign;
        if j == 0 {
            if n > 1 {
                m[(1, 0)] = 1.0;
            }
        } else {
            m[(j - 1, j)] += 0.5;
            if j + 1 < n {
                m[(j + 1, j)] += 0.5;
            }
        }
    }
    m
}

/// Multiply coefficients by `(l + sign)`, truncating the top term.
pub fn mult_by_shifted_l(a: &[Complex64], sign: f64) -> Vec<Complex64> {
    let n = a.len();
    let mut out: Vec<Complex64> = a.iter().map(|&x| x * sign).collect();
    for j in 0..n {
        if j == 0 {
            if n > 1 {
                out[1] += a[0];
            }
        } else {
            out[j - 1] += a[j] * 0.5;
            if j + 1 < n {
                out[j + 1] += a[j] * 0.5;
            }
        }
    }
    out
}

/// Divide by `(l + sign)` by back substitution through the banded multiplication system.
///
/// Returns the quotient and the residual of the unused bottom row, which vanishes exactly
/// when the polynomial has a root at `l = −sign`.
pub fn divide_by_shifted_l_unchecked(b: &[Complex64], sign: f64) -> (Vec<Complex64>, Complex64) {
    let n = b.len();
    let zero = Complex64::new(0.0, 0.0);
    let mut g = vec![zero; n];
    if n < 2 {
        return (g, b.first().copied().unwrap_or(zero));
    }
    let nc = n - 1;
    // rows m = nc..1 of (l+σ)G = B with g_nc = 0
    for m in (1..=nc).rev() {
        let gm = if m < nc { g[m] } else { zero };
        let gm1 = if m + 1 < nc { g[m + 1] } else { zero };
        if m >= 2 {
            g[m - 1] = (b[m] - gm * sign - gm1 * 0.5) * 2.0;
        } else {
            g[0] = b[1] - gm * sign - gm1 * 0.5;
        }
    }
    let row0 = g[0] * sign + if nc >= 2 { g[1] * 0.5 } else { zero };
    (g, b[0] - row0)
}

/// Checked division by `(l + sign)`; fails when the input has no root at `l = −sign`.
pub fn divide_by_shifted_l(b: &[Complex64], sign: f64) -> Result<Vec<Complex64>> {
    let (g, defect) = divide_by_shifted_l_unchecked(b, sign);
    let scale = b.iter().map(|x| x.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    if defect.norm() > 1e-10 * scale {
        return Err(Error::Singular(format!(
            "division by (l{:+}) of a polynomial that does not vanish at l={}",
            sign,
            -sign
        )));
    }
    Ok(g)
}

/// Clenshaw evaluation of `Σ b_m T_m(l)`.
pub fn cheb_eval(b: &[Complex64], l: f64) -> Complex64 {
    let zero = Complex64::new(0.0, 0.0);
    let mut b1 = zero;
    let mut b2 = zero;
    for &c in b.iter().skip(1).rev() {
        let t = c + b1 * (2.0 * l) - b2;
        b2 = b1;
        b1 = t;
    }
    b.first().copied().unwrap_or(zero) + b1 * l - b2
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn nodes_small_cases() {
        assert_eq!(cheb_nodes(1).unwrap(), vec![1.0, -1.0]);
        assert_eq!(cheb_nodes(2).unwrap(), vec![1.0, 0.0, -1.0]);
        let n4 = cheb_nodes(4).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for (a, b) in n4.iter().zip([1.0, h, 0.0, -h, -1.0]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(cheb_nodes(0).is_err());
    }

    #[test]
    fn fct_of_basis_polynomials() {
        let t = ChebTransform::new(6).unwrap();
        let l = cheb_nodes(6).unwrap();
        let one: Vec<_> = l.iter().map(|_| c(1.0)).collect();
        let b = t.fct(&one).unwrap();
        assert!((b[0] - 1.0).norm() < 1e-15 && b[1..].iter().all(|x| x.norm() < 1e-15));
        let lin: Vec<_> = l.iter().map(|&x| c(x)).collect();
        let b = t.fct(&lin).unwrap();
        assert!((b[1] - 1.0).norm() < 1e-15);
        let t2: Vec<_> = l.iter().map(|&x| c(2.0 * x * x - 1.0)).collect();
        let b = t.fct(&t2).unwrap();
        for (m, bm) in b.iter().enumerate() {
            let want = if m == 2 { 1.0 } else { 0.0 };
            assert!((bm - want).norm() < 1e-14, "m={m} {bm}");
        }
        assert!(t.fct(&t2[..3]).is_err());
    }

    #[test]
    fn diff_matrix_examples() {
        let d = cheb_diff_matrix(4);
        assert_eq!(d[(0, 1)], 1.0);
        assert_eq!(d[(1, 2)], 4.0);
        assert_eq!(d[(2, 3)], 6.0);
        assert_eq!(d[(0, 3)], 3.0);
        let a = vec![c(0.3), c(-1.0), c(2.0), c(0.5), c(0.25)];
        let via_rec = cheb_diff(&a);
        let av = nalgebra::DVector::from_iterator(5, a.iter().map(|x| x.re));
        let via_mat = &d * av;
        for m in 0..5 {
            assert!((via_rec[m].re - via_mat[m]).abs() < 1e-13);
        }
    }

    #[test]
    fn shifted_l_examples() {
        let m = mult_by_shifted_l_matrix(3, 1.0);
        // (l+1)T0 = T1 + T0
        assert_eq!((m[(0, 0)], m[(1, 0)]), (1.0, 1.0));
        // (l+1)T1 = T2/2 + T1 + T0/2
        assert_eq!((m[(0, 1)], m[(1, 1)], m[(2, 1)]), (0.5, 1.0, 0.5));
        let q = divide_by_shifted_l(&[c(1.0), c(1.0), c(0.0), c(0.0)], 1.0).unwrap();
        assert!((q[0] - 1.0).norm() < 1e-15 && q[1..].iter().all(|x| x.norm() < 1e-15));
        assert!(divide_by_shifted_l(&[c(1.0), c(0.0), c(0.0)], 1.0).is_err());
    }
}
