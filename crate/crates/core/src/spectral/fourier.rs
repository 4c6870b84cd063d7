//! Periodic Fourier helpers for the angular direction.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Signed mode number stored at FFT index `i` of an `n`-point transform.
///
/// Indices `0..=n/2` carry modes `0..=n/2` (the last being Nyquist), the rest `i − n`.
pub fn mode_of(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// FFT index of mode `m`, if representable.
pub fn index_of(m: i64, n: usize) -> Option<usize> {
    let half = (n / 2) as i64;
    if m > half || m <= -half {
        return None;
    }
    Some(if m >= 0 { m as usize } else { (m + n as i64) as usize })
}

/// Mode number used inside φ-derivatives: Nyquist is treated as zero.
pub fn derivative_mode(i: usize, n: usize) -> i64 {
    if n % 2 == 0 && i == n / 2 {
        0
    } else {
        mode_of(i, n)
    }
}

/// `∂_φ` on Fourier coefficients in FFT order, with the Nyquist mode zeroed.
pub fn fourier_diff(a: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = a.len();
    if n % 2 != 0 || n == 0 {
        return Err(Error::InvalidArgument(format!("Fourier length must be even, got {n}")));
    }
    Ok(a.iter()
        .enumerate()
        .map(|(i, &c)| c * Complex64::new(0.0, derivative_mode(i, n) as f64))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_layout() {
        assert_eq!((0..8).map(|i| mode_of(i, 8)).collect::<Vec<_>>(), vec![0, 1, 2, 3, 4, -3, -2, -1]);
        for m in -3..=4 {
            assert_eq!(mode_of(index_of(m, 8).unwrap(), 8), m);
        }
        assert!(index_of(-4, 8).is_none());
    }

    #[test]
    fn diff_examples() {
        let n = 8;
        let mut a = vec![Complex64::new(0.0, 0.0); n];
        a[1] = Complex64::new(1.0, 0.0);
        a[0] = Complex64::new(3.0, 0.0);
        a[4] = Complex64::new(2.0, 0.0);
        let d = fourier_diff(&a).unwrap();
        assert_eq!(d[1], Complex64::new(0.0, 1.0));
        assert_eq!(d[0], Complex64::new(0.0, 0.0));
        assert_eq!(d[4], Complex64::new(0.0, 0.0));
        assert!(fourier_diff(&a[..7]).is_err());
    }
}
