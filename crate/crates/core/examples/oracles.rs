//! Closed-form reference values.

use num_complex::Complex64;

use ds2::oracles::{catalan, disk_reflection_k0, lorentzian_alpha0, lorentzian_branch_points, lorentzian_f};

fn main() -> ds2::Result<()> {
    let z = Complex64::new(0.5, 0.25);
    for k in [Complex64::new(1.0, 0.0), Complex64::new(0.3, 0.2)] {
        println!("k = {k}: f(z) = {:.12}, alpha0(z) = {:.12}", lorentzian_f(z, k)?, lorentzian_alpha0(z, k)?);
        match lorentzian_branch_points(k) {
            Some(b) => println!("  branch points {b:.6?}"),
            None => println!("  no branch points"),
        }
    }
    let cat: Vec<u64> = (0..10).map(catalan).collect::<ds2::Result<_>>()?;
    println!("catalan {cat:?}");
    for eps in [0.2, 0.1, 0.05] {
        println!("disk R0(eps = {eps}) = {:.12}", disk_reflection_k0(1.0, 1.0, eps)?);
    }
    Ok(())
}
