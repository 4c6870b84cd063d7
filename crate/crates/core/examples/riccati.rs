//! R at k = 0 from the radial Riccati equation with its upper and lower bounds.

use ds2::potential::Potential;
use ds2::riccati::{integrate_riccati, reflection_k0, sandwich_violation};

fn main() -> ds2::Result<()> {
    let p = Potential::gaussian();
    println!("{:>8} {:>10} {:>10} {:>10} {:>8}", "eps", "lower", "R0", "upper", "ratio");
    for eps in [1e-1, 1e-2, 1e-3, 1e-4, 1e-5] {
        let r = reflection_k0(&p, eps)?;
        let ratio = r.integrated / (2.0 * (1.0 / eps).ln().sqrt());
        let show = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.5}"));
        println!("{eps:>8.0e} {:>10} {:>10.5} {:>10} {ratio:>8.5}", show(r.lower), r.integrated, show(r.upper));
    }
    let sol = integrate_riccati(&p, 1e-3, None, 1e-11)?;
    println!("largest nullcline violation at eps = 1e-3: {:.1e}", sandwich_violation(&sol, &p)?);
    Ok(())
}
