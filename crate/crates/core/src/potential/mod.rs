//! Amplitude potentials `A(x, y)`, their radial profiles and the large-|k| existence bound.
//!
//! The phase `S` is identically zero for every potential here; the solvers only cover that case.

pub mod expr;

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
pub use expr::{Dual, Expr};

#[derive(Clone, Debug, PartialEq)]
pub enum PotentialKind {
    /// `e^{−(x²+y²)}`
    Gaussian,
    /// `1/(1+x²+y²)`
    Lorentzian,
    /// `A0` on the disk of radius `rho`, zero outside.
    Disk { rho: f64, a0: f64 },
    /// `e^{−(x²+5y²+3xy)}`
    AnisoGaussian,
    Custom(Expr),
}

/// `A = scale · base(x, y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    kind: PotentialKind,
    scale: f64,
}

impl Potential {
    pub fn new(kind: PotentialKind) -> Result<Self> {
        if let PotentialKind::Disk { rho, a0 } = kind {
            if !(rho > 0.0 && a0 > 0.0) {
                return Err(Error::InvalidArgument("disk needs rho > 0 and a0 > 0".into()));
            }
        }
        Ok(Self { kind, scale: 1.0 })
    }

    pub fn gaussian() -> Self {
        Self { kind: PotentialKind::Gaussian, scale: 1.0 }
    }

    pub fn lorentzian() -> Self {
        Self { kind: PotentialKind::Lorentzian, scale: 1.0 }
    }

    pub fn aniso_gaussian() -> Self {
        Self { kind: PotentialKind::AnisoGaussian, scale: 1.0 }
    }

    pub fn disk(rho: f64, a0: f64) -> Result<Self> {
        Self::new(PotentialKind::Disk { rho, a0 })
    }

    pub fn custom(src: &str) -> Result<Self> {
        Ok(Self { kind: PotentialKind::Custom(Expr::parse(src)?), scale: 1.0 })
    }

    /// Parses `gaussian | lorentzian | disk:ρ:A0 | aniso | expr:<expression>`.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if let Some(src) = spec.strip_prefix("expr:") {
            return Self::custom(src.trim_matches('"'));
        }
        let parts: Vec<&str> = spec.split(':').collect();
        match parts.as_slice() {
            ["gaussian"] => Ok(Self::gaussian()),
            ["lorentzian"] => Ok(Self::lorentzian()),
            ["aniso"] | ["aniso_gaussian"] => Ok(Self::aniso_gaussian()),
            ["disk"] => Self::disk(1.0, 1.0),
            ["disk", rho, a0] => {
                let num = |s: &str| s.parse::<f64>().map_err(|_| Error::Parse(format!("bad number '{s}'")));
                Self::disk(num(rho)?, num(a0)?)
            }
            _ => Err(Error::Parse(format!("unknown potential '{spec}'"))),
        }
    }

    /// The same shape multiplied by `m`.
    pub fn scaled(&self, m: f64) -> Self {
        Self { kind: self.kind.clone(), scale: self.scale * m }
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn tag(&self) -> String {
        let base = match &self.kind {
            PotentialKind::Gaussian => "gaussian".to_string(),
            PotentialKind::Lorentzian => "lorentzian".to_string(),
            PotentialKind::Disk { rho, a0 } => format!("disk:{rho}:{a0}"),
            PotentialKind::AnisoGaussian => "aniso".to_string(),
            PotentialKind::Custom(e) => format!("expr:{e}"),
        };
        if self.scale == 1.0 {
            base
        } else {
            format!("{}*{base}", self.scale)
        }
    }

    pub fn is_radial(&self) -> bool {
        match &self.kind {
            PotentialKind::AnisoGaussian => false,
            PotentialKind::Custom(e) => e.is_radial(),
            _ => true,
        }
    }

    pub fn is_smooth(&self) -> bool {
        !matches!(self.kind, PotentialKind::Disk { .. })
    }

    /// Fails for potentials the eikonal and amplitude solvers cannot take.
    pub fn require_smooth(&self) -> Result<()> {
        if self.is_smooth() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("potential {} is discontinuous", self.tag())))
        }
    }

    pub fn amplitude(&self, x: f64, y: f64) -> f64 {
        let m = x * x + y * y;
        self.scale
            * match &self.kind {
                PotentialKind::Gaussian => (-m).exp(),
                PotentialKind::Lorentzian => 1.0 / (1.0 + m),
                PotentialKind::Disk { rho, a0 } => {
                    if m.sqrt() <= *rho {
                        *a0
                    } else {
                        0.0
                    }
                }
                PotentialKind::AnisoGaussian => (-(x * x + 5.0 * y * y + 3.0 * x * y)).exp(),
                PotentialKind::Custom(e) => e.eval(x, y),
            }
    }

    /// `a(m)` with `A(x, y) = a(x² + y²)`, for radial potentials.
    pub fn radial_profile(&self) -> Option<impl Fn(f64) -> f64 + '_> {
        if !self.is_radial() {
            return None;
        }
        Some(move |m: f64| self.profile_value(m))
    }

    fn profile_value(&self, m: f64) -> f64 {
        self.scale
            * match &self.kind {
                PotentialKind::Gaussian => (-m).exp(),
                PotentialKind::Lorentzian => 1.0 / (1.0 + m),
                PotentialKind::Disk { rho, a0 } => {
                    if m.sqrt() <= *rho {
                        *a0
                    } else {
                        0.0
                    }
                }
                PotentialKind::AnisoGaussian => f64::NAN,
                PotentialKind::Custom(e) => e.eval(m.sqrt(), 0.0),
            }
    }

    /// `A` as a function of the radius, for radial potentials (`A(r) = a(r²)`).
    pub fn radial(&self, r: f64) -> f64 {
        self.profile_value(r * r)
    }

    /// `∂ ln A = ½(∂_x − i∂_y) ln A`, computed without forming `A` where a closed form exists.
    pub fn dlog(&self, x: f64, y: f64) -> Complex64 {
        let (gx, gy) = match &self.kind {
            PotentialKind::Gaussian => (-2.0 * x, -2.0 * y),
            PotentialKind::Lorentzian => {
                let d = 1.0 + x * x + y * y;
                (-2.0 * x / d, -2.0 * y / d)
            }
            PotentialKind::Disk { .. } => (0.0, 0.0),
            PotentialKind::AnisoGaussian => (-(2.0 * x + 3.0 * y), -(10.0 * y + 3.0 * x)),
            PotentialKind::Custom(e) => {
                let d = e.eval_dual(x, y);
                if d.v == 0.0 {
                    (0.0, 0.0)
                } else {
                    (d.dx / d.v, d.dy / d.v)
                }
            }
        };
        Complex64::new(0.5 * gx, -0.5 * gy)
    }

    /// Sup of `A` over the plane, estimated on a radial/angular sample for non-radial shapes.
    pub fn sup_amplitude(&self) -> f64 {
        match &self.kind {
            PotentialKind::Gaussian | PotentialKind::Lorentzian | PotentialKind::AnisoGaussian => self.scale.abs(),
            PotentialKind::Disk { a0, .. } => self.scale.abs() * a0,
            PotentialKind::Custom(_) => {
                let mut best: f64 = 0.0;
                for i in 0..200 {
                    let r = 10.0 * i as f64 / 199.0;
                    for j in 0..32 {
                        let t = std::f64::consts::TAU * j as f64 / 32.0;
                        best = best.max(self.amplitude(r * t.cos(), r * t.sin()).abs());
                    }
                }
                best
            }
        }
    }
}

impl fmt::Display for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag())
    }
}

/// `B + max{u/(4(B − v)), √u/2}`: any `|k|` above this admits a global classical solution
/// of the eikonal problem, given Wiener norms `u = ‖A²‖_W` and `v = ‖∂S‖_W`.
pub fn min_k_bound(u_norm: f64, v_norm: f64, b: f64) -> Result<f64> {
    if !(u_norm > 0.0) || v_norm < 0.0 {
        return Err(Error::InvalidArgument("need u_norm > 0 and v_norm ≥ 0".into()));
    }
    if b <= v_norm {
        return Err(Error::InvalidArgument(format!("B = {b} must exceed v_norm = {v_norm}")));
    }
    Ok(b + (u_norm / (4.0 * (b - v_norm))).max(u_norm.sqrt() / 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn amplitude_examples() {
        assert_eq!(Potential::gaussian().amplitude(0.0, 0.0), 1.0);
        assert_eq!(Potential::lorentzian().amplitude(1.0, 0.0), 0.5);
        assert!((Potential::aniso_gaussian().amplitude(1.0, 1.0) - (-9.0f64).exp()).abs() < 1e-18);
        let d = Potential::parse("disk:2:0.5").unwrap();
        assert_eq!(d.amplitude(1.0, 1.0), 0.5);
        assert_eq!(d.amplitude(2.0, 1.0), 0.0);
        assert!(!d.is_smooth() && d.require_smooth().is_err());
        assert!(Potential::parse("disk:-1:1").is_err());
        assert!(Potential::parse("boxcar").is_err());
        assert_eq!(Potential::parse("expr:0").unwrap().amplitude(3.0, 4.0), 0.0);
    }

    #[test]
    fn radial_profile_examples() {
        let g = Potential::gaussian();
        let a = g.radial_profile().unwrap();
        assert_eq!(a(2.0), (-2.0f64).exp());
        let l = Potential::lorentzian();
        assert_eq!(l.radial_profile().unwrap()(3.0), 0.25);
        assert!(Potential::aniso_gaussian().radial_profile().is_none());
        assert!(Potential::parse("expr:exp(-r2)").unwrap().is_radial());
        assert!(!Potential::parse("expr:exp(-x^2)").unwrap().is_radial());
        assert_eq!(g.scaled(3.0).amplitude(0.0, 0.0), 3.0);
    }

    #[test]
    fn min_k_bound_examples() {
        assert!((min_k_bound(1.0, 0.0, 0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!((min_k_bound(1.0, 0.0, 1.0).unwrap() - 1.5).abs() < 1e-15);
        assert!((min_k_bound(4.0, 0.0, 1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(min_k_bound(1.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn min_k_bound_optimum_on_log_grid() {
        for u in [0.25, 1.0, 4.0, 9.0] {
            let mut best = f64::INFINITY;
            for i in 0..=400 {
                let b = 10f64.powf(-3.0 + 6.0 * i as f64 / 400.0);
                let v = min_k_bound(u, 0.0, b).unwrap();
                assert!(v >= u.sqrt() - 1e-14);
                best = best.min(v);
            }
            assert!((min_k_bound(u, 0.0, u.sqrt() / 2.0).unwrap() - u.sqrt()).abs() < 1e-14);
            assert!(best - u.sqrt() < 1e-2);
        }
    }

    #[test]
    fn dlog_matches_finite_difference() {
        let pots = [
            Potential::gaussian(),
            Potential::lorentzian(),
            Potential::aniso_gaussian(),
            Potential::parse("expr:(1+x^2)/(1+r2)^2").unwrap(),
        ];
        let (x, y, h) = (0.4, -0.3, 1e-6);
        for p in pots {
            let la = |x: f64, y: f64| p.amplitude(x, y).ln();
            let gx = (la(x + h, y) - la(x - h, y)) / (2.0 * h);
            let gy = (la(x, y + h) - la(x, y - h)) / (2.0 * h);
            let want = Complex64::new(0.5 * gx, -0.5 * gy);
            assert!((p.dlog(x, y) - want).norm() < 1e-8, "{p}");
        }
    }

    proptest! {
        #[test]
        fn radial_tags_match_profile(x in -5.0f64..5.0, y in -5.0f64..5.0) {
            for p in [Potential::gaussian(), Potential::lorentzian(), Potential::disk(1.5, 2.0).unwrap()] {
                let a = p.radial_profile().unwrap();
                prop_assert!((p.amplitude(x, y) - a(x * x + y * y)).abs() <= 1e-15);
            }
        }
    }
}
