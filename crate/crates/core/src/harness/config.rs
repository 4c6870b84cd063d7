//! Experiment configuration files: TOML with a few flat sections.
//!
//! ```toml
//! experiment = "wkb-convergence"
//! k = [0.75, 1.0, 1.25]
//! eps = [0.5, 0.25, 0.125, 0.0625]
//!
//! [potential]
//! tag = "gaussian"
//!
//! [grid]
//! nc = 40
//! nphi = 64
//!
//! [output]
//! dir = "out/wkb"
//!
//! [thresholds]
//! slope = [0.85, 1.10]
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dirac::{DerivativeRule, DiracProblem};
use crate::eikonal::EikonalMethod;
use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::spectral::CartesianGrid;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    EikonalAccuracy,
    Alpha0Accuracy,
    WkbConvergence,
    ReflectionScan,
    RiccatiBounds,
    ThresholdEstimate,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    /// `gaussian | lorentzian | disk | aniso | expr`.
    pub tag: String,
    pub rho: Option<f64>,
    pub a0: Option<f64>,
    pub expr: Option<String>,
}

impl PotentialConfig {
    pub fn build(&self) -> Result<Potential> {
        match self.tag.as_str() {
            "disk" => Potential::disk(self.rho.unwrap_or(1.0), self.a0.unwrap_or(1.0)),
            "expr" => {
                let src = self.expr.as_deref().ok_or_else(|| Error::Parse("potential.expr is required for tag 'expr'".into()))?;
                Potential::custom(src)
            }
            tag => Potential::parse(tag),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub nc: usize,
    pub nphi: usize,
    /// Cartesian sizes, one per `ε`; empty means the built-in table.
    pub nx: Vec<usize>,
    pub n_terms: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { nc: 40, nphi: 64, nx: Vec::new(), n_terms: 120 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub eikonal: f64,
    pub alpha0: f64,
    pub gmres: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { eikonal: 1e-12, alpha0: 1e-11, gmres: 1e-10 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiracConfig {
    pub reg_order: usize,
    pub reg_rule: String,
    pub restart: usize,
    pub max_iter: usize,
}

impl Default for DiracConfig {
    fn default() -> Self {
        Self { reg_order: 2, reg_rule: "spectral".into(), restart: 50, max_iter: 400 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub k_min: f64,
    pub k_max: f64,
    pub k_steps: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    #[serde(default)]
    pub write_fields: bool,
    #[serde(default = "yes")]
    pub plots: bool,
}

fn yes() -> bool {
    true
}

/// Declared pass/fail thresholds; each experiment reads the keys that apply to it.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    pub max_error: Option<f64>,
    /// Iteration caps per eikonal method tag.
    pub max_iterations: BTreeMap<String, usize>,
    /// Δ regression slopes (wkb-convergence) or the log-log norm slope (threshold-estimate).
    pub slope: Option<[f64; 2]>,
    /// Per-`k` slope ranges, keyed by the decimal value of `k`.
    pub slope_by_k: BTreeMap<String, [f64; 2]>,
    pub imag_max: Option<f64>,
    pub monotone_from: Option<f64>,
    pub decay_ratio: Option<f64>,
    pub peak_rel: Option<f64>,
    pub k_crit: Option<[f64; 2]>,
    pub beta: Option<[f64; 2]>,
    pub ratio: Option<[f64; 2]>,
}

impl Thresholds {
    pub fn slope_for(&self, k: f64) -> (Option<f64>, Option<f64>) {
        let by_k = self
            .slope_by_k
            .iter()
            .find(|(key, _)| key.parse::<f64>().is_ok_and(|v| (v - k).abs() < 1e-12))
            .map(|(_, r)| *r);
        match by_k.or(self.slope) {
            Some([a, b]) => (Some(a), Some(b)),
            None => (None, None),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub k: Vec<f64>,
    #[serde(default)]
    pub eps: Vec<f64>,
    /// Eikonal methods for `eikonal-accuracy`.
    #[serde(default)]
    pub methods: Vec<String>,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    pub potential: PotentialConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub dirac: DiracConfig,
    pub scan: Option<ScanConfig>,
    pub output: OutputConfig,
    #[serde(default)]
    pub thresholds: Thresholds,
}

fn default_max_iter() -> usize {
    100
}

impl std::str::FromStr for ExperimentConfig {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

impl ExperimentConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        std::fs::read_to_string(path)?.parse()
    }

    pub fn validate(&self) -> Result<()> {
        use ExperimentKind::*;
        let bad = |m: String| Err(Error::InvalidArgument(m));
        let needs_k = matches!(self.experiment, EikonalAccuracy | Alpha0Accuracy | WkbConvergence);
        if needs_k && self.k.is_empty() {
            return bad("this experiment needs a nonempty k list".into());
        }
        if self.experiment == ReflectionScan && self.k.is_empty() && self.scan.is_none() {
            return bad("reflection-scan needs a k list or a [scan] section".into());
        }
        if needs_k && self.k.iter().any(|k| *k == 0.0 || !k.is_finite()) {
            return bad("k must be finite and nonzero".into());
        }
        let needs_eps = matches!(self.experiment, WkbConvergence | ReflectionScan | RiccatiBounds);
        if needs_eps && self.eps.is_empty() {
            return bad("this experiment needs a nonempty eps list".into());
        }
        if self.eps.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
            return bad("eps values must be positive".into());
        }
        if matches!(self.experiment, WkbConvergence | RiccatiBounds) && self.eps.windows(2).any(|w| w[1] >= w[0]) {
            return bad("eps list must be strictly decreasing for convergence experiments".into());
        }
        if self.experiment == WkbConvergence && self.eps.len() < 3 {
            return bad("wkb-convergence needs at least 3 eps values for the regression".into());
        }
        if !self.grid.nx.is_empty() && self.grid.nx.len() != self.eps.len() {
            return bad(format!("grid.nx has {} entries for {} eps values", self.grid.nx.len(), self.eps.len()));
        }
        if let Some(n) = self.grid.nx.iter().find(|n| !n.is_power_of_two() || **n < 16) {
            return bad(format!("grid.nx entries must be powers of two ≥ 16, got {n}"));
        }
        self.methods()?;
        self.dirac.reg_rule.parse::<DerivativeRule>()?;
        self.potential.build()?;
        Ok(())
    }

    pub fn methods(&self) -> Result<Vec<EikonalMethod>> {
        if self.methods.is_empty() {
            return Ok(vec![EikonalMethod::FixedPoint, EikonalMethod::Newton]);
        }
        self.methods
            .iter()
            .map(|m| match m.parse()? {
                EikonalMethod::Series | EikonalMethod::External => {
                    Err(Error::InvalidArgument(format!("method '{m}' is not available in eikonal-accuracy")))
                }
                other => Ok(other),
            })
            .collect()
    }

    /// Cartesian size for the `i`-th `ε`.
    pub fn nx_for(&self, i: usize, eps: f64) -> usize {
        self.grid.nx.get(i).copied().unwrap_or_else(|| DiracProblem::suggested_nx(eps))
    }

    pub fn dirac_problem(&self, p: &Potential, eps: f64, k: Complex64, grid: CartesianGrid) -> Result<DiracProblem> {
        let mut prob = DiracProblem::new(p.clone(), eps, k, grid)?;
        prob.gmres.tol = self.tolerances.gmres;
        prob.gmres.restart = self.dirac.restart;
        prob.gmres.max_iter = self.dirac.max_iter;
        prob.reg_order = self.dirac.reg_order;
        prob.rule = self.dirac.reg_rule.parse()?;
        Ok(prob)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const WKB: &str = r#"
experiment = "wkb-convergence"
k = [1.0]
eps = [0.5, 0.25, 0.125]

[potential]
tag = "gaussian"

[output]
dir = "out"

[thresholds]
slope = [0.85, 1.10]
slope_by_k = { "0.75" = [0.8, 1.15] }
"#;

    #[test]
    fn parses_and_applies_defaults() {
        let cfg: ExperimentConfig = WKB.parse().unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::WkbConvergence);
        assert_eq!(cfg.grid.nc, 40);
        assert_eq!(cfg.dirac.restart, 50);
        assert!(cfg.output.plots && !cfg.output.write_fields);
        assert_eq!(cfg.thresholds.slope_for(1.0), (Some(0.85), Some(1.10)));
        assert_eq!(cfg.thresholds.slope_for(0.75), (Some(0.8), Some(1.15)));
        assert_eq!(cfg.nx_for(0, 0.5), 512);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(WKB.replace("[0.5, 0.25, 0.125]", "[0.25, 0.5, 0.125]").parse::<ExperimentConfig>().is_err());
        assert!(WKB.replace("k = [1.0]", "k = []").parse::<ExperimentConfig>().is_err());
        assert!(WKB.replace("tag = \"gaussian\"", "tag = \"square\"").parse::<ExperimentConfig>().is_err());
        assert!(format!("{WKB}\nbogus = 1").parse::<ExperimentConfig>().is_err());
        assert!(WKB.replace("[potential]", "[grid]\nnx = [100, 64, 64]\n[potential]").parse::<ExperimentConfig>().is_err());
    }
}
