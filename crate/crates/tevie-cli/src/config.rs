use std::path::PathBuf;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use tevie::geometry::{Shape, ShapeSpec};
use tevie::scattering::SolverOptions;
use tevie::volume::Medium;

/// A shape given by catalogue name or by explicit geometry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ShapeChoice {
    Named(String),
    Custom(ShapeSpec),
}

impl ShapeChoice {
    pub fn build(&self) -> tevie::Result<Shape> {
        match self {
            ShapeChoice::Named(name) => Shape::named(name),
            ShapeChoice::Custom(spec) => Shape::new(spec.clone()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MediumConfig {
    pub eps_r: [f64; 2],
    pub mu_r: [f64; 2],
}

impl Default for MediumConfig {
    fn default() -> Self {
        MediumConfig { eps_r: [4.0, 0.0], mu_r: [1.0, 0.0] }
    }
}

impl MediumConfig {
    pub fn medium(&self) -> Medium {
        Medium::new(complex(self.eps_r), complex(self.mu_r))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub margin: f64,
    /// 0/1 cell indicators; `None` picks them for negative permittivity.
    pub sharp: Option<bool>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { nx: 128, margin: 0.1, sharp: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundaryConfig {
    pub panels: usize,
    pub graded: f64,
}

impl Default for BoundaryConfig {
    fn default() -> Self {
        BoundaryConfig { panels: 256, graded: 3.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumOp {
    /// ½I + K′ in the single-layer energy inner product
    Kprime,
    A0,
    B0,
    /// η A₀ + ν B₀
    Emag,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    pub op: SpectrumOp,
    pub eta: f64,
    pub nu: f64,
    /// Distance to the prediction counted as covered; `None` uses the operator default.
    pub tolerance: Option<f64>,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig { op: SpectrumOp::Kprime, eta: -3.0, nu: 0.5, tolerance: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FormulationChoice {
    Electric,
    Magnetic,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScatterConfig {
    pub formulation: FormulationChoice,
    pub compare_mie: bool,
}

impl Default for ScatterConfig {
    fn default() -> Self {
        ScatterConfig { formulation: FormulationChoice::Both, compare_mie: false }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Default for Sweep {
    fn default() -> Self {
        Sweep { lo: -10.0, hi: 9.9, step: 0.1 }
    }
}

impl Sweep {
    /// Parses `lo:hi:step`.
    pub fn parse(text: &str) -> Result<Sweep, String> {
        let parts: Vec<&str> = text.split(':').collect();
        let [lo, hi, step] = parts[..] else {
            return Err(format!("expected lo:hi:step, got {text:?}"));
        };
        let num = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("{s:?}: {e}"));
        let sweep = Sweep { lo: num(lo)?, hi: num(hi)?, step: num(step)? };
        sweep.validate()?;
        Ok(sweep)
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.step > 0.0) || !(self.hi >= self.lo) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(format!("invalid sweep {}:{}:{}", self.lo, self.hi, self.step));
        }
        Ok(())
    }

    /// Sample points rounded to 1e-9 so that decimal steps land on decimal values.
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| ((self.lo + i as f64 * self.step) * 1e9).round() / 1e9).collect()
    }
}

/// Everything a command needs. Every field has a default, so a config file
/// may list only what it changes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub shape: ShapeChoice,
    pub medium: MediumConfig,
    pub k: f64,
    pub direction: [f64; 2],
    pub grid: GridConfig,
    pub boundary: BoundaryConfig,
    pub solver: SolverOptions,
    pub spectrum: SpectrumConfig,
    pub scatter: ScatterConfig,
    pub sweep: Sweep,
    pub seed: u64,
    pub threads: Option<usize>,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            shape: ShapeChoice::Named("disk".into()),
            medium: MediumConfig::default(),
            k: 1.0,
            direction: [1.0, 0.0],
            grid: GridConfig::default(),
            boundary: BoundaryConfig::default(),
            solver: SolverOptions::default(),
            spectrum: SpectrumConfig::default(),
            scatter: ScatterConfig::default(),
            sweep: Sweep::default(),
            seed: 0,
            threads: None,
            out: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("config: {e}"))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

pub fn complex(v: [f64; 2]) -> Complex64 {
    Complex64::new(v[0], v[1])
}

/// Parses `re` or `re,im`.
pub fn parse_complex(text: &str) -> Result<[f64; 2], String> {
    let num = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("{s:?}: {e}"));
    match text.split_once(',') {
        Some((re, im)) => Ok([num(re)?, num(im)?]),
        None => Ok([num(text)?, 0.0]),
    }
}
