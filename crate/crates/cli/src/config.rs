//! Run configuration: a flat TOML document with one table per concern.
//!
//! Every table rejects unknown keys so a typo fails before any computation.
//! [`RunConfig::resolve`] fills in the defaults that depend on other keys and
//! validates the result; the resolved copy is what reports embed.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use fracevo::generator::Preset;
use fracevo::oracle::l1_grading;
use fracevo::timegrid::TimeGrid;

use crate::error::CliError;

/// Largest time grid the CLI accepts; tables grow like K².
pub const MAX_STEPS: usize = 256;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// A generator preset name, or "scalar" for the one-mode family -rate·(1 + eps·t).
    pub preset: String,
    #[serde(default = "yes")]
    pub parallel: bool,
    #[serde(default)]
    pub scalar: ScalarConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub frac: FracConfig,
    #[serde(default)]
    pub nonlinearity: NonlinearityConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub continuation: ContinuationConfig,
    #[serde(default)]
    pub ultra: UltraConfig,
    #[serde(default)]
    pub specfun: SpecfunConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalarConfig {
    pub rate: f64,
    pub eps: f64,
}

impl Default for ScalarConfig {
    fn default() -> Self {
        Self { rate: 1.0, eps: 0.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Spatial dimension; checked against the preset when given.
    pub dim: Option<usize>,
    /// Interior points per axis.
    pub n: usize,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "K")]
    pub steps: usize,
    /// Grading exponent of the time grid; defaults per command.
    pub grading_r: Option<f64>,
    /// Gauss–Legendre nodes per panel of the subordination rule.
    pub quad_nodes: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { dim: None, n: 15, horizon: 1.0, steps: 16, grading_r: None, quad_nodes: 16 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FracConfig {
    pub alpha: f64,
    pub p: f64,
    /// Overrides the local weight exponent.
    pub b: Option<f64>,
    /// Overrides the calibrated smallness level.
    pub kappa: Option<f64>,
    /// Overrides the measured smoothing exponent of the semigroup.
    pub lambda_a: Option<f64>,
    /// Hölder exponent in time; defaults to the preset's.
    pub theta: Option<f64>,
}

impl Default for FracConfig {
    fn default() -> Self {
        Self { alpha: 0.5, p: 2.0, b: None, kappa: None, lambda_a: None, theta: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NonlinearityKind {
    Zero,
    Linear,
    Power,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NonlinearityConfig {
    pub kind: NonlinearityKind,
    /// Exponent s of the power law; defaults to frac.p.
    pub p_power: Option<f64>,
    /// Slope of the linear law.
    pub coefficient: f64,
}

impl Default for NonlinearityConfig {
    fn default() -> Self {
        Self { kind: NonlinearityKind::Zero, p_power: None, coefficient: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    /// Product of sin(mode·π·x_i).
    Sine,
    /// Constant value on every node.
    Constant,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialConfig {
    pub shape: Shape,
    pub amplitude: f64,
    pub mode: u32,
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self { shape: Shape::Sine, amplitude: 1.0, mode: 1 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub volterra_tol: f64,
    pub volterra_max_iter: usize,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    /// Relative gap allowed between the representation and the L1 oracle.
    pub compare_tol: f64,
    /// Gap allowed against closed forms in `solve-linear`.
    pub closed_form_tol: f64,
    /// Relative slope error allowed in `check-ultra`.
    pub slope_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            volterra_tol: 1e-8,
            volterra_max_iter: 50,
            picard_tol: 1e-8,
            picard_max_iter: 200,
            compare_tol: 0.02,
            closed_form_tol: 1e-4,
            slope_tol: 0.1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContinuationConfig {
    /// Number of equal node windows the horizon is split into; 1 disables continuation.
    pub windows: usize,
    pub ceiling: f64,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        Self { windows: 1, ceiling: 1e6 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UltraConfig {
    /// Semigroup times bracketing the power-law regime.
    pub tau_lo: f64,
    pub tau_hi: f64,
    pub pairs: Vec<[Exponent; 2]>,
}

impl Default for UltraConfig {
    fn default() -> Self {
        let e = Exponent;
        Self {
            tau_lo: 1e-3,
            tau_hi: 2e-2,
            pairs: vec![[e(1.0), e(2.0)], [e(2.0), e(f64::INFINITY)], [e(1.0), e(f64::INFINITY)]],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpecfunConfig {
    pub alphas: Vec<f64>,
    pub z_max: f64,
    pub points: usize,
}

impl Default for SpecfunConfig {
    fn default() -> Self {
        Self { alphas: vec![0.3, 0.5, 0.7], z_max: 5.0, points: 51 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("fracevo-out") }
    }
}

/// A Lebesgue exponent in [1, ∞]; written as a number or the string "inf".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponent(pub f64);

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str("inf")
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Int(i64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(Exponent(x)),
            Repr::Int(x) => Ok(Exponent(x as f64)),
            Repr::Text(t) if t == "inf" => Ok(Exponent(f64::INFINITY)),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("expected a number or \"inf\", got \"{t}\""))),
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_finite() {
            write!(f, "{}", self.0)
        } else {
            f.write_str("inf")
        }
    }
}

/// The generator a config refers to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Preset(Preset),
    Scalar { rate: f64, eps: f64 },
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn family(&self) -> Result<Family, CliError> {
        if self.preset == "scalar" {
            return Ok(Family::Scalar { rate: self.scalar.rate, eps: self.scalar.eps });
        }
        Preset::from_name(&self.preset).map(Family::Preset).map_err(|_| {
            let known: Vec<&str> = Preset::ALL.iter().map(|p| p.name()).chain(["scalar"]).collect();
            invalid("preset", format!("unknown preset \"{}\" (known: {})", self.preset, known.join(", ")))
        })
    }

    /// Fills derived defaults and validates every key.
    pub fn resolve(mut self, default_grading: Grading) -> Result<Self, CliError> {
        let family = self.family()?;
        let dim = match family {
            Family::Preset(p) => p.dim(),
            Family::Scalar { .. } => 0,
        };
        match self.grid.dim {
            Some(d) if d != dim => return Err(invalid("grid.dim", format!("preset {} is {dim}-dimensional, got {d}", self.preset))),
            _ => self.grid.dim = Some(dim),
        }
        if let Family::Scalar { rate, eps } = family {
            positive("scalar.rate", rate)?;
            if !(eps >= 0.0) || !eps.is_finite() {
                return Err(invalid("scalar.eps", format!("must be finite and non-negative, got {eps}")));
            }
        }

        let g = &self.grid;
        if !(2..=MAX_STEPS).contains(&g.steps) {
            return Err(invalid("grid.K", format!("must lie in [2, {MAX_STEPS}], got {}", g.steps)));
        }
        if dim > 0 && !(2..=64).contains(&g.n) {
            return Err(invalid("grid.n", format!("must lie in [2, 64], got {}", g.n)));
        }
        positive("grid.T", g.horizon)?;
        if g.quad_nodes < 2 {
            return Err(invalid("grid.quad_nodes", format!("need at least 2, got {}", g.quad_nodes)));
        }

        let f = &self.frac;
        if !(f.alpha > 0.0 && f.alpha < 1.0) {
            return Err(invalid("frac.alpha", format!("must lie in (0, 1), got {}", f.alpha)));
        }
        if !(f.p > 1.0) || !f.p.is_finite() {
            return Err(invalid("frac.p", format!("must exceed 1, got {}", f.p)));
        }
        for (key, v) in [("frac.b", f.b), ("frac.kappa", f.kappa), ("frac.lambda_a", f.lambda_a)] {
            if let Some(v) = v {
                positive(key, v)?;
            }
        }
        if let Some(theta) = f.theta {
            if !(theta > 0.0 && theta <= 1.0) {
                return Err(invalid("frac.theta", format!("must lie in (0, 1], got {theta}")));
            }
        }

        let r = self.grid.grading_r.unwrap_or(match default_grading {
            Grading::Solver => TimeGrid::default_grading(self.frac.alpha),
            Grading::Oracle => l1_grading(self.frac.alpha),
        });
        if !(r >= 1.0) || !r.is_finite() {
            return Err(invalid("grid.grading_r", format!("must be at least 1, got {r}")));
        }
        self.grid.grading_r = Some(r);

        let p_power = self.nonlinearity.p_power.unwrap_or(self.frac.p);
        if self.nonlinearity.kind == NonlinearityKind::Power && !(p_power >= 1.0 && p_power <= self.frac.p) {
            return Err(invalid("nonlinearity.p_power", format!("must lie in [1, frac.p = {}], got {p_power}", self.frac.p)));
        }
        self.nonlinearity.p_power = Some(p_power);
        if !self.nonlinearity.coefficient.is_finite() {
            return Err(invalid("nonlinearity.coefficient", "must be finite"));
        }

        if !self.initial.amplitude.is_finite() {
            return Err(invalid("initial.amplitude", "must be finite"));
        }
        if self.initial.mode == 0 {
            return Err(invalid("initial.mode", "must be at least 1"));
        }

        let t = &self.tolerances;
        for (key, v) in [
            ("tolerances.volterra_tol", t.volterra_tol),
            ("tolerances.picard_tol", t.picard_tol),
            ("tolerances.compare_tol", t.compare_tol),
            ("tolerances.closed_form_tol", t.closed_form_tol),
            ("tolerances.slope_tol", t.slope_tol),
        ] {
            positive(key, v)?;
        }
        for (key, v) in [("tolerances.volterra_max_iter", t.volterra_max_iter), ("tolerances.picard_max_iter", t.picard_max_iter)] {
            if v == 0 {
                return Err(invalid(key, "must be at least 1"));
            }
        }

        let c = &self.continuation;
        if c.windows == 0 || c.windows > self.grid.steps {
            return Err(invalid("continuation.windows", format!("must lie in [1, K = {}], got {}", self.grid.steps, c.windows)));
        }
        positive("continuation.ceiling", c.ceiling)?;

        let u = &self.ultra;
        positive("ultra.tau_lo", u.tau_lo)?;
        if !(u.tau_hi > u.tau_lo) || !u.tau_hi.is_finite() {
            return Err(invalid("ultra.tau_hi", format!("must exceed tau_lo = {}, got {}", u.tau_lo, u.tau_hi)));
        }
        if u.pairs.is_empty() {
            return Err(invalid("ultra.pairs", "need at least one (p, q) pair"));
        }
        for [p, q] in &u.pairs {
            if !(p.0 >= 1.0) || !(q.0 >= p.0) || !p.0.is_finite() {
                return Err(invalid("ultra.pairs", format!("need 1 <= p <= q with p finite, got ({p}, {q})")));
            }
        }

        let s = &self.specfun;
        if s.alphas.is_empty() || s.alphas.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
            return Err(invalid("specfun.alphas", "need a non-empty list of orders in (0, 1)"));
        }
        positive("specfun.z_max", s.z_max)?;
        if s.points < 2 {
            return Err(invalid("specfun.points", format!("need at least 2, got {}", s.points)));
        }
        Ok(self)
    }
}

/// Which grading a command uses when `grid.grading_r` is absent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grading {
    Solver,
    Oracle,
}

fn invalid(key: &str, msg: impl Into<String>) -> CliError {
    CliError::Invalid { key: key.to_string(), msg: msg.into() }
}

fn positive(key: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(key, format!("must be positive and finite, got {v}")))
    }
}
