use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Symmetric diffusion tensor (a11, a12 = a21, a22); a 1-D operator uses a11 only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diffusion {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl Diffusion {
    pub fn isotropic(a: f64) -> Self {
        Self { a11: a, a12: 0.0, a22: a }
    }

    /// Σ a_ij ξ_i ξ_j / |ξ|².
    pub fn symbol(&self, xi: [f64; 2]) -> f64 {
        let num = self.a11 * xi[0] * xi[0] + 2.0 * self.a12 * xi[0] * xi[1] + self.a22 * xi[1] * xi[1];
        num / (xi[0] * xi[0] + xi[1] * xi[1])
    }
}

type DiffusionFn = Arc<dyn Fn(f64, &[f64]) -> Diffusion + Send + Sync>;
type DriftFn = Arc<dyn Fn(f64, &[f64]) -> [f64; 2] + Send + Sync>;
type ReactionFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

/// Coefficients of B(t,x,∇) = Σ a_ij ∂_ij + Σ b_i ∂_i + c.
#[derive(Clone)]
pub struct CoefficientSet {
    diffusion: DiffusionFn,
    drift: DriftFn,
    reaction: ReactionFn,
    holder_theta: f64,
    holder_const: f64,
    time_independent: bool,
}

impl fmt::Debug for CoefficientSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientSet")
            .field("holder_theta", &self.holder_theta)
            .field("holder_const", &self.holder_const)
            .field("time_independent", &self.time_independent)
            .finish_non_exhaustive()
    }
}

impl CoefficientSet {
    pub fn new(
        diffusion: impl Fn(f64, &[f64]) -> Diffusion + Send + Sync + 'static,
        holder_theta: f64,
        holder_const: f64,
    ) -> Result<Self> {
        if !(holder_theta > 0.0 && holder_theta <= 1.0) {
            return Err(Error::domain(format!("Hölder exponent must lie in (0, 1], got {holder_theta}")));
        }
        if !(holder_const >= 0.0) {
            return Err(Error::domain(format!("Hölder constant must be nonnegative, got {holder_const}")));
        }
        Ok(Self {
            diffusion: Arc::new(diffusion),
            drift: Arc::new(|_, _| [0.0, 0.0]),
            reaction: Arc::new(|_, _| 0.0),
            holder_theta,
            holder_const,
            time_independent: false,
        })
    }

    pub fn with_drift(mut self, drift: impl Fn(f64, &[f64]) -> [f64; 2] + Send + Sync + 'static) -> Self {
        self.drift = Arc::new(drift);
        self
    }

    pub fn with_reaction(mut self, c: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.reaction = Arc::new(c);
        self
    }

    /// Marks the coefficients as independent of t.
    pub fn time_independent(mut self) -> Self {
        self.time_independent = true;
        self
    }

    pub fn diffusion(&self, t: f64, x: &[f64]) -> Diffusion {
        (self.diffusion)(t, x)
    }

    pub fn drift(&self, t: f64, x: &[f64]) -> [f64; 2] {
        (self.drift)(t, x)
    }

    pub fn reaction(&self, t: f64, x: &[f64]) -> f64 {
        (self.reaction)(t, x)
    }

    pub fn holder_theta(&self) -> f64 {
        self.holder_theta
    }

    pub fn holder_const(&self) -> f64 {
        self.holder_const
    }

    pub fn is_time_independent(&self) -> bool {
        self.time_independent
    }
}

/// Named coefficient sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Laplace1d,
    Reaction1d,
    Advection1d,
    Lipschitz1d,
    Timevarying1d,
    Holder1d,
    Laplace2d,
    TimevaryingEllipse2d,
}

impl Preset {
    pub const ALL: [Preset; 8] = [
        Preset::Laplace1d,
        Preset::Reaction1d,
        Preset::Advection1d,
        Preset::Lipschitz1d,
        Preset::Timevarying1d,
        Preset::Holder1d,
        Preset::Laplace2d,
        Preset::TimevaryingEllipse2d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Laplace1d => "laplace-1d",
            Preset::Reaction1d => "reaction-1d",
            Preset::Advection1d => "advection-1d",
            Preset::Lipschitz1d => "lipschitz-1d",
            Preset::Timevarying1d => "timevarying-1d",
            Preset::Holder1d => "holder-1d",
            Preset::Laplace2d => "laplace-2d",
            Preset::TimevaryingEllipse2d => "timevarying-ellipse-2d",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == name)
            .ok_or_else(|| Error::domain(format!("unknown preset '{name}'")))
    }

    pub fn dim(self) -> usize {
        match self {
            Preset::Laplace2d | Preset::TimevaryingEllipse2d => 2,
            _ => 1,
        }
    }

    pub fn coefficients(self) -> CoefficientSet {
        let build = |d: fn(f64, &[f64]) -> Diffusion, theta: f64, c: f64| {
            CoefficientSet::new(d, theta, c).expect("preset constants are valid")
        };
        match self {
            Preset::Laplace1d | Preset::Laplace2d => {
                build(|_, _| Diffusion::isotropic(1.0), 1.0, 0.0).time_independent()
            }
            Preset::Reaction1d => build(|_, _| Diffusion::isotropic(1.0), 1.0, 0.0)
                .with_reaction(|_, _| -1.0)
                .time_independent(),
            Preset::Advection1d => build(|_, _| Diffusion::isotropic(1.0), 1.0, 0.0)
                .with_drift(|_, _| [4.0, 0.0])
                .time_independent(),
            Preset::Lipschitz1d => build(|t, _| Diffusion::isotropic(1.0 + 0.1 * t), 1.0, 0.1),
            Preset::Timevarying1d => build(
                |t, x| Diffusion::isotropic((1.0 + 0.5 * t) * (1.0 + 0.25 * (PI * x[0]).sin())),
                1.0,
                0.625,
            ),
            Preset::Holder1d => build(|t, _| Diffusion::isotropic(1.0 + 0.2 * t.max(0.0).sqrt()), 0.5, 0.2),
            Preset::TimevaryingEllipse2d => build(
                |t, _| Diffusion {
                    a11: 1.0 + 0.5 * t,
                    a12: 0.1 * (0.5 * PI * t).sin(),
                    a22: 1.0 - 0.25 * t,
                },
                1.0,
                0.5,
            ),
        }
    }
}
