//! Mild solutions u(t) = S(t,0)u0 + ∫_0^t P(t,τ) J(u(τ)) dτ on a time grid.
//!
//! The Duhamel integral uses the product-integration weights of the
//! solution-operator table, so the linear solve and every Picard sweep share
//! one quadrature path. The semilinear iteration runs in the weighted space
//! with distance max{sup ‖·‖₂, sup t^b ‖·‖_{2p}}.

mod nonlinearity;
mod params;
mod solve;

use nalgebra::DVector;

pub use nonlinearity::SemilinearSpec;
pub use params::{global_params, local_params, smallness_beta, FracParams, LocalParams};
pub use solve::{
    calibrate_kappa, continue_solution, linear_weighted_sup, picard_semilinear, solve_linear, ContinuationOptions,
    MildSolution, MildStatus, PicardOptions, Weighting, WindowRecord,
};

use crate::error::{Error, Result};
use crate::generator::{lp_norm, SpatialGrid};

/// Prefactors of the decay laws ‖S(t,0)‖_{q→2p} ≤ C_S t^{-b} and
/// ‖P(t,τ)‖_{2→2p} ≤ C_P (t-τ)^{-a}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayConstants {
    pub c_s: f64,
    pub c_p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmallnessReport {
    /// Γ(1-a)Γ(a-b)/Γ(1-b).
    pub beta_integral: f64,
    /// ‖u0‖_{L^q} with q = q_global.
    pub data_norm: f64,
    /// C_S ‖u0‖_{L^q}.
    pub epsilon: f64,
    pub envelope_const: f64,
    /// 2^{(1-a+b)/b} Λ B C_P ε^{(1-a)/b}.
    pub lhs: f64,
    pub passes: bool,
}

/// Evaluates the small-data condition for global existence.
pub fn global_smallness_check(
    u0: &DVector<f64>,
    spatial: &SpatialGrid,
    params: &FracParams,
    constants: DecayConstants,
    spec: &SemilinearSpec,
) -> Result<SmallnessReport> {
    let (a, b) = (params.a, params.b);
    let beta_integral = smallness_beta(a, b)?;
    if params.q_global < 1.0 {
        return Err(Error::domain(format!("global exponent q = {} is below 1", params.q_global)));
    }
    let envelope_const = spec.envelope_const(a, b)?;
    let data_norm = lp_norm(u0, spatial, params.q_global);
    let epsilon = constants.c_s * data_norm;
    let lhs = 2f64.powf((1.0 - a + b) / b) * envelope_const * beta_integral * constants.c_p * epsilon.powf((1.0 - a) / b);
    Ok(SmallnessReport { beta_integral, data_norm, epsilon, envelope_const, lhs, passes: lhs < 1.0 })
}
