use crate::error::{Error, Result};
use crate::specfun::{gamma, FracOrder};

/// Local-existence exponents for the power nonlinearity of degree p.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalParams {
    pub a: f64,
    pub b: f64,
    /// Degree above which 0 < b < a.
    pub p_threshold: f64,
    pub valid: bool,
}

/// a = 1 - α + (αλ/2)(1 - 1/p), b = α/(p-1) - αλ/(2p), threshold 1 + 2α/(2(1-α) + αλ).
pub fn local_params(alpha: f64, lambda_a: f64, p: f64) -> LocalParams {
    let al = alpha * lambda_a;
    let a = 1.0 - alpha + 0.5 * al * (1.0 - 1.0 / p);
    let b = alpha / (p - 1.0) - al / (2.0 * p);
    let p_threshold = 1.0 + 2.0 * alpha / (2.0 * (1.0 - alpha) + al);
    let valid = p > 1.0 && b > 0.0 && p > p_threshold && b < a;
    LocalParams { a, b, p_threshold, valid }
}

/// Integrability exponent q = 2αλp / (αλ + 2pb) of small global data.
pub fn global_params(alpha: f64, lambda_a: f64, p: f64, b: f64) -> Result<f64> {
    if !(b > 0.0) {
        return Err(Error::domain(format!("global exponent needs b > 0, got {b}")));
    }
    let al = alpha * lambda_a;
    let q = 2.0 * al * p / (al + 2.0 * p * b);
    debug_assert!(q < 2.0 * p);
    Ok(q)
}

/// Exponents and smallness level of one semilinear run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracParams {
    pub alpha: FracOrder,
    pub lambda_a: f64,
    pub p: f64,
    pub theta: f64,
    pub a: f64,
    pub b: f64,
    pub kappa: f64,
    pub q_global: f64,
}

impl FracParams {
    /// Takes b from the power-nonlinearity rule unless overridden.
    pub fn new(alpha: FracOrder, lambda_a: f64, p: f64, theta: f64, b: Option<f64>, kappa: f64) -> Result<Self> {
        if !(lambda_a > 0.0) || !lambda_a.is_finite() {
            return Err(Error::domain(format!("lambda_A must be positive, got {lambda_a}")));
        }
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::domain(format!("p must exceed 1, got {p}")));
        }
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::domain(format!("theta must lie in (0, 1], got {theta}")));
        }
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(Error::domain(format!("kappa must be positive, got {kappa}")));
        }
        let local = local_params(alpha.value(), lambda_a, p);
        let b = b.unwrap_or(local.b);
        if !(b > 0.0 && b < local.a) {
            return Err(Error::domain(format!("need 0 < b < a = {}, got b = {b}", local.a)));
        }
        let q_global = global_params(alpha.value(), lambda_a, p, b)?;
        Ok(Self { alpha, lambda_a, p, theta, a: local.a, b, kappa, q_global })
    }

    pub fn with_kappa(self, kappa: f64) -> Result<Self> {
        Self::new(self.alpha, self.lambda_a, self.p, self.theta, Some(self.b), kappa)
    }

    /// The L^{2p} exponent of the weighted space.
    pub fn norm_exponent(&self) -> f64 {
        2.0 * self.p
    }
}

/// ∫_0^1 (1-τ)^{-a} τ^{a-1-b} dτ = Γ(1-a)Γ(a-b)/Γ(1-b).
pub fn smallness_beta(a: f64, b: f64) -> Result<f64> {
    if !(a < 1.0) || !(b < a) || !(b > 0.0) {
        return Err(Error::domain(format!("smallness integral diverges for a = {a}, b = {b}")));
    }
    Ok(gamma(1.0 - a) * gamma(a - b) / gamma(1.0 - b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example() {
        let lp = local_params(0.5, 1.5, 2.0);
        assert_eq!(lp.b, 0.3125);
        assert_eq!(lp.a, 0.6875);
        assert!((lp.p_threshold - 11.0 / 7.0).abs() < 1e-15);
        assert!(lp.valid);
        assert!(!local_params(0.5, 1.5, 1.5).valid);
        assert_eq!(global_params(0.5, 1.5, 2.0, 0.3125).unwrap(), 1.5);
    }

    #[test]
    fn large_p_limit() {
        let lp = local_params(0.4, 1.2, 1e12);
        assert!((lp.a - (1.0 - 0.4 + 0.4 * 1.2 / 2.0)).abs() < 1e-10);
    }

    #[test]
    fn params_validate() {
        let al = FracOrder::new(0.5).unwrap();
        let fp = FracParams::new(al, 1.5, 2.0, 1.0, None, 0.1).unwrap();
        assert_eq!(fp.q_global, 1.5);
        assert!(FracParams::new(al, 1.5, 2.0, 1.0, Some(0.9), 0.1).is_err());
        assert!(FracParams::new(al, 1.5, 2.0, 1.0, None, 0.0).is_err());
    }

    #[test]
    fn smallness_beta_matches_quadrature() {
        use crate::specfun::quad::{integrate_adaptive, QuadTol};
        let (a, b) = (0.875, 0.3125);
        let want = gamma(0.125) * gamma(0.5625) / gamma(0.6875);
        assert!((smallness_beta(a, b).unwrap() - want).abs() < 1e-14 * want);
        // Split at 1/2 and remove both endpoint singularities by power substitution.
        let tol = QuadTol::new(1e-15, 1e-13);
        let e0 = a - b;
        let left = integrate_adaptive(|u: f64| (1.0 - u.powf(1.0 / e0)).powf(-a) / e0, 0.0, 0.5f64.powf(e0), tol).unwrap().value;
        let e1 = 1.0 - a;
        let right = integrate_adaptive(|u: f64| (1.0 - u.powf(1.0 / e1)).powf(a - 1.0 - b) / e1, 0.0, 0.5f64.powf(e1), tol).unwrap().value;
        assert!(((left + right) - want).abs() < 1e-9 * want, "{} vs {want}", left + right);
        assert!(smallness_beta(1.0, 0.5).is_err());
        assert!(smallness_beta(0.5, 0.6).is_err());
    }
}
