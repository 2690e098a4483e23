use std::f64::consts::PI;

use super::gamma::{gamma, rgamma};
use super::quad::{integrate_adaptive, integrate_adaptive_points, QuadTol};
use crate::error::{Error, Result};

/// Fractional order strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct FracOrder(f64);

impl FracOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha < 1.0 {
            Ok(Self(alpha))
        } else {
            Err(Error::domain(format!("fractional order must lie in (0, 1), got {alpha}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for FracOrder {
    type Error = Error;
    fn try_from(alpha: f64) -> Result<Self> {
        Self::new(alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesAccuracy {
    abs_tol: f64,
    max_terms: usize,
}

impl SeriesAccuracy {
    pub fn new(abs_tol: f64, max_terms: usize) -> Result<Self> {
        if !(abs_tol >= 10.0 * f64::EPSILON) {
            return Err(Error::domain(format!("abs_tol {abs_tol} is below 10 machine epsilons")));
        }
        if max_terms < 16 {
            return Err(Error::domain(format!("max_terms must be at least 16, got {max_terms}")));
        }
        Ok(Self { abs_tol, max_terms })
    }

    pub fn abs_tol(&self) -> f64 {
        self.abs_tol
    }

    pub fn max_terms(&self) -> usize {
        self.max_terms
    }
}

impl Default for SeriesAccuracy {
    fn default() -> Self {
        Self { abs_tol: 1e-14, max_terms: 600 }
    }
}

/// Kernel t^{α-1}/Γ(α) of the Riemann–Liouville integral, zero for t ≤ 0.
pub fn g_alpha(alpha: FracOrder, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    t.powf(alpha.0 - 1.0) * rgamma(alpha.0)
}

/// Closed form of ∫_τ^t (t-s)^{α-1}(s-τ)^{β-1} ds.
pub fn beta_convolution(alpha: f64, beta: f64, tau: f64, t: f64) -> Result<f64> {
    check_beta_args(alpha, beta, tau, t)?;
    let log_beta = super::gamma::ln_gamma(alpha) + super::gamma::ln_gamma(beta)
        - super::gamma::ln_gamma(alpha + beta);
    Ok(log_beta.exp() * (t - tau).powf(alpha + beta - 1.0))
}

/// Quadrature route for [`beta_convolution`], used to cross-check the closed form.
///
/// The interval is split at its midpoint and each half is mapped with a power
/// substitution that removes the endpoint singularity.
pub fn beta_convolution_quadrature(alpha: f64, beta: f64, tau: f64, t: f64) -> Result<f64> {
    check_beta_args(alpha, beta, tau, t)?;
    let len = t - tau;
    let half = 0.5 * len;
    let tol = QuadTol::new(0.0, 1e-13);
    // Left half, x = s - τ = u^{1/β}: (x)^{β-1} dx = du/β.
    let left = integrate_adaptive(
        |u| {
            let x = u.powf(1.0 / beta);
            (len - x).powf(alpha - 1.0) / beta
        },
        0.0,
        half.powf(beta),
        tol,
    )?;
    // Right half, y = t - s = v^{1/α}.
    let right = integrate_adaptive(
        |v| {
            let y = v.powf(1.0 / alpha);
            (len - y).powf(beta - 1.0) / alpha
        },
        0.0,
        half.powf(alpha),
        tol,
    )?;
    Ok(left.value + right.value)
}

fn check_beta_args(alpha: f64, beta: f64, tau: f64, t: f64) -> Result<()> {
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(Error::domain(format!("beta_convolution needs positive orders, got ({alpha}, {beta})")));
    }
    if !(tau >= 0.0 && t > tau) || !t.is_finite() {
        return Err(Error::domain(format!("beta_convolution needs t > tau >= 0, got tau = {tau}, t = {t}")));
    }
    Ok(())
}

/// Wright-type density Φ_α(z) for z ≥ 0.
///
/// Small arguments use the power series with compensated summation. Once the
/// series would lose more than `abs_tol` to cancellation the function switches
/// to a non-oscillatory integral over (0, π).
pub fn wright_phi(alpha: FracOrder, z: f64, acc: SeriesAccuracy) -> Result<f64> {
    if !(z >= 0.0) || !z.is_finite() {
        return Err(Error::domain(format!("wright_phi needs finite z >= 0, got {z}")));
    }
    let value = match wright_series(alpha.0, z, acc)? {
        Some(v) => v,
        None => wright_integral(alpha.0, z, acc.abs_tol)?,
    };
    Ok(value.max(0.0))
}

/// Returns `None` when cancellation makes the series untrustworthy.
fn wright_series(alpha: f64, z: f64, acc: SeriesAccuracy) -> Result<Option<f64>> {
    let mut power = 1.0; // (-z)^n / n!
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut abs_sum = 0.0;
    let mut small_run = 0;
    for n in 0..acc.max_terms {
        if n > 0 {
            power *= -z / n as f64;
        }
        let term = power * rgamma(1.0 - alpha * (n as f64 + 1.0));
        // Neumaier summation.
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
        abs_sum += term.abs();
        if 4.0 * f64::EPSILON * abs_sum > acc.abs_tol {
            return Ok(None);
        }
        if (n as f64) > z && term.abs() < 0.1 * acc.abs_tol && power.abs() < acc.abs_tol {
            small_run += 1;
            if small_run >= 2 {
                return Ok(Some(sum + comp));
            }
        } else {
            small_run = 0;
        }
    }
    Err(Error::SeriesNotConverged { z, terms: acc.max_terms })
}

fn wright_integral(alpha: f64, z: f64, abs_tol: f64) -> Result<f64> {
    let inv = 1.0 / (1.0 - alpha);
    let scale = z.powf(inv);
    let shape = |phi: f64| -> f64 {
        let la = (alpha * phi).sin().ln();
        let lb = ((1.0 - alpha) * phi).sin().ln();
        let lc = phi.sin().ln();
        (alpha * inv * la + lb - inv * lc).exp()
    };
    let integrand = |phi: f64| {
        let a = if phi < 1e-8 {
            alpha.powf(alpha * inv) * (1.0 - alpha)
        } else {
            shape(phi)
        };
        let e = scale * a;
        if !e.is_finite() || e > 745.0 {
            0.0
        } else {
            a * (-e).exp()
        }
    };
    let prefactor = z.powf(alpha * inv) / (PI * (1.0 - alpha));
    let r = integrate_adaptive(integrand, 0.0, PI, QuadTol::new(0.1 * abs_tol / prefactor.max(1.0), 1e-13))?;
    Ok(prefactor * r.value)
}

/// ∫_0^∞ z^δ Φ_α(z) dz = Γ(1+δ)/Γ(1+αδ).
pub fn wright_moment(alpha: FracOrder, delta: f64) -> Result<f64> {
    if !(delta > -1.0) {
        return Err(Error::domain(format!("wright_moment needs delta > -1, got {delta}")));
    }
    Ok(gamma(1.0 + delta) * rgamma(1.0 + alpha.0 * delta))
}

/// Quadrature route for [`wright_moment`].
pub fn wright_moment_quadrature(alpha: FracOrder, delta: f64) -> Result<f64> {
    if !(delta > -1.0) {
        return Err(Error::domain(format!("wright_moment needs delta > -1, got {delta}")));
    }
    let acc = SeriesAccuracy::default();
    let z_max = wright_support(alpha, delta, acc)?;
    let points: Vec<f64> = (0..=z_max.ceil() as usize).map(|k| (k as f64).min(z_max)).collect();
    let f = |z: f64| {
        if z == 0.0 {
            return if delta == 0.0 { wright_phi(alpha, 0.0, acc).unwrap_or(0.0) } else { 0.0 };
        }
        z.powf(delta) * wright_phi(alpha, z, acc).unwrap_or(f64::NAN)
    };
    let mut points = points;
    points.dedup();
    let r = integrate_adaptive_points(f, &points, QuadTol::new(1e-15, 1e-12))?;
    Ok(r.value)
}

/// Smallest integer z where z^δ Φ_α(z) has dropped below 1e-16 of its scale.
fn wright_support(alpha: FracOrder, delta: f64, acc: SeriesAccuracy) -> Result<f64> {
    let head = wright_phi(alpha, 0.0, acc)?;
    let mut z = 1.0_f64;
    loop {
        let v = z.powf(delta.max(0.0) + 1.0) * wright_phi(alpha, z, acc)?;
        if v < 1e-16 * head {
            return Ok(z);
        }
        z += 1.0;
        if z > 1e4 {
            return Err(Error::AccuracyCeiling("Wright density support search diverged".into()));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fo(a: f64) -> FracOrder {
        FracOrder::new(a).unwrap()
    }

    #[test]
    fn order_rejects_endpoints() {
        assert!(FracOrder::new(0.0).is_err());
        assert!(FracOrder::new(1.0).is_err());
        assert!(FracOrder::new(0.5).is_ok());
    }

    #[test]
    fn accuracy_validation() {
        assert!(SeriesAccuracy::new(1e-17, 100).is_err());
        assert!(SeriesAccuracy::new(1e-12, 8).is_err());
        assert!(SeriesAccuracy::new(1e-12, 16).is_ok());
    }

    #[test]
    fn g_alpha_values() {
        assert_eq!(g_alpha(fo(0.5), 0.0), 0.0);
        assert_eq!(g_alpha(fo(0.5), -1.0), 0.0);
        assert!((g_alpha(fo(0.5), 1.0) - 0.564_189_583_547_756_3).abs() < 1e-15);
        assert!((g_alpha(fo(0.5), 4.0) - 0.282_094_791_773_878_1).abs() < 1e-15);
    }

    #[test]
    fn beta_examples() {
        assert!((beta_convolution(1.0, 1.0, 0.0, 2.0).unwrap() - 2.0).abs() < 1e-14);
        assert!((beta_convolution(0.5, 0.5, 0.0, 1.0).unwrap() - PI).abs() < 1e-13);
        assert!((beta_convolution(0.5, 1.0, 1.0, 2.0).unwrap() - 2.0).abs() < 1e-13);
        assert!((beta_convolution_quadrature(0.5, 0.5, 0.0, 1.0).unwrap() - PI).abs() < 1e-11);
        assert!(beta_convolution(0.5, 0.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn wright_half_order_closed_form() {
        let acc = SeriesAccuracy::default();
        for k in 0..=50 {
            let z = 0.1 * k as f64;
            let want = (-z * z / 4.0).exp() / PI.sqrt();
            let got = wright_phi(fo(0.5), z, acc).unwrap();
            assert!(((got - want) / want).abs() < 1e-8, "z = {z}: {got} vs {want}");
        }
    }

    #[test]
    fn wright_reference_values() {
        // Direct series at 60 digits.
        let cases = [
            (0.3, 0.5, 0.561_001_648_731_664_3),
            (0.3, 2.0, 0.168_400_306_226_783_12),
            (0.7, 0.5, 0.471_850_995_007_771_1),
            (0.7, 1.5, 0.472_423_811_779_228_8),
            (0.7, 3.0, 0.007_451_474_682_640_964),
            (0.9, 0.8, 0.594_063_884_345_995_6),
            (0.1, 1.0, 0.370_290_462_751_490_8),
            (0.3, 6.0, 0.001_785_891_928_444_776_7),
            (0.7, 4.0, 2.526_987_436_081_917_8e-6),
        ];
        let acc = SeriesAccuracy::default();
        for (a, z, want) in cases {
            let got = wright_phi(fo(a), z, acc).unwrap();
            assert!((got - want).abs() < 1e-12, "alpha = {a}, z = {z}: {got} vs {want}");
        }
    }

    #[test]
    fn plain_series_reports_non_convergence() {
        let acc = SeriesAccuracy::new(1e-3, 16).unwrap();
        assert!(matches!(
            wright_phi(fo(0.3), 10.0, acc),
            Err(Error::SeriesNotConverged { .. })
        ));
    }

    #[test]
    fn moment_examples() {
        assert!((wright_moment(fo(0.3), 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((wright_moment(fo(0.5), 1.0).unwrap() - 1.128_379_167_095_512_6).abs() < 1e-14);
        assert!((wright_moment(fo(0.5), 2.0).unwrap() - 2.0).abs() < 1e-14);
        assert!(wright_moment(fo(0.5), -1.0).is_err());
    }
}
