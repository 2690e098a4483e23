use nalgebra::DMatrix;

use super::{operator_norm_pair, GeneratorFamily, NormPair};
use crate::error::{Error, Result};
use crate::fit::fit_power_law;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeKind {
    /// (1 + |λ|) ‖(λ - A(t))⁻¹‖.
    Resolvent,
    /// ‖(A(t) - A(s)) A(τ)⁻¹‖.
    Holder,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtSample {
    pub kind: ProbeKind,
    pub t: f64,
    pub s: f64,
    pub tau: f64,
    pub lambda: f64,
    pub value: f64,
}

/// Measured constants of the sectorial resolvent bound and the Hölder condition.
#[derive(Debug, Clone, PartialEq)]
pub struct ATReport {
    /// max(1, max over probes of the scaled resolvent norm).
    pub m_est: f64,
    /// Smallest L with ‖(A(t)-A(s))A(τ)⁻¹‖ ≤ L|t-s|^θ over the probes (0 if autonomous).
    pub l_est: f64,
    pub theta_fit: f64,
    pub samples: Vec<AtSample>,
}

/// Negative real probes -10^k, k = -2..3.
pub fn default_probe_lambdas() -> Vec<f64> {
    (-2..=3).map(|k| -(10f64.powi(k))).collect()
}

const HOLDER_LEVELS: i32 = 8;

/// Samples the resolvent bound at `probe_lambdas` (negative reals) and fits the
/// Hölder exponent from pairs (t₀, t₀ + δ) with δ halving from the remaining
/// horizon. The reported exponent is the smallest per-base slope.
pub fn check_at_conditions(family: &GeneratorFamily, probe_ts: &[f64], probe_lambdas: &[f64]) -> Result<ATReport> {
    if let Some(l) = probe_lambdas.iter().find(|l| !(**l < 0.0)) {
        return Err(Error::domain(format!("resolvent probes must be negative reals, got {l}")));
    }
    let grid = family.grid();
    let n = family.len();
    let mut samples = Vec::new();
    let mut m_est: f64 = 1.0;
    for &t in probe_ts {
        let l = family.at(t)?.matrix().clone();
        for &lambda in probe_lambdas {
            // λ - A(t) = λ + L(t).
            let shifted = &l + DMatrix::identity(n, n) * lambda;
            let inv = shifted.try_inverse().ok_or(Error::SingularResolvent { lambda })?;
            let value = (1.0 + lambda.abs()) * operator_norm_pair(&inv, grid, NormPair::TwoTwo);
            if !value.is_finite() {
                return Err(Error::SingularResolvent { lambda });
            }
            m_est = m_est.max(value);
            samples.push(AtSample { kind: ProbeKind::Resolvent, t, s: t, tau: t, lambda, value });
        }
    }

    let mut theta_fit: f64 = 1.0;
    let mut any_motion = false;
    let mut holder: Vec<(f64, f64)> = Vec::new();
    for &t0 in probe_ts {
        let span = family.horizon() - t0;
        if span <= 0.0 {
            continue;
        }
        let base = family.at(t0)?;
        let inv = base
            .matrix()
            .clone()
            .try_inverse()
            .ok_or(Error::SingularResolvent { lambda: 0.0 })?;
        let (mut ds, mut ys) = (Vec::new(), Vec::new());
        for k in 1..=HOLDER_LEVELS {
            let delta = span * 0.5f64.powi(k);
            let diff = family.at(t0 + delta)?.matrix() - base.matrix();
            let value = operator_norm_pair(&(diff * &inv), grid, NormPair::TwoTwo);
            samples.push(AtSample { kind: ProbeKind::Holder, t: t0 + delta, s: t0, tau: t0, lambda: 0.0, value });
            ds.push(delta);
            ys.push(value);
            holder.push((delta, value));
        }
        if ys.iter().all(|y| *y == 0.0) {
            continue;
        }
        any_motion = true;
        let fit = fit_power_law(&ds, &ys)?;
        theta_fit = theta_fit.min(fit.slope);
    }
    let theta_fit = theta_fit.clamp(f64::MIN_POSITIVE, 1.0);
    let l_est = if any_motion {
        holder.iter().map(|(d, y)| y / d.powf(theta_fit)).fold(0.0, f64::max)
    } else {
        0.0
    };
    Ok(ATReport { m_est, l_est, theta_fit, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::Preset;

    #[test]
    fn autonomous_family_has_no_motion() {
        let fam = GeneratorFamily::from_preset(Preset::Laplace1d, 6, 1.0).unwrap();
        let r = check_at_conditions(&fam, &[0.0, 0.5], &default_probe_lambdas()).unwrap();
        assert!(r.samples.iter().filter(|s| s.kind == ProbeKind::Holder).all(|s| s.value == 0.0));
        assert_eq!(r.l_est, 0.0);
        assert!(r.m_est >= 1.0 && r.m_est.is_finite());
    }

    #[test]
    fn lipschitz_preset_fits_unit_exponent() {
        let fam = GeneratorFamily::from_preset(Preset::Lipschitz1d, 8, 1.0).unwrap();
        let r = check_at_conditions(&fam, &[0.0, 0.3], &default_probe_lambdas()).unwrap();
        assert!(r.theta_fit >= 0.9 && r.theta_fit <= 1.0, "theta = {}", r.theta_fit);
        assert!(r.l_est > 0.0);
    }

    #[test]
    fn holder_preset_fits_half() {
        let fam = GeneratorFamily::from_preset(Preset::Holder1d, 8, 1.0).unwrap();
        let r = check_at_conditions(&fam, &[0.0], &default_probe_lambdas()).unwrap();
        assert!((r.theta_fit - 0.5).abs() < 0.05, "theta = {}", r.theta_fit);
    }

    #[test]
    fn scalar_resolvent_bound() {
        let lambda0 = 0.5;
        let fam = GeneratorFamily::scalar_constant(lambda0, 1.0).unwrap();
        let lambdas = default_probe_lambdas();
        let r = check_at_conditions(&fam, &[0.0], &lambdas).unwrap();
        let want = lambdas
            .iter()
            .map(|l: &f64| (1.0 + l.abs()) / (l.abs() + lambda0))
            .fold(1.0, f64::max);
        assert!((r.m_est - want).abs() < 1e-12);
        assert!(check_at_conditions(&fam, &[0.0], &[1.0]).is_err());
    }
}
