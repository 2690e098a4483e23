//! Subordinated families φ_t(τ) = ∫ Φ_α(z) T_t(τ^α z) dz and
//! ψ_t(τ) = α τ^{α-1} ∫ z Φ_α(z) T_t(τ^α z) dz.
//!
//! The density is integrated on dyadic panels [z_max 2^{-i-1}, z_max 2^{-i}]
//! plus an innermost panel at the origin, each with the same Gauss–Legendre
//! rule. The dyadic layout resolves e^{-xz} for every scale of x up to about
//! 2^48 / z_max, which covers the stiffest modes of the discretized operators.
//! Non-symmetrizable matrices take one Padé exponential per node.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::generator::{Assembled, GeneratorFamily};
use crate::specfun::quad::{integrate_adaptive, QuadTol};
use crate::specfun::{gamma, wright_phi, FracOrder, SeriesAccuracy, quad::gauss_legendre};

const DYADIC_PANELS: usize = 48;
const NEGLECTED_MASS: f64 = 1e-12;
const MASS_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct SubordinationQuadrature {
    alpha: FracOrder,
    z_max: f64,
    panel_nodes: usize,
    /// Ascending nodes.
    nodes: Vec<f64>,
    weights: Vec<f64>,
    density: Vec<f64>,
    rule: String,
}

impl SubordinationQuadrature {
    /// Builds the rule with z_max chosen so the neglected tail mass is below 1e-12.
    pub fn new(alpha: FracOrder, panel_nodes: usize) -> Result<Self> {
        let z_max = neglected_mass_cutoff(alpha)?;
        Self::with_z_max(alpha, panel_nodes, z_max)
    }

    pub fn with_z_max(alpha: FracOrder, panel_nodes: usize, z_max: f64) -> Result<Self> {
        if panel_nodes < 2 {
            return Err(Error::domain(format!("need at least 2 nodes per panel, got {panel_nodes}")));
        }
        if !(z_max > 0.0) || !z_max.is_finite() {
            return Err(Error::domain(format!("z_max must be positive, got {z_max}")));
        }
        let (x, w) = gauss_legendre(panel_nodes);
        let mut nodes = Vec::with_capacity((DYADIC_PANELS + 1) * panel_nodes);
        let mut weights = Vec::with_capacity(nodes.capacity());
        let inner = z_max * 0.5f64.powi(DYADIC_PANELS as i32);
        for k in 0..panel_nodes {
            nodes.push(0.5 * inner * (1.0 + x[k]));
            weights.push(0.5 * inner * w[k]);
        }
        for i in (0..DYADIC_PANELS).rev() {
            let lo = z_max * 0.5f64.powi(i as i32 + 1);
            for k in 0..panel_nodes {
                nodes.push(lo * (1.5 + 0.5 * x[k]));
                weights.push(0.5 * lo * w[k]);
            }
        }
        let acc = SeriesAccuracy::default();
        let density = nodes.iter().map(|z| wright_phi(alpha, *z, acc)).collect::<Result<Vec<_>>>()?;
        let quad = Self {
            alpha,
            z_max,
            panel_nodes,
            nodes,
            weights,
            density,
            rule: format!("gauss-legendre-{panel_nodes} on {} dyadic panels of [0, {z_max:.6}]", DYADIC_PANELS + 1),
        };
        let mass = quad.unit_mass();
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::QuadratureInvariant(format!("quadrature mass {mass} differs from 1")));
        }
        Ok(quad)
    }

    pub fn alpha(&self) -> FracOrder {
        self.alpha
    }

    pub fn z_max(&self) -> f64 {
        self.z_max
    }

    pub fn rule(&self) -> &str {
        &self.rule
    }

    pub fn panel_nodes(&self) -> usize {
        self.panel_nodes
    }

    /// (z_k, w_k) pairs, ascending in z.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// Σ w_k Φ_α(z_k).
    pub fn unit_mass(&self) -> f64 {
        self.weights.iter().zip(&self.density).map(|(w, p)| w * p).sum()
    }

    /// ∫ Φ_α(z) e^{-xz} dz; at x = -μτ^α this is the eigenvalue of φ.
    pub fn phi_scalar(&self, x: f64) -> f64 {
        self.laplace(x, 0)
    }

    /// α ∫ z Φ_α(z) e^{-xz} dz; the eigenvalue of τ^{1-α} ψ at x = -μτ^α.
    pub fn psi_scalar(&self, x: f64) -> f64 {
        self.alpha.value() * self.laplace(x, 1)
    }

    fn laplace(&self, x: f64, power: i32) -> f64 {
        let mut sum = 0.0;
        for ((z, w), p) in self.nodes.iter().zip(&self.weights).zip(&self.density) {
            let e = x * z;
            if e > 745.0 {
                break;
            }
            sum += w * p * z.powi(power) * (-e).exp();
        }
        sum
    }
}

/// Smallest z_max with ∫_{z_max}^∞ Φ_α < 1e-12, by bisection.
fn neglected_mass_cutoff(alpha: FracOrder) -> Result<f64> {
    let acc = SeriesAccuracy::default();
    let tail = |z: f64| -> Result<f64> {
        let mut far = z + 1.0;
        while wright_phi(alpha, far, acc)? > 1e-30 {
            far += 1.0;
        }
        let r = integrate_adaptive(|s| wright_phi(alpha, s, acc).unwrap_or(0.0), z, far, QuadTol::new(1e-18, 1e-10))?;
        Ok(r.value)
    };
    let mut hi = 1.0;
    while tail(hi)? >= NEGLECTED_MASS {
        hi += 1.0;
        if hi > 1e3 {
            return Err(Error::QuadratureInvariant("Wright tail search diverged".into()));
        }
    }
    let mut lo = hi - 1.0;
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        if tail(mid)? < NEGLECTED_MASS {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Phi,
    /// τ^{1-α} ψ.
    PsiWeighted,
}

fn scalar_map(quad: &SubordinationQuadrature, kind: Kind, x: f64) -> f64 {
    match kind {
        Kind::Phi => quad.phi_scalar(x),
        Kind::PsiWeighted => quad.psi_scalar(x),
    }
}

fn operator(op: &Assembled, tau: f64, quad: &SubordinationQuadrature, kind: Kind) -> DMatrix<f64> {
    let ta = tau.powf(quad.alpha.value());
    match op.spectral() {
        Some(sp) => sp.matrix_fn(|mu| scalar_map(quad, kind, -mu * ta)),
        None => dense_quadrature(op.matrix(), ta, quad, kind),
    }
}

fn dense_quadrature(l: &DMatrix<f64>, ta: f64, quad: &SubordinationQuadrature, kind: Kind) -> DMatrix<f64> {
    let n = l.nrows();
    let mut acc = DMatrix::zeros(n, n);
    for ((z, w), p) in quad.nodes.iter().zip(&quad.weights).zip(&quad.density) {
        let mut factor = w * p;
        if kind == Kind::PsiWeighted {
            factor *= quad.alpha.value() * z;
        }
        acc += (l * (ta * z)).exp() * factor;
    }
    acc
}

fn check_tau(tau: f64, strict: bool) -> Result<()> {
    let ok = if strict { tau > 0.0 } else { tau >= 0.0 };
    if !ok || !tau.is_finite() {
        let need = if strict { "> 0" } else { ">= 0" };
        return Err(Error::domain(format!("subordination time must be {need}, got {tau}")));
    }
    Ok(())
}

/// φ_t(τ) as a dense matrix.
pub fn phi_matrix(family: &GeneratorFamily, t: f64, tau: f64, quad: &SubordinationQuadrature) -> Result<DMatrix<f64>> {
    check_tau(tau, false)?;
    if tau == 0.0 {
        return Ok(DMatrix::identity(family.len(), family.len()));
    }
    Ok(operator(&*family.at(t)?, tau, quad, Kind::Phi))
}

/// τ^{1-α} ψ_t(τ), finite at τ = 0 where it equals I/Γ(α).
pub fn psi_weighted_matrix(
    family: &GeneratorFamily,
    t: f64,
    tau: f64,
    quad: &SubordinationQuadrature,
) -> Result<DMatrix<f64>> {
    check_tau(tau, false)?;
    if tau == 0.0 {
        let g = gamma(quad.alpha.value());
        return Ok(DMatrix::identity(family.len(), family.len()) / g);
    }
    Ok(operator(&*family.at(t)?, tau, quad, Kind::PsiWeighted))
}

/// ψ_t(τ) as a dense matrix, τ > 0.
pub fn psi_matrix(family: &GeneratorFamily, t: f64, tau: f64, quad: &SubordinationQuadrature) -> Result<DMatrix<f64>> {
    check_tau(tau, true)?;
    Ok(psi_weighted_matrix(family, t, tau, quad)? * tau.powf(quad.alpha.value() - 1.0))
}

fn apply(
    family: &GeneratorFamily,
    t: f64,
    tau: f64,
    v: &DVector<f64>,
    quad: &SubordinationQuadrature,
    kind: Kind,
) -> Result<DVector<f64>> {
    let op = family.at(t)?;
    let ta = tau.powf(quad.alpha.value());
    Ok(match op.spectral() {
        Some(sp) => sp.apply_fn(|mu| scalar_map(quad, kind, -mu * ta), v),
        None => dense_quadrature(op.matrix(), ta, quad, kind) * v,
    })
}

/// φ_t(τ) v.
pub fn phi_apply(
    family: &GeneratorFamily,
    t: f64,
    tau: f64,
    v: &DVector<f64>,
    quad: &SubordinationQuadrature,
) -> Result<DVector<f64>> {
    check_tau(tau, false)?;
    if tau == 0.0 {
        return Ok(v.clone());
    }
    apply(family, t, tau, v, quad, Kind::Phi)
}

/// ψ_t(τ) v, τ > 0.
pub fn psi_apply(
    family: &GeneratorFamily,
    t: f64,
    tau: f64,
    v: &DVector<f64>,
    quad: &SubordinationQuadrature,
) -> Result<DVector<f64>> {
    check_tau(tau, true)?;
    let w = apply(family, t, tau, v, quad, Kind::PsiWeighted)?;
    Ok(w * tau.powf(quad.alpha.value() - 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    /// ‖φ_s(t-s) v‖_∞.
    pub lhs_norm: f64,
    /// (panel count, ‖φ_s(t-s)v - (g_{1-α} * ψ_s)(t-s)v‖_∞) per ladder level.
    pub discrepancies: Vec<(usize, f64)>,
}

impl ConsistencyReport {
    /// Ratios of successive discrepancies (coarse / fine).
    pub fn reduction_factors(&self) -> Vec<f64> {
        self.discrepancies.windows(2).map(|w| w[0].1 / w[1].1).collect()
    }

    pub fn max_discrepancy(&self) -> f64 {
        self.discrepancies.iter().map(|d| d.1).fold(0.0, f64::max)
    }
}

/// Compares φ_s(t-s) v with the convolution (g_{1-α} * ψ_s)(t-s) v computed
/// by the composite midpoint rule on each entry of `ladder` (panel counts).
///
/// Both singular endpoints are removed by power substitutions on the two
/// halves of [0, t-s].
pub fn phi_psi_consistency(
    family: &GeneratorFamily,
    t: f64,
    s: f64,
    ladder: &[usize],
    v: &DVector<f64>,
    quad: &SubordinationQuadrature,
) -> Result<ConsistencyReport> {
    if !(t > s) {
        return Err(Error::domain(format!("consistency check needs s < t, got s = {s}, t = {t}")));
    }
    let alpha = quad.alpha.value();
    let gap = t - s;
    let lhs = phi_apply(family, s, gap, v, quad)?;
    let lhs_norm = lhs.amax();
    let rg = 1.0 / gamma(1.0 - alpha);
    let mut discrepancies = Vec::with_capacity(ladder.len());
    for &panels in ladder {
        if panels == 0 {
            return Err(Error::domain("ladder entries must be positive"));
        }
        let mut rhs = DVector::zeros(v.len());
        // Left half: σ = u^{1/α}.
        let u_end = (0.5 * gap).powf(alpha);
        let du = u_end / panels as f64;
        for i in 0..panels {
            let u = (i as f64 + 0.5) * du;
            let sigma = u.powf(1.0 / alpha);
            let psi_w = apply(family, s, sigma, v, quad, Kind::PsiWeighted)?;
            rhs += psi_w * (du / alpha * rg * (gap - sigma).powf(-alpha));
        }
        // Right half: gap - σ = w^{1/(1-α)}.
        let w_end = (0.5 * gap).powf(1.0 - alpha);
        let dw = w_end / panels as f64;
        for i in 0..panels {
            let w = (i as f64 + 0.5) * dw;
            let sigma = gap - w.powf(1.0 / (1.0 - alpha));
            let psi = apply(family, s, sigma, v, quad, Kind::PsiWeighted)? * sigma.powf(alpha - 1.0);
            rhs += psi * (dw / (1.0 - alpha) * rg);
        }
        discrepancies.push((panels, (&lhs - rhs).amax()));
    }
    Ok(ConsistencyReport { lhs_norm, discrepancies })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{Preset, SpatialGrid};
    use crate::specfun::mittag_leffler;

    fn quad(alpha: f64) -> SubordinationQuadrature {
        SubordinationQuadrature::new(FracOrder::new(alpha).unwrap(), 16).unwrap()
    }

    #[test]
    fn rule_is_ordered_and_normalized() {
        let q = quad(0.5);
        let z: Vec<f64> = q.nodes().map(|p| p.0).collect();
        assert!(z.windows(2).all(|w| w[0] < w[1]));
        assert!((q.unit_mass() - 1.0).abs() < 1e-9);
        assert!(SubordinationQuadrature::with_z_max(q.alpha(), 16, 1.0).is_err());
    }

    #[test]
    fn scalar_maps_match_mittag_leffler() {
        for alpha in [0.3, 0.5, 0.7] {
            let q = quad(alpha);
            for x in [0.01, 0.5, 3.0, 40.0, 1e3, 1e6] {
                let e = mittag_leffler(alpha, 1.0, -x).unwrap();
                assert!(((q.phi_scalar(x) - e) / e).abs() < 1e-8, "alpha {alpha} x {x}");
                let e = mittag_leffler(alpha, alpha, -x).unwrap();
                assert!(((q.psi_scalar(x) - e) / e).abs() < 1e-8, "alpha {alpha} x {x}");
            }
        }
    }

    #[test]
    fn zero_time_and_zero_rate() {
        let q = quad(0.5);
        let fam = GeneratorFamily::scalar_constant(0.0, 1.0).unwrap();
        let v = DVector::from_element(1, 2.0);
        assert_eq!(phi_apply(&fam, 0.3, 0.0, &v, &q).unwrap(), v);
        assert!(psi_apply(&fam, 0.3, 0.0, &v, &q).is_err());
        let tau: f64 = 0.7;
        let got = psi_apply(&fam, 0.3, tau, &v, &q).unwrap()[0];
        let want = 2.0 * tau.powf(-0.5) / std::f64::consts::PI.sqrt();
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }

    #[test]
    fn matrix_route_matches_spectral_route() {
        let fam = GeneratorFamily::from_preset(Preset::Advection1d, 6, 1.0).unwrap();
        let q = quad(0.6);
        let op = fam.at(0.0).unwrap();
        for kind in [Kind::Phi, Kind::PsiWeighted] {
            let spectral = operator(&op, 0.2, &q, kind);
            let dense = dense_quadrature(op.matrix(), 0.2f64.powf(0.6), &q, kind);
            let diff = (&spectral - &dense).amax();
            assert!(diff < 1e-9 * spectral.amax(), "{diff} vs {}", spectral.amax());
        }
    }

    #[test]
    fn eigenvector_is_mapped_by_mittag_leffler() {
        let fam = GeneratorFamily::from_preset(Preset::Laplace1d, 3, 1.0).unwrap();
        let q = quad(0.5);
        let h = 0.25f64;
        let mu = -(2.0 / (h * h)) * (1.0 - (std::f64::consts::PI * h).cos());
        let e = DVector::from_fn(3, |i, _| (std::f64::consts::PI * (i + 1) as f64 * h).sin());
        let tau: f64 = 0.3;
        let got = phi_apply(&fam, 0.0, tau, &e, &q).unwrap();
        let ml = mittag_leffler(0.5, 1.0, mu * tau.sqrt()).unwrap();
        assert!((got - &e * ml).amax() < 1e-10);
    }

    #[test]
    fn consistency_ladder_converges() {
        let fam = GeneratorFamily::scalar_constant(1.5, 2.0).unwrap();
        let q = quad(0.5);
        let v = DVector::from_element(1, 1.0);
        let r = phi_psi_consistency(&fam, 1.0, 0.0, &[4, 8, 16, 32], &v, &q).unwrap();
        assert!(r.reduction_factors().iter().all(|f| *f >= 1.5), "{r:?}");
        let zero = GeneratorFamily::scalar_constant(0.0, 2.0).unwrap();
        let r0 = phi_psi_consistency(&zero, 1.0, 0.0, &[64], &v, &q).unwrap();
        assert!((r0.lhs_norm - 1.0).abs() < 1e-9);
        assert!(r0.max_discrepancy() < 1e-3);
        let grid_fam = GeneratorFamily::from_matrix_fn(
            SpatialGrid::new(1, 2).unwrap(),
            |_| DMatrix::from_row_slice(2, 2, &[-3.0, 1.0, 1.0, -2.0]),
            1.0,
            2.0,
        )
        .unwrap();
        let v2 = DVector::from_vec(vec![1.0, -1.0]);
        let r2 = phi_psi_consistency(&grid_fam, 1.0, 0.2, &[4, 8, 16], &v2, &q).unwrap();
        assert!(r2.reduction_factors().iter().all(|f| *f >= 1.5), "{r2:?}");
    }
}
