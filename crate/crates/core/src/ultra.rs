//! Small-time L^p → L^q decay of the semigroup and of the solution operators.
//!
//! The semigroup exponent λ_A is measured, not assumed: the slope of
//! log ‖exp(τL)‖_{p→q} against log τ, divided by -(1/p - 1/q). Subordination
//! predicts the solution operators decay with α times that rate, which is
//! what [`verify_s_decay`] and [`verify_p_decay`] test.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fit::{fit_power_law, PowerFit};
use crate::generator::{interpolated_norm_bound, operator_norm, GeneratorFamily};
use crate::mild::{DecayConstants, FracParams};
use crate::par::{try_map_indexed, Exec};
use crate::volterra::SolutionOperatorTable;

/// Regressions below this R² are rejected.
pub const MIN_R_SQUARED: f64 = 0.95;

fn smoothing_gap(p: f64, q: f64) -> f64 {
    1.0 / p - 1.0 / q
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemigroupFit {
    pub p: f64,
    pub q: f64,
    pub fit: PowerFit,
    /// `None` when p = q.
    pub lambda_a: Option<f64>,
    pub samples: Vec<(f64, f64)>,
}

/// Fits ‖exp(τ L(t))‖_{p→q} over `taus`.
pub fn semigroup_fit(family: &GeneratorFamily, t: f64, taus: &[f64], p: f64, q: f64) -> Result<SemigroupFit> {
    let op = family.at(t)?;
    let norms = taus
        .iter()
        .map(|&tau| operator_norm(&op.exp_scaled(tau), family.grid(), p, q))
        .collect::<Result<Vec<_>>>()?;
    let gap = smoothing_gap(p, q);
    let samples: Vec<(f64, f64)> = taus.iter().copied().zip(norms.iter().copied()).collect();
    let fit = fit_power_law(taus, &norms)?;
    let lambda_a = (gap != 0.0).then(|| -fit.slope / gap);
    Ok(SemigroupFit { p, q, fit, lambda_a, samples })
}

/// λ_A from the semigroup at t = 0.
pub fn measure_semigroup_lambda(family: &GeneratorFamily, taus: &[f64], p: f64, q: f64) -> Result<f64> {
    if smoothing_gap(p, q) <= 0.0 {
        return Err(Error::domain(format!("pair ({p}, {q}) carries no smoothing exponent")));
    }
    let sf = semigroup_fit(family, 0.0, taus, p, q)?;
    if sf.fit.r_squared < MIN_R_SQUARED {
        return Err(Error::FitRejected(format!("semigroup fit R² = {:.4}", sf.fit.r_squared)));
    }
    Ok(sf.lambda_a.expect("positive smoothing gap"))
}

/// Gaps in [4·smallest step, T/4].
pub fn default_window(ops: &SolutionOperatorTable) -> (f64, f64) {
    let g = ops.grid();
    (4.0 * g.min_step(), 0.25 * g.horizon())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayTarget {
    /// S(t, 0).
    Solution,
    /// (t - τ)^{1-α} P(t, τ) at τ = 0.
    RegularizedP,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairFit {
    pub p: f64,
    pub q: f64,
    pub expected_slope: f64,
    pub fit: PowerFit,
    /// |fit - expected| / |expected|, or the absolute slope when nothing is expected.
    pub slope_error: f64,
    pub samples: Vec<(f64, f64)>,
}

impl PairFit {
    pub fn constant(&self) -> f64 {
        self.fit.constant()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkippedPair {
    pub p: f64,
    pub q: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UltraReport {
    pub target: DecayTarget,
    pub alpha: f64,
    pub measured_lambda_a: f64,
    pub fit_window: (f64, f64),
    pub fits: Vec<PairFit>,
    pub skipped: Vec<SkippedPair>,
}

impl UltraReport {
    pub fn pair(&self, p: f64, q: f64) -> Option<&PairFit> {
        self.fits.iter().find(|f| f.p == p && f.q == q)
    }
}

fn verify(
    family: &GeneratorFamily,
    ops: &SolutionOperatorTable,
    pairs: &[(f64, f64)],
    window: Option<(f64, f64)>,
    lambda_a: f64,
    target: DecayTarget,
    exec: Exec,
) -> Result<UltraReport> {
    let alpha = ops.alpha();
    let (lo, hi) = window.unwrap_or_else(|| default_window(ops));
    let grid = ops.grid();
    let nodes: Vec<usize> = (1..grid.len()).filter(|&k| grid.t(k) >= lo && grid.t(k) <= hi).collect();
    if nodes.len() < 3 {
        return Err(Error::FitRejected(format!("only {} grid nodes inside the fit window", nodes.len())));
    }
    let limit = match target {
        DecayTarget::Solution => 1.0,
        DecayTarget::RegularizedP => 2.0,
    };
    let mut fits = Vec::new();
    let mut skipped = Vec::new();
    for &(p, q) in pairs {
        let gap = smoothing_gap(p, q);
        if lambda_a * gap >= limit {
            skipped.push(SkippedPair { p, q, reason: format!("lambda_A (1/p - 1/q) = {} >= {limit}", lambda_a * gap) });
            continue;
        }
        let norms = try_map_indexed(exec, nodes.len(), |i| {
            let k = nodes[i];
            let m: &DMatrix<f64> = match target {
                DecayTarget::Solution => ops.s(k, 0),
                DecayTarget::RegularizedP => ops.p_weighted(k, 0),
            };
            operator_norm(m, family.grid(), p, q)
        })?;
        let ts: Vec<f64> = nodes.iter().map(|&k| grid.t(k)).collect();
        let fit = fit_power_law(&ts, &norms)?;
        let expected_slope = -alpha * lambda_a * gap;
        let slope_error = if expected_slope != 0.0 {
            ((fit.slope - expected_slope) / expected_slope).abs()
        } else {
            fit.slope.abs()
        };
        fits.push(PairFit { p, q, expected_slope, fit, slope_error, samples: ts.into_iter().zip(norms).collect() });
    }
    Ok(UltraReport { target, alpha, measured_lambda_a: lambda_a, fit_window: (lo, hi), fits, skipped })
}

/// Slopes of log ‖S(t,0)‖_{p→q} against log t.
pub fn verify_s_decay(
    family: &GeneratorFamily,
    ops: &SolutionOperatorTable,
    pairs: &[(f64, f64)],
    window: Option<(f64, f64)>,
    lambda_a: f64,
) -> Result<UltraReport> {
    verify(family, ops, pairs, window, lambda_a, DecayTarget::Solution, Exec::default())
}

/// Slopes of log ‖t^{1-α} P(t,0)‖_{p→q} against log t.
pub fn verify_p_decay(
    family: &GeneratorFamily,
    ops: &SolutionOperatorTable,
    pairs: &[(f64, f64)],
    window: Option<(f64, f64)>,
    lambda_a: f64,
) -> Result<UltraReport> {
    verify(family, ops, pairs, window, lambda_a, DecayTarget::RegularizedP, Exec::default())
}

/// Certified prefactors over the whole table: C_S = sup t^b ‖S(t,0)‖_{q→2p} and
/// C_P = sup (t-τ)^a ‖P(t,τ)‖_{2→2p}, with norms bounded by Riesz–Thorin.
pub fn decay_constants(family: &GeneratorFamily, ops: &SolutionOperatorTable, params: &FracParams) -> Result<DecayConstants> {
    let grid = ops.grid();
    let spatial = family.grid();
    let (q, r) = (params.q_global, params.norm_exponent());
    let alpha = ops.alpha();
    let mut c_s: f64 = 0.0;
    for k in 1..grid.len() {
        let t = grid.t(k);
        c_s = c_s.max(t.powf(params.b) * interpolated_norm_bound(ops.s(k, 0), spatial, q.max(1.0), r)?);
    }
    let mut c_p: f64 = 0.0;
    for k in 1..grid.len() {
        for j in 0..k {
            let gap = grid.t(k) - grid.t(j);
            let scale = gap.powf(params.a + alpha - 1.0);
            c_p = c_p.max(scale * interpolated_norm_bound(ops.p_weighted(k, j), spatial, 2.0, r)?);
        }
    }
    Ok(DecayConstants { c_s, c_p })
}

/// Time grid parameters that put S(t, 0) in the semigroup's power-law window:
/// t^α ∈ [2.5 τ_lo, τ_hi / 2], horizon 4 t_hi.
pub fn solution_window(alpha: f64, tau_lo: f64, tau_hi: f64) -> Result<((f64, f64), f64)> {
    let lo = (2.5 * tau_lo).powf(1.0 / alpha);
    let hi = (0.5 * tau_hi).powf(1.0 / alpha);
    if !(hi > lo) {
        return Err(Error::domain(format!("semigroup window [{tau_lo}, {tau_hi}] is too narrow")));
    }
    Ok(((lo, hi), 4.0 * hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::geomspace;
    use crate::generator::Preset;
    use crate::specfun::{mittag_leffler, FracOrder};
    use crate::subordination::SubordinationQuadrature;
    use crate::timegrid::TimeGrid;
    use crate::volterra::{solution_operators, VolterraOptions};

    #[test]
    fn heat_kernel_exponents() {
        let fam = GeneratorFamily::from_preset(Preset::Laplace1d, 63, 1.0).unwrap();
        let taus = geomspace(1e-3, 2e-2, 12);
        let lam = measure_semigroup_lambda(&fam, &taus, 1.0, f64::INFINITY).unwrap();
        assert!((lam - 0.5).abs() < 0.05, "1D lambda_A = {lam}");
        // Equal exponents: only the slow e^{-μ₁τ} decay remains, log-slope -μ₁τ.
        let flat = semigroup_fit(&fam, 0.0, &geomspace(1e-4, 2e-3, 8), 2.0, 2.0).unwrap();
        assert!(flat.fit.slope.abs() < 0.02 && flat.lambda_a.is_none(), "{}", flat.fit.slope);

        let fam2 = GeneratorFamily::from_preset(Preset::Laplace2d, 31, 1.0).unwrap();
        let taus2 = geomspace(4e-3, 2e-2, 8);
        let lam2 = measure_semigroup_lambda(&fam2, &taus2, 1.0, f64::INFINITY).unwrap();
        assert!((lam2 - 1.0).abs() < 0.1, "2D lambda_A = {lam2}");
    }

    #[test]
    fn scalar_operators_are_flat_and_bounded() {
        let alpha = 0.5;
        let fam = GeneratorFamily::scalar_constant(2.0, 1.0).unwrap();
        let quad = SubordinationQuadrature::new(FracOrder::new(alpha).unwrap(), 16).unwrap();
        let grid = TimeGrid::graded(1e-2, 24, 1.5).unwrap();
        let (_, ops) = solution_operators(&fam, &grid, &quad, &VolterraOptions::default()).unwrap();
        let s = verify_s_decay(&fam, &ops, &[(2.0, 2.0)], None, 0.5).unwrap();
        let pf = &s.fits[0];
        assert!(pf.fit.slope.abs() < 0.1);
        assert!(pf.samples.iter().all(|&(t, n)| (n - mittag_leffler(alpha, 1.0, -2.0 * t.powf(alpha)).unwrap()).abs() < 1e-8));
        let p = verify_p_decay(&fam, &ops, &[(2.0, 2.0)], None, 0.5).unwrap();
        let bound = 1.0 / crate::specfun::gamma(alpha);
        assert!(p.fits[0].samples.iter().all(|&(_, n)| n <= bound + 1e-12));
    }

    #[test]
    fn hypotheses_skip_pairs() {
        let fam = GeneratorFamily::scalar_constant(1.0, 1.0).unwrap();
        let quad = SubordinationQuadrature::new(FracOrder::new(0.5).unwrap(), 16).unwrap();
        let grid = TimeGrid::graded(1.0, 12, 1.0).unwrap();
        let (_, ops) = solution_operators(&fam, &grid, &quad, &VolterraOptions::default()).unwrap();
        let r = verify_s_decay(&fam, &ops, &[(1.0, f64::INFINITY), (2.0, 2.0)], Some((0.05, 1.0)), 1.5).unwrap();
        assert_eq!(r.skipped.len(), 1);
        assert_eq!(r.fits.len(), 1);
    }

    #[test]
    fn solution_operators_decay_at_alpha_times_semigroup_rate() {
        let alpha = 0.5;
        let fam = GeneratorFamily::from_preset(Preset::Laplace1d, 63, 1.0).unwrap();
        let (tau_lo, tau_hi) = (1e-3, 2e-2);
        let lam = measure_semigroup_lambda(&fam, &geomspace(tau_lo, tau_hi, 12), 1.0, f64::INFINITY).unwrap();
        let (window, horizon) = solution_window(alpha, tau_lo, tau_hi).unwrap();
        let quad = SubordinationQuadrature::new(FracOrder::new(alpha).unwrap(), 16).unwrap();
        let grid = TimeGrid::graded(horizon, 48, 2.0).unwrap();
        let (_, ops) = solution_operators(&fam, &grid, &quad, &VolterraOptions::default()).unwrap();
        let pairs = [(1.0, 2.0), (2.0, f64::INFINITY), (1.0, f64::INFINITY)];
        let s = verify_s_decay(&fam, &ops, &pairs, Some(window), lam).unwrap();
        let p = verify_p_decay(&fam, &ops, &pairs, Some(window), lam).unwrap();
        for f in s.fits.iter().chain(&p.fits) {
            assert!(f.slope_error < 0.1);
            assert!(f.fit.r_squared >= MIN_R_SQUARED);
        }
        // Halving the window keeps the slopes within 5%.
        let half = (window.0, (window.0 * window.1).sqrt());
        let s_half = verify_s_decay(&fam, &ops, &pairs, Some(half), lam).unwrap();
        for (a, b) in s.fits.iter().zip(&s_half.fits) {
            assert!(((a.fit.slope - b.fit.slope) / a.fit.slope).abs() < 0.05);
        }
    }

    #[test]
    fn window_mapping() {
        let ((lo, hi), horizon) = solution_window(0.5, 1e-3, 2e-2).unwrap();
        assert!((lo - 6.25e-6).abs() < 1e-18 && (hi - 1e-4).abs() < 1e-16 && (horizon - 4e-4).abs() < 1e-16);
        assert!(solution_window(0.5, 1e-2, 2e-2).is_err());
    }
}
