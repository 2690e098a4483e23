//! Exact product-integration weights against hat functions.
//!
//! For a node m of the time grid and a target node k ≥ m, the hat ℓ_m
//! (restricted to [0, t_k]) is integrated against the kernel σ ↦ w(σ) with
//! σ = t_k - s. Everything is reduced to primitives
//! P0(σ) = ∫_0^σ w and P1(σ) = ∫_0^σ r w(r) dr.

use crate::error::Result;
use crate::specfun::mittag_leffler;
use crate::timegrid::TimeGrid;

/// Gaps σ_{m-1} > σ_m > σ_{m+1} from the target node k to the hat's support points.
#[derive(Debug, Clone, Copy)]
pub(crate) struct HatGaps {
    pub left: Option<f64>,
    pub centre: f64,
    pub right: Option<f64>,
}

impl HatGaps {
    pub fn new(grid: &TimeGrid, k: usize, m: usize) -> Self {
        debug_assert!(m <= k);
        let tk = grid.t(k);
        Self {
            left: (m > 0).then(|| tk - grid.t(m - 1)),
            centre: tk - grid.t(m),
            right: (m < k).then(|| tk - grid.t(m + 1)),
        }
    }
}

/// ∫ ℓ_m(s) w(t_k - s) ds given the primitives at the three gaps.
pub(crate) fn hat_integral(gaps: HatGaps, prim: impl Fn(f64) -> Result<(f64, f64)>) -> Result<f64> {
    let (c0, c1) = prim(gaps.centre)?;
    let mut total = 0.0;
    if let Some(sl) = gaps.left {
        // ℓ = (σ_{m-1} - σ) / (σ_{m-1} - σ_m) on [σ_m, σ_{m-1}].
        let (l0, l1) = prim(sl)?;
        let (i0, i1) = (l0 - c0, l1 - c1);
        total += (sl * i0 - i1) / (sl - gaps.centre);
    }
    if let Some(sr) = gaps.right {
        // ℓ = (σ - σ_{m+1}) / (σ_m - σ_{m+1}) on [σ_{m+1}, σ_m].
        let (r0, r1) = prim(sr)?;
        let (i0, i1) = (c0 - r0, c1 - r1);
        total += (i1 - sr * i0) / (gaps.centre - sr);
    }
    Ok(total)
}

/// Primitives of w(σ) = σ^{α-1} E_{α,α}(μ σ^α), the eigenvalue of ψ at gap σ.
pub(crate) fn psi_primitives(alpha: f64, mu: f64, sigma: f64) -> Result<(f64, f64)> {
    if sigma <= 0.0 {
        return Ok((0.0, 0.0));
    }
    let sa = sigma.powf(alpha);
    let x = mu * sa;
    if x.abs() <= 1.0 {
        let e1 = mittag_leffler(alpha, alpha + 1.0, x)?;
        let e2 = mittag_leffler(alpha, alpha + 2.0, x)?;
        Ok((sa * e1, sa * sigma * (e1 - e2)))
    } else {
        // Same primitives written through E_{α,1} and E_{α,2}, free of cancellation for |x| > 1.
        let e1 = mittag_leffler(alpha, 1.0, x)?;
        let e2 = mittag_leffler(alpha, 2.0, x)?;
        Ok(((e1 - 1.0) / mu, sigma * (e1 - e2) / mu))
    }
}

/// Primitives of w(σ) = σ^{α-1}.
pub(crate) fn power_primitives(alpha: f64, sigma: f64) -> (f64, f64) {
    if sigma <= 0.0 {
        return (0.0, 0.0);
    }
    let sa = sigma.powf(alpha);
    (sa / alpha, sa * sigma / (alpha + 1.0))
}

/// ∫_0^{t_k} (t_k - τ)^{α-1} ℓ_m(τ) dτ.
pub(crate) fn power_hat_weight(alpha: f64, grid: &TimeGrid, k: usize, m: usize) -> f64 {
    hat_integral(HatGaps::new(grid, k, m), |s| Ok(power_primitives(alpha, s))).expect("infallible")
}

/// Scalar ψ-hat weight for eigenvalue μ.
pub(crate) fn psi_hat_weight(alpha: f64, mu: f64, gaps: HatGaps) -> Result<f64> {
    hat_integral(gaps, |s| psi_primitives(alpha, mu, s))
}
