//! Reference solvers that share no code with the representation formula.
//!
//! The L1 scheme replaces u by its piecewise-linear interpolant inside the
//! Caputo derivative and steps implicitly in the generator, with the
//! nonlinearity lagged one step.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::generator::GeneratorFamily;
use crate::specfun::{gamma, mittag_leffler};
use crate::timegrid::TimeGrid;

/// Coefficients a_{k,j} with ∂^α u(t_k) ≈ Σ_{j<k} a_{k,j} (u_{j+1} - u_j).
#[derive(Debug, Clone)]
pub struct L1Weights {
    alpha: f64,
    grid: TimeGrid,
    /// rows[k][j] for j < k; rows[0] is empty.
    rows: Vec<Vec<f64>>,
}

/// a_{k,j} = [(t_k - t_j)^{1-α} - (t_k - t_{j+1})^{1-α}] / (Γ(2-α)(t_{j+1} - t_j)).
pub fn l1_weights(alpha: f64, grid: &TimeGrid) -> Result<L1Weights> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("L1 weights need alpha in (0, 1), got {alpha}")));
    }
    let e = 1.0 - alpha;
    let scale = 1.0 / gamma(2.0 - alpha);
    let t = grid.nodes();
    let rows = (0..t.len())
        .map(|k| {
            (0..k)
                .map(|j| scale * ((t[k] - t[j]).powf(e) - (t[k] - t[j + 1]).powf(e)) / (t[j + 1] - t[j]))
                .collect()
        })
        .collect();
    Ok(L1Weights { alpha, grid: grid.clone(), rows })
}

impl L1Weights {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.rows[k]
    }

    /// Discrete Caputo derivative of a scalar sequence at node k ≥ 1.
    pub fn derivative(&self, k: usize, u: &[f64]) -> f64 {
        self.rows[k].iter().enumerate().map(|(j, a)| a * (u[j + 1] - u[j])).sum()
    }
}

/// Grading exponent (2 - α)/α that restores the L1 scheme's 2 - α rate for
/// solutions behaving like t^α near the origin.
pub fn l1_grading(alpha: f64) -> f64 {
    (2.0 - alpha) / alpha
}

#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub grid: TimeGrid,
    pub values: Vec<DVector<f64>>,
}

/// L1 solve of ∂^α u = L(t)u + f(t) + J(u) with J applied pointwise and lagged.
pub fn l1_solve(
    family: &GeneratorFamily,
    grid: &TimeGrid,
    u0: &DVector<f64>,
    forcing: impl Fn(f64) -> DVector<f64>,
    nonlinearity: impl Fn(f64) -> f64,
    alpha: f64,
) -> Result<OracleSolution> {
    let n = family.len();
    if u0.len() != n {
        return Err(Error::domain(format!("initial datum has {} entries, grid has {n}", u0.len())));
    }
    let weights = l1_weights(alpha, grid)?;
    let mut values: Vec<DVector<f64>> = vec![u0.clone()];
    for k in 1..grid.len() {
        let row = weights.row(k);
        let lead = row[k - 1];
        let prev = &values[k - 1];
        let mut rhs = prev * lead + forcing(grid.t(k)) + prev.map(&nonlinearity);
        for j in 0..k - 1 {
            rhs -= (&values[j + 1] - &values[j]) * row[j];
        }
        let mut system = -family.at(grid.t(k))?.matrix().clone();
        for i in 0..n {
            system[(i, i)] += lead;
        }
        let next = system
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::domain(format!("L1 step matrix is singular at t = {}", grid.t(k))))?;
        values.push(next);
    }
    Ok(OracleSolution { grid: grid.clone(), values })
}

/// E_α(-λ t^α) u0.
pub fn autonomous_closed_form(lambda: f64, alpha: f64, t: f64, u0: f64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::domain(format!("closed form needs lambda >= 0, got {lambda}")));
    }
    if t == 0.0 || lambda == 0.0 {
        return Ok(u0);
    }
    Ok(mittag_leffler(alpha, 1.0, -lambda * t.powf(alpha))? * u0)
}
