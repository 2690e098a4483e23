//! Volterra corrections for time-dependent generators.
//!
//! Freezing the generator at the initial time τ gives the parametrix
//! φ_τ(t-τ), ψ_τ(t-τ). The defect of that guess is carried by the kernels
//!
//! Q̃(t,τ) = (L(t) - L(τ)) φ_τ(t-τ),   R̃(t,τ) = (L(t) - L(τ)) ψ_τ(t-τ),
//!
//! and the resolvents Q, R solve X = X̃ + ∫_τ^t R̃(t,s) X(s,τ) ds. All time
//! integrals are product integrals: the factor ψ_s(t-s), singular like
//! (t-s)^{α-1}, is integrated exactly against hat functions on the time
//! grid, and everything else is interpolated piecewise linearly.
//!
//! Tables are dense per node pair. A grid with K steps on an n-node spatial
//! grid stores about 2K²n² doubles per table set, so 2-D problems want K
//! in the low tens.

mod table;
mod weights;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::generator::GeneratorFamily;
use crate::par::Exec;
use crate::specfun::gamma;
use crate::subordination::{phi_matrix, psi_weighted_matrix, SubordinationQuadrature};
use crate::timegrid::TimeGrid;

pub use table::{KernelKind, KernelTable, TableRow, Tri};
use weights::{power_hat_weight, psi_hat_weight, HatGaps};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolterraOptions {
    /// Stop once successive iterates differ by less than this in the table sup-norm.
    pub tol: f64,
    pub max_iter: usize,
    pub exec: Exec,
}

impl Default for VolterraOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 50, exec: Exec::default() }
    }
}

impl VolterraOptions {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(Error::domain(format!("Volterra tolerance must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::domain("Volterra iteration cap must be at least 1"));
        }
        Ok(())
    }
}

fn check_pair(family: &GeneratorFamily, t: f64, tau: f64) -> Result<()> {
    if !(tau >= 0.0 && tau < t && t <= family.horizon()) {
        return Err(Error::domain(format!("kernels need 0 <= tau < t <= T, got t = {t}, tau = {tau}")));
    }
    Ok(())
}

fn generator_jump(family: &GeneratorFamily, t: f64, tau: f64) -> Result<DMatrix<f64>> {
    Ok(family.at(t)?.matrix() - family.at(tau)?.matrix())
}

/// Q̃(t,τ) = (L(t) - L(τ)) φ_τ(t-τ).
pub fn qtilde(family: &GeneratorFamily, t: f64, tau: f64, quad: &SubordinationQuadrature) -> Result<DMatrix<f64>> {
    check_pair(family, t, tau)?;
    if family.is_time_independent() {
        return Ok(DMatrix::zeros(family.len(), family.len()));
    }
    Ok(generator_jump(family, t, tau)? * phi_matrix(family, tau, t - tau, quad)?)
}

/// R̃(t,τ) = (L(t) - L(τ)) ψ_τ(t-τ).
pub fn rtilde(family: &GeneratorFamily, t: f64, tau: f64, quad: &SubordinationQuadrature) -> Result<DMatrix<f64>> {
    check_pair(family, t, tau)?;
    if family.is_time_independent() {
        return Ok(DMatrix::zeros(family.len(), family.len()));
    }
    let gap = t - tau;
    let psi = psi_weighted_matrix(family, tau, gap, quad)? * gap.powf(quad.alpha().value() - 1.0);
    Ok(generator_jump(family, t, tau)? * psi)
}

/// Frozen-generator operators and product-integration weights on a time grid.
#[derive(Debug, Clone)]
pub struct Parametrix {
    grid: TimeGrid,
    alpha: f64,
    dim: usize,
    time_independent: bool,
    /// φ_{t_j}(t_k - t_j); identity on the diagonal.
    phi: Tri<DMatrix<f64>>,
    /// (t_k - t_j)^{1-α} ψ_{t_j}(t_k - t_j); I/Γ(α) on the diagonal.
    psi_weighted: Tri<DMatrix<f64>>,
    /// Ω_{k,m} = ∫_0^{t_k} ψ_{t_m}(t_k - s) ℓ_m(s) ds.
    omega: Tri<DMatrix<f64>>,
    /// (L(t_k) - L(t_m)) Ω_{k,m}.
    omega_shift: Tri<DMatrix<f64>>,
    generators: Vec<DMatrix<f64>>,
}

impl Parametrix {
    pub fn build(
        family: &GeneratorFamily,
        grid: &TimeGrid,
        quad: &SubordinationQuadrature,
        exec: Exec,
    ) -> Result<Self> {
        if grid.horizon() > family.horizon() * (1.0 + 1e-12) {
            return Err(Error::domain(format!(
                "time grid reaches {} beyond the family horizon {}",
                grid.horizon(),
                family.horizon()
            )));
        }
        let alpha = quad.alpha().value();
        let dim = family.len();
        let nodes = grid.len();
        let eye = DMatrix::<f64>::identity(dim, dim);
        // Warm the generator cache and the spectral data once per node.
        let spectra = crate::par::try_map_indexed(exec, nodes, |m| {
            let asm = family.at(grid.t(m))?;
            if asm.spectral().is_none() {
                return Err(Error::NotSymmetrizable { t: grid.t(m) });
            }
            Ok(asm)
        })?;

        let phi = Tri::try_build(exec, nodes, |k, j| {
            if k == j {
                return Ok(eye.clone());
            }
            phi_matrix(family, grid.t(j), grid.t(k) - grid.t(j), quad)
        })?;
        let psi_weighted = Tri::try_build(exec, nodes, |k, j| {
            if k == j {
                return Ok(&eye / gamma(alpha));
            }
            psi_weighted_matrix(family, grid.t(j), grid.t(k) - grid.t(j), quad)
        })?;
        let omega = Tri::try_build(exec, nodes, |k, m| {
            if k == 0 {
                return Ok(DMatrix::zeros(dim, dim));
            }
            let sp = spectra[m].spectral().expect("checked above");
            let gaps = HatGaps::new(grid, k, m);
            let vals: Vec<f64> =
                sp.eigenvalues().iter().map(|&mu| psi_hat_weight(alpha, mu, gaps)).collect::<Result<_>>()?;
            Ok(sp.matrix_from_values(&DVector::from_vec(vals)))
        })?;
        let time_independent = family.is_time_independent();
        let omega_shift = Tri::try_build(exec, nodes, |k, m| {
            if time_independent || k == m {
                return Ok(DMatrix::zeros(dim, dim));
            }
            Ok((spectra[k].matrix() - spectra[m].matrix()) * omega.get(k, m))
        })?;
        let generators = spectra.iter().map(|a| a.matrix().clone()).collect();
        Ok(Self { grid: grid.clone(), alpha, dim, time_independent, phi, psi_weighted, omega, omega_shift, generators })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_time_independent(&self) -> bool {
        self.time_independent
    }

    pub fn phi(&self, k: usize, j: usize) -> &DMatrix<f64> {
        self.phi.get(k, j)
    }

    pub fn psi_weighted(&self, k: usize, j: usize) -> &DMatrix<f64> {
        self.psi_weighted.get(k, j)
    }

    /// Product-integration weight of ψ against the hat at node m, seen from node k.
    pub fn omega(&self, k: usize, m: usize) -> &DMatrix<f64> {
        self.omega.get(k, m)
    }

    /// Q̃ or R̃ on the grid (zero on the diagonal).
    pub fn forcing(&self, kind: KernelKind) -> Tri<DMatrix<f64>> {
        let nodes = self.grid.len();
        Tri::from_fn(nodes, |k, j| {
            if k == j || self.time_independent {
                return DMatrix::zeros(self.dim, self.dim);
            }
            let gap = self.grid.t(k) - self.grid.t(j);
            let jump = &self.generators[k] - &self.generators[j];
            match kind {
                KernelKind::Q => jump * self.phi.get(k, j),
                KernelKind::R => jump * self.psi_weighted.get(k, j) * gap.powf(self.alpha - 1.0),
            }
        })
    }

    /// One sweep X ↦ forcing + ∫ R̃ X under the grid quadrature.
    pub fn sweep(&self, forcing: &Tri<DMatrix<f64>>, current: &Tri<DMatrix<f64>>, exec: Exec) -> Tri<DMatrix<f64>> {
        Tri::try_build(exec, self.grid.len(), |k, j| {
            let mut acc = forcing.get(k, j).clone();
            for m in (j + 1)..k {
                acc.gemm(1.0, self.omega_shift.get(k, m), current.get(m, j), 1.0);
            }
            Ok(acc)
        })
        .expect("sweep is infallible")
    }
}

/// Largest ∞→∞ operator norm of an entrywise difference over the table.
fn table_distance(a: &Tri<DMatrix<f64>>, b: &Tri<DMatrix<f64>>) -> f64 {
    a.iter().zip(b.iter()).map(|((_, x), (_, y))| row_sum_norm(&(x - y))).fold(0.0, f64::max)
}

fn row_sum_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Convergence record of one Neumann iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct NeumannTrace {
    pub iterations: usize,
    /// Sup-norm change between successive iterates.
    pub changes: Vec<f64>,
    /// Sup-norm defect of the returned table in its own equation.
    pub residual: f64,
}

impl NeumannTrace {
    pub fn last_change(&self) -> f64 {
        self.changes.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone)]
pub struct ResolvedKernels {
    pub q: KernelTable,
    pub r: KernelTable,
    pub q_trace: NeumannTrace,
    pub r_trace: NeumannTrace,
    pub parametrix: Arc<Parametrix>,
}

fn neumann(par: &Parametrix, kind: KernelKind, opts: &VolterraOptions) -> Result<(Tri<DMatrix<f64>>, NeumannTrace)> {
    let forcing = par.forcing(kind);
    if par.time_independent {
        let trace = NeumannTrace { iterations: 1, changes: vec![0.0], residual: 0.0 };
        return Ok((forcing, trace));
    }
    let mut current = forcing.clone();
    let mut changes = Vec::new();
    for it in 1..=opts.max_iter {
        let next = par.sweep(&forcing, &current, opts.exec);
        let change = table_distance(&next, &current);
        changes.push(change);
        current = next;
        if change < opts.tol {
            let residual = table_distance(&par.sweep(&forcing, &current, opts.exec), &current);
            return Ok((current, NeumannTrace { iterations: it, changes, residual }));
        }
        if !change.is_finite() {
            break;
        }
    }
    Err(Error::VolterraNotConverged { iterations: opts.max_iter, last_change: *changes.last().unwrap_or(&f64::NAN) })
}

/// Solves the Q and R equations on the grid.
pub fn resolve_kernels(
    family: &GeneratorFamily,
    grid: &TimeGrid,
    quad: &SubordinationQuadrature,
    opts: &VolterraOptions,
) -> Result<ResolvedKernels> {
    opts.validate()?;
    let par = Parametrix::build(family, grid, quad, opts.exec)?;
    resolve_with(Arc::new(par), family.holder_theta(), opts)
}

/// Same as [`resolve_kernels`] on a prebuilt parametrix.
pub fn resolve_with(par: Arc<Parametrix>, holder_theta: f64, opts: &VolterraOptions) -> Result<ResolvedKernels> {
    opts.validate()?;
    let omega_bar = holder_theta - par.alpha + 1.0;
    if !(omega_bar > 0.0) {
        return Err(Error::domain(format!("need theta - alpha + 1 > 0, got {omega_bar}")));
    }
    let (q, q_trace) = neumann(&par, KernelKind::Q, opts)?;
    let (r, r_trace) = neumann(&par, KernelKind::R, opts)?;
    Ok(ResolvedKernels {
        q: KernelTable::new(KernelKind::Q, q, omega_bar - 1.0),
        r: KernelTable::new(KernelKind::R, r, holder_theta - 1.0),
        q_trace,
        r_trace,
        parametrix: par,
    })
}

/// S and the regularized P on the grid, plus the weights of the Duhamel sum.
#[derive(Debug, Clone)]
pub struct SolutionOperatorTable {
    grid: TimeGrid,
    alpha: f64,
    s: Tri<DMatrix<f64>>,
    u: Tri<DMatrix<f64>>,
    p_weighted: Tri<DMatrix<f64>>,
    v_weighted: Tri<DMatrix<f64>>,
    duhamel: Tri<DMatrix<f64>>,
}

impl SolutionOperatorTable {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// S(t_k, t_j); the identity when k = j.
    pub fn s(&self, k: usize, j: usize) -> &DMatrix<f64> {
        self.s.get(k, j)
    }

    /// U(t_k, t_j) = S - φ.
    pub fn u(&self, k: usize, j: usize) -> &DMatrix<f64> {
        self.u.get(k, j)
    }

    /// (t_k - t_j)^{1-α} P(t_k, t_j); I/Γ(α) when k = j.
    pub fn p_weighted(&self, k: usize, j: usize) -> &DMatrix<f64> {
        self.p_weighted.get(k, j)
    }

    /// (t_k - t_j)^{1-α} V(t_k, t_j).
    pub fn v_weighted(&self, k: usize, j: usize) -> &DMatrix<f64> {
        self.v_weighted.get(k, j)
    }

    /// W_{k,m} with ∫_0^{t_k} P(t_k, s) f(s) ds ≈ Σ_m W_{k,m} f(t_m).
    pub fn duhamel_weight(&self, k: usize, m: usize) -> &DMatrix<f64> {
        self.duhamel.get(k, m)
    }

    /// Σ_{m ≤ k} W_{k,m} f_m.
    pub fn duhamel_apply(&self, k: usize, forcing: &[DVector<f64>]) -> DVector<f64> {
        let dim = self.s.get(0, 0).nrows();
        (0..=k).fold(DVector::zeros(dim), |mut acc, m| {
            acc.gemv(1.0, self.duhamel.get(k, m), &forcing[m], 1.0);
            acc
        })
    }

    pub fn s_rows(&self) -> Vec<TableRow> {
        table::summary_rows(&self.s, &self.grid, true)
    }

    pub fn p_weighted_rows(&self) -> Vec<TableRow> {
        table::summary_rows(&self.p_weighted, &self.grid, true)
    }
}

/// U = ∫ψ Q, V = ∫ψ R, S = φ + U, (t-τ)^{1-α} P = (t-τ)^{1-α}(ψ + V).
pub fn assemble_solution_operators(kernels: &ResolvedKernels, exec: Exec) -> Result<SolutionOperatorTable> {
    let par = &kernels.parametrix;
    let grid = par.grid.clone();
    let (alpha, dim, nodes) = (par.alpha, par.dim, grid.len());
    let integrate = |table: &Tri<DMatrix<f64>>| {
        Tri::try_build(exec, nodes, |k, j| {
            let mut acc = DMatrix::zeros(dim, dim);
            if !par.time_independent {
                for m in (j + 1)..=k {
                    acc.gemm(1.0, par.omega.get(k, m), table.get(m, j), 1.0);
                }
            }
            Ok(acc)
        })
    };
    let u = integrate(kernels.q.raw())?;
    let v = integrate(kernels.r.raw())?;
    let s = Tri::from_fn(nodes, |k, j| par.phi.get(k, j) + u.get(k, j));
    let v_weighted = Tri::from_fn(nodes, |k, j| {
        let gap = grid.t(k) - grid.t(j);
        if k == j { DMatrix::zeros(dim, dim) } else { v.get(k, j) * gap.powf(1.0 - alpha) }
    });
    let p_weighted = Tri::from_fn(nodes, |k, j| par.psi_weighted.get(k, j) + v_weighted.get(k, j));
    let duhamel = Tri::try_build(exec, nodes, |k, m| {
        let mut w = par.omega.get(k, m).clone();
        if k > m && !par.time_independent {
            w += v_weighted.get(k, m) * power_hat_weight(alpha, &grid, k, m);
        }
        Ok(w)
    })?;
    Ok(SolutionOperatorTable { grid, alpha, s, u, p_weighted, v_weighted, duhamel })
}

/// Parametrix, kernels and solution operators in one call.
pub fn solution_operators(
    family: &GeneratorFamily,
    grid: &TimeGrid,
    quad: &SubordinationQuadrature,
    opts: &VolterraOptions,
) -> Result<(ResolvedKernels, SolutionOperatorTable)> {
    let kernels = resolve_kernels(family, grid, quad, opts)?;
    let ops = assemble_solution_operators(&kernels, opts.exec)?;
    Ok((kernels, ops))
}
