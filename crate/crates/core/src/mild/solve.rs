use nalgebra::DVector;

use super::{FracParams, SemilinearSpec};
use crate::error::{Error, Result};
use crate::generator::{lp_norm, GeneratorFamily, SpatialGrid};
use crate::par::{map_indexed, Exec};
use crate::timegrid::TimeGrid;
use crate::volterra::SolutionOperatorTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MildStatus {
    Converged,
    Blowup,
    /// Iteration cap reached without meeting the tolerance.
    Maxed,
}

/// t^b ‖·‖_{L^r} with r = 2p; b = 0, r = 2 for linear problems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weighting {
    pub b: f64,
    pub norm_exponent: f64,
}

impl Weighting {
    pub fn linear() -> Self {
        Self { b: 0.0, norm_exponent: 2.0 }
    }

    pub fn from_params(params: &FracParams) -> Self {
        Self { b: params.b, norm_exponent: params.norm_exponent() }
    }

    fn weight(&self, t: f64) -> f64 {
        if self.b == 0.0 { 1.0 } else { t.powf(self.b) }
    }
}

/// One accepted Picard window [t_start, t_end].
#[derive(Debug, Clone, PartialEq)]
pub struct WindowRecord {
    pub start: f64,
    pub end: f64,
    pub iterations: usize,
    pub weighted_sup: f64,
}

#[derive(Debug, Clone)]
pub struct MildSolution {
    pub grid: TimeGrid,
    pub values: Vec<DVector<f64>>,
    pub weighting: Weighting,
    /// t_k^b ‖u(t_k)‖ per node (0 at t = 0 when b > 0).
    pub weighted: Vec<f64>,
    pub weighted_sup: f64,
    pub status: MildStatus,
    pub iterations: usize,
    /// d(u_{m+1}, u_m) per iteration of the last window.
    pub distances: Vec<f64>,
    /// d(F(u), u) of the returned values.
    pub residual: f64,
    pub windows: Vec<WindowRecord>,
}

impl MildSolution {
    pub fn contraction_ratios(&self) -> Vec<f64> {
        self.distances.windows(2).map(|w| w[1] / w[0]).collect()
    }

    /// max_k ‖u(t_k)‖_{L^r}.
    pub fn max_norm(&self, spatial: &SpatialGrid, r: f64) -> f64 {
        self.values.iter().map(|v| lp_norm(v, spatial, r)).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub exec: Exec,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 200, exec: Exec::default() }
    }
}

/// Everything the fixed-point map needs, shared by the linear solve and Picard.
struct MildMap<'a> {
    spatial: &'a SpatialGrid,
    ops: &'a SolutionOperatorTable,
    linear_part: Vec<DVector<f64>>,
    weighting: Weighting,
}

impl<'a> MildMap<'a> {
    fn new(spatial: &'a SpatialGrid, ops: &'a SolutionOperatorTable, u0: &DVector<f64>, weighting: Weighting, len: usize, exec: Exec) -> Result<Self> {
        if u0.len() != spatial.len() {
            return Err(Error::domain(format!("initial datum has {} entries, grid has {}", u0.len(), spatial.len())));
        }
        let linear_part = map_indexed(exec, len, |k| ops.s(k, 0) * u0);
        Ok(Self { spatial, ops, linear_part, weighting })
    }

    fn grid(&self) -> &TimeGrid {
        self.ops.grid()
    }

    /// S(t_k,0)u0 + Σ_{m ≤ k} W_{k,m} forcing_m for k in range.
    fn evaluate(&self, forcing: &[DVector<f64>], range: std::ops::Range<usize>, exec: Exec) -> Vec<DVector<f64>> {
        let start = range.start;
        map_indexed(exec, range.len(), |i| {
            let k = start + i;
            &self.linear_part[k] + self.ops.duhamel_apply(k, forcing)
        })
    }

    fn weighted_norm(&self, k: usize, v: &DVector<f64>) -> f64 {
        if k == 0 && self.weighting.b > 0.0 {
            return 0.0;
        }
        self.weighting.weight(self.grid().t(k)) * lp_norm(v, self.spatial, self.weighting.norm_exponent)
    }

    /// max{sup ‖Δ‖₂, sup t^b ‖Δ‖_{2p}} over the given nodes.
    fn distance(&self, a: &[DVector<f64>], b: &[DVector<f64>], offset: usize) -> f64 {
        a.iter()
            .zip(b)
            .enumerate()
            .map(|(i, (x, y))| {
                let d = x - y;
                lp_norm(&d, self.spatial, 2.0).max(self.weighted_norm(offset + i, &d))
            })
            .fold(0.0, f64::max)
    }

    fn finish(&self, values: Vec<DVector<f64>>, status: MildStatus, iterations: usize, distances: Vec<f64>, residual: f64, windows: Vec<WindowRecord>) -> MildSolution {
        let weighted: Vec<f64> = values.iter().enumerate().map(|(k, v)| self.weighted_norm(k, v)).collect();
        let weighted_sup = weighted.iter().copied().fold(0.0, f64::max);
        let grid = if values.len() == self.grid().len() {
            self.grid().clone()
        } else {
            self.grid().prefix(values.len().max(2)).expect("prefix within the table")
        };
        MildSolution { grid, values, weighting: self.weighting, weighted, weighted_sup, status, iterations, distances, residual, windows }
    }
}

/// u(t_k) = S(t_k,0)u0 + Σ_m W_{k,m} f(t_m).
pub fn solve_linear(
    family: &GeneratorFamily,
    ops: &SolutionOperatorTable,
    f: impl Fn(f64) -> DVector<f64>,
    u0: &DVector<f64>,
) -> Result<MildSolution> {
    let len = ops.grid().len();
    let map = MildMap::new(family.grid(), ops, u0, Weighting::linear(), len, Exec::default())?;
    let forcing: Vec<DVector<f64>> = ops.grid().nodes().iter().map(|&t| f(t)).collect();
    let values = map.evaluate(&forcing, 0..len, Exec::default());
    let span = ops.grid().horizon();
    Ok(map.finish(values, MildStatus::Converged, 1, vec![], 0.0, vec![WindowRecord { start: 0.0, end: span, iterations: 1, weighted_sup: 0.0 }]))
}

/// max_k t_k^b ‖S(t_k,0)u0‖_{2p}.
pub fn linear_weighted_sup(family: &GeneratorFamily, ops: &SolutionOperatorTable, u0: &DVector<f64>, params: &FracParams) -> Result<f64> {
    let map = MildMap::new(family.grid(), ops, u0, Weighting::from_params(params), ops.grid().len(), Exec::default())?;
    Ok(map.linear_part.iter().enumerate().map(|(k, v)| map.weighted_norm(k, v)).fold(0.0, f64::max))
}

/// κ = 1.25 max_k t_k^b ‖S(t_k,0)u0‖_{2p}: the smallest-level data clear the strict precondition with margin.
pub fn calibrate_kappa(family: &GeneratorFamily, ops: &SolutionOperatorTable, u0: &DVector<f64>, params: &FracParams) -> Result<f64> {
    let sup = linear_weighted_sup(family, ops, u0, params)?;
    Ok(if sup > 0.0 { 1.25 * sup } else { params.kappa })
}

enum WindowOutcome {
    Done { values: Vec<DVector<f64>>, iterations: usize, distances: Vec<f64>, residual: f64, status: MildStatus },
    Failed(Error),
}

/// Picard on nodes [start, end) with `known` fixed on [0, start).
fn picard_window(
    map: &MildMap<'_>,
    spec: &SemilinearSpec,
    known: &[DVector<f64>],
    end: usize,
    opts: &PicardOptions,
    weighted_bound: Option<f64>,
    norm_ceiling: Option<f64>,
) -> WindowOutcome {
    let start = known.len();
    let mut forcing: Vec<DVector<f64>> = known.iter().map(|v| spec.apply(v)).collect();
    // Initial guess: history only, no new nonlinear forcing.
    let zero = DVector::zeros(map.spatial.len());
    forcing.extend((start..end).map(|_| zero.clone()));
    let mut current = map.evaluate(&forcing, start..end, opts.exec);
    let mut distances = Vec::new();
    let mut streak = 0;
    for it in 1..=opts.max_iter {
        for (i, v) in current.iter().enumerate() {
            forcing[start + i] = spec.apply(v);
        }
        let next = map.evaluate(&forcing, start..end, opts.exec);
        let d = map.distance(&next, &current, start);
        if !d.is_finite() || next.iter().any(|v| !v.iter().all(|x| x.is_finite())) {
            return WindowOutcome::Failed(Error::NonContraction { iteration: it, ratio: f64::INFINITY });
        }
        if let Some(&prev) = distances.last() {
            let ratio = d / prev;
            streak = if ratio >= 1.0 && d > opts.tol { streak + 1 } else { 0 };
            if streak >= 3 {
                return WindowOutcome::Failed(Error::NonContraction { iteration: it, ratio });
            }
        }
        distances.push(d);
        if let Some(bound) = weighted_bound {
            let ws = next.iter().enumerate().map(|(i, v)| map.weighted_norm(start + i, v)).fold(0.0, f64::max);
            if ws >= bound {
                return WindowOutcome::Failed(Error::WindowTooLong { weighted: ws, bound });
            }
        }
        if let Some(ceiling) = norm_ceiling {
            let r = map.weighting.norm_exponent;
            if next.iter().any(|v| lp_norm(v, map.spatial, r) > ceiling) {
                return WindowOutcome::Failed(Error::NonContraction { iteration: it, ratio: f64::INFINITY });
            }
        }
        current = next;
        if d < opts.tol {
            for (i, v) in current.iter().enumerate() {
                forcing[start + i] = spec.apply(v);
            }
            let again = map.evaluate(&forcing, start..end, opts.exec);
            let residual = map.distance(&again, &current, start);
            return WindowOutcome::Done { values: current, iterations: it, distances, residual, status: MildStatus::Converged };
        }
    }
    let residual = *distances.last().unwrap_or(&f64::NAN);
    WindowOutcome::Done { values: current, iterations: opts.max_iter, distances, residual, status: MildStatus::Maxed }
}

/// Fixed point of F w = S(·,0)u0 + ∫ P(·,τ) J(w(τ)) dτ on the whole table grid.
pub fn picard_semilinear(
    family: &GeneratorFamily,
    ops: &SolutionOperatorTable,
    spec: &SemilinearSpec,
    u0: &DVector<f64>,
    params: &FracParams,
    opts: &PicardOptions,
) -> Result<MildSolution> {
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(Error::domain("Picard tolerance must be positive and the cap at least 1"));
    }
    let len = ops.grid().len();
    let map = MildMap::new(family.grid(), ops, u0, Weighting::from_params(params), len, opts.exec)?;
    let measured = map.linear_part.iter().enumerate().map(|(k, v)| map.weighted_norm(k, v)).fold(0.0, f64::max);
    if !(measured < params.kappa) {
        return Err(Error::Precondition { measured, kappa: params.kappa });
    }
    let known = vec![u0.clone()];
    match picard_window(&map, spec, &known, len, opts, Some(2.0 * params.kappa), None) {
        WindowOutcome::Failed(e) => Err(e),
        WindowOutcome::Done { values, iterations, distances, residual, status } => {
            let mut all = known;
            all.extend(values);
            let mut sol = map.finish(all, status, iterations, distances, residual, vec![]);
            sol.windows.push(WindowRecord { start: 0.0, end: ops.grid().horizon(), iterations, weighted_sup: sol.weighted_sup });
            Ok(sol)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuationOptions {
    /// L^{2p} level read as blow-up.
    pub ceiling: f64,
    /// Smallest window, as a fraction of the extended horizon.
    pub floor_fraction: f64,
    /// Cap on new nodes per window; `None` tries the whole remainder first.
    pub window_nodes: Option<usize>,
    pub picard: PicardOptions,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self { ceiling: 1e6, floor_fraction: 1.0 / 1024.0, window_nodes: None, picard: PicardOptions::default() }
    }
}

/// Extends a converged solution over the nodes of `ops.grid()` beyond its own grid.
///
/// Windows that fail to contract are halved; once a failing window is
/// shorter than the floor, or the solution norm passes the ceiling, the
/// run stops with status `Blowup`.
pub fn continue_solution(
    state: &MildSolution,
    family: &GeneratorFamily,
    ops: &SolutionOperatorTable,
    spec: &SemilinearSpec,
    params: &FracParams,
    opts: &ContinuationOptions,
) -> Result<MildSolution> {
    if state.status != MildStatus::Converged {
        return Err(Error::domain("only converged solutions can be continued"));
    }
    let ext = ops.grid();
    if !state.grid.is_prefix_of(ext) {
        return Err(Error::domain("extension grid must begin with the nodes of the current solution"));
    }
    let u0 = &state.values[0];
    let map = MildMap::new(family.grid(), ops, u0, Weighting::from_params(params), ext.len(), opts.picard.exec)?;
    let floor = opts.floor_fraction * ext.horizon();
    let r = map.weighting.norm_exponent;
    let mut values = state.values.clone();
    let mut windows = state.windows.clone();
    let (mut iterations, mut distances, mut residual) = (state.iterations, state.distances.clone(), state.residual);
    let mut status = MildStatus::Converged;
    while values.len() < ext.len() {
        let pos = values.len();
        let mut take = opts.window_nodes.unwrap_or(usize::MAX).min(ext.len() - pos).max(1);
        loop {
            let end = pos + take;
            match picard_window(&map, spec, &values, end, &opts.picard, None, Some(opts.ceiling)) {
                WindowOutcome::Done { values: fresh, iterations: it, distances: d, residual: res, status: MildStatus::Converged } => {
                    let ws = fresh.iter().enumerate().map(|(i, v)| map.weighted_norm(pos + i, v)).fold(0.0, f64::max);
                    windows.push(WindowRecord { start: ext.t(pos - 1), end: ext.t(end - 1), iterations: it, weighted_sup: ws });
                    values.extend(fresh);
                    iterations = it;
                    distances = d;
                    residual = res;
                    break;
                }
                _ => {
                    let length = ext.t(end - 1) - ext.t(pos - 1);
                    if take == 1 || length <= floor {
                        status = MildStatus::Blowup;
                        break;
                    }
                    take = (take / 2).max(1);
                }
            }
        }
        if status == MildStatus::Blowup {
            break;
        }
        if values.iter().any(|v| lp_norm(v, map.spatial, r) > opts.ceiling) {
            status = MildStatus::Blowup;
            break;
        }
    }
    Ok(map.finish(values, status, iterations, distances, residual, windows))
}
