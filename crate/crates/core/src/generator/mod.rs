//! Discretized generator families L(t) of second-order elliptic operators.
//!
//! L(t) is the central-difference discretization of B(t,x,∇) on interior
//! nodes with Dirichlet rows eliminated; its spectrum sits in the left
//! half-plane, T_t(τ) = exp(τ L(t)), and the positive sectorial operator is
//! A(t) = -L(t).

mod at;
mod coefficients;
mod grid;
mod spectral;

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use at::{check_at_conditions, default_probe_lambdas, ATReport, AtSample, ProbeKind};
pub use coefficients::{CoefficientSet, Diffusion, Preset};
pub use grid::{
    interpolated_norm_bound, lp_norm, operator_norm, operator_norm_pair, spectral_norm, NormPair,
    SpatialGrid,
};
pub use spectral::Spectral;

use crate::error::{Error, Result};
use crate::specfun::quad::GaussLegendre;

type MatrixFn = Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>;

#[derive(Clone)]
enum Source {
    Elliptic(CoefficientSet),
    Matrix { build: MatrixFn, holder_theta: f64, time_independent: bool },
}

/// L(t) at one time, with its lazily computed spectral decomposition.
#[derive(Debug)]
pub struct Assembled {
    t: f64,
    matrix: DMatrix<f64>,
    spectral: OnceLock<Option<Spectral>>,
}

impl Assembled {
    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `None` when L(t) is not diagonal-similar to a symmetric matrix.
    pub fn spectral(&self) -> Option<&Spectral> {
        self.spectral.get_or_init(|| Spectral::try_new(&self.matrix)).as_ref()
    }

    /// exp(s L(t)).
    pub fn exp_scaled(&self, s: f64) -> DMatrix<f64> {
        match self.spectral() {
            Some(sp) => sp.matrix_fn(|mu| (s * mu).exp()),
            None => (&self.matrix * s).exp(),
        }
    }
}

/// Time-indexed family of generator matrices with a thread-safe assembly memo.
pub struct GeneratorFamily {
    grid: SpatialGrid,
    source: Source,
    horizon: f64,
    sector_angle: f64,
    ellipticity_floor: f64,
    cache: RwLock<HashMap<u64, Arc<Assembled>>>,
}

impl fmt::Debug for GeneratorFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneratorFamily")
            .field("grid", &self.grid)
            .field("horizon", &self.horizon)
            .field("sector_angle", &self.sector_angle)
            .field("holder_theta", &self.holder_theta())
            .finish_non_exhaustive()
    }
}

impl Clone for GeneratorFamily {
    fn clone(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            source: self.source.clone(),
            horizon: self.horizon,
            sector_angle: self.sector_angle,
            ellipticity_floor: self.ellipticity_floor,
            cache: RwLock::new(self.cache.read().expect("cache lock").clone()),
        }
    }
}

const DEFAULT_SECTOR_ANGLE: f64 = std::f64::consts::FRAC_PI_4;
const DEFAULT_ELLIPTICITY_FLOOR: f64 = 1e-3;

impl GeneratorFamily {
    pub fn elliptic(grid: SpatialGrid, coeffs: CoefficientSet, horizon: f64) -> Result<Self> {
        if grid.dim() == 0 {
            return Err(Error::domain("elliptic families need a 1-D or 2-D grid"));
        }
        Self::with_source(grid, Source::Elliptic(coeffs), horizon)
    }

    pub fn from_preset(preset: Preset, n_per_axis: usize, horizon: f64) -> Result<Self> {
        let grid = SpatialGrid::new(preset.dim(), n_per_axis)?;
        Self::elliptic(grid, preset.coefficients(), horizon)
    }

    /// Family given directly by its matrices (the grid supplies the measure).
    pub fn from_matrix_fn(
        grid: SpatialGrid,
        build: impl Fn(f64) -> DMatrix<f64> + Send + Sync + 'static,
        holder_theta: f64,
        horizon: f64,
    ) -> Result<Self> {
        let source = Source::Matrix { build: Arc::new(build), holder_theta, time_independent: false };
        Self::with_source(grid, source, horizon)
    }

    /// One-node family L(t) = [f(t)].
    pub fn scalar(f: impl Fn(f64) -> f64 + Send + Sync + 'static, holder_theta: f64, horizon: f64) -> Result<Self> {
        Self::from_matrix_fn(SpatialGrid::point(), move |t| DMatrix::from_element(1, 1, f(t)), holder_theta, horizon)
    }

    /// Time-independent one-node family L = [-lambda].
    pub fn scalar_constant(lambda: f64, horizon: f64) -> Result<Self> {
        let mut fam = Self::scalar(move |_| -lambda, 1.0, horizon)?;
        if let Source::Matrix { time_independent, .. } = &mut fam.source {
            *time_independent = true;
        }
        Ok(fam)
    }

    fn with_source(grid: SpatialGrid, source: Source, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::domain(format!("horizon must be positive and finite, got {horizon}")));
        }
        let theta = match &source {
            Source::Elliptic(c) => c.holder_theta(),
            Source::Matrix { holder_theta, .. } => *holder_theta,
        };
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::domain(format!("Hölder exponent must lie in (0, 1], got {theta}")));
        }
        Ok(Self {
            grid,
            source,
            horizon,
            sector_angle: DEFAULT_SECTOR_ANGLE,
            ellipticity_floor: DEFAULT_ELLIPTICITY_FLOOR,
            cache: RwLock::new(HashMap::new()),
        })
    }

    pub fn with_sector_angle(mut self, omega: f64) -> Result<Self> {
        if !(omega > 0.0 && omega < std::f64::consts::FRAC_PI_2) {
            return Err(Error::domain(format!("sector angle must lie in (0, π/2), got {omega}")));
        }
        self.sector_angle = omega;
        Ok(self)
    }

    pub fn with_ellipticity_floor(mut self, floor: f64) -> Result<Self> {
        if !(floor > 0.0) {
            return Err(Error::domain(format!("ellipticity floor must be positive, got {floor}")));
        }
        self.ellipticity_floor = floor;
        self.cache.write().expect("cache lock").clear();
        Ok(self)
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn sector_angle(&self) -> f64 {
        self.sector_angle
    }

    pub fn holder_theta(&self) -> f64 {
        match &self.source {
            Source::Elliptic(c) => c.holder_theta(),
            Source::Matrix { holder_theta, .. } => *holder_theta,
        }
    }

    pub fn is_time_independent(&self) -> bool {
        match &self.source {
            Source::Elliptic(c) => c.is_time_independent(),
            Source::Matrix { time_independent, .. } => *time_independent,
        }
    }

    /// Memoized L(t).
    pub fn at(&self, t: f64) -> Result<Arc<Assembled>> {
        if !(t >= 0.0 && t <= self.horizon * (1.0 + 1e-12)) {
            return Err(Error::domain(format!("t = {t} outside [0, {}]", self.horizon)));
        }
        let key = t.to_bits();
        if let Some(hit) = self.cache.read().expect("cache lock").get(&key) {
            return Ok(Arc::clone(hit));
        }
        let matrix = self.build(t)?;
        let fresh = Arc::new(Assembled { t, matrix, spectral: OnceLock::new() });
        let mut cache = self.cache.write().expect("cache lock");
        Ok(Arc::clone(cache.entry(key).or_insert(fresh)))
    }

    fn build(&self, t: f64) -> Result<DMatrix<f64>> {
        match &self.source {
            Source::Matrix { build, .. } => {
                let m = build(t);
                if m.nrows() != self.grid.len() || m.ncols() != self.grid.len() {
                    return Err(Error::domain(format!(
                        "matrix family returned {}x{} for a grid of {} nodes",
                        m.nrows(),
                        m.ncols(),
                        self.grid.len()
                    )));
                }
                Ok(m)
            }
            Source::Elliptic(c) => {
                self.check_ellipticity(c, t)?;
                Ok(discretize(&self.grid, c, t))
            }
        }
    }

    fn check_ellipticity(&self, c: &CoefficientSet, t: f64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed ^ t.to_bits());
        let dim = self.grid.dim();
        let mut min_symbol = f64::INFINITY;
        for idx in 0..self.grid.len() {
            let x = self.grid.coords(idx);
            let a = c.diffusion(t, &x[..dim]);
            for _ in 0..8 {
                let xi = if dim == 1 {
                    [1.0, 0.0]
                } else {
                    let th: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                    [th.cos(), th.sin()]
                };
                min_symbol = min_symbol.min(a.symbol(xi));
            }
        }
        if !(min_symbol >= self.ellipticity_floor) {
            return Err(Error::Ellipticity { t, min_symbol, floor: self.ellipticity_floor });
        }
        Ok(())
    }
}

fn discretize(grid: &SpatialGrid, c: &CoefficientSet, t: f64) -> DMatrix<f64> {
    let n = grid.n_per_axis();
    let h = grid.h();
    let (h2, h1) = (h * h, 2.0 * h);
    let len = grid.len();
    let mut m = DMatrix::zeros(len, len);
    match grid.dim() {
        1 => {
            for i in 0..n {
                let x = grid.coords(i);
                let a = c.diffusion(t, &x[..1]).a11;
                let b = c.drift(t, &x[..1])[0];
                m[(i, i)] = -2.0 * a / h2 + c.reaction(t, &x[..1]);
                if i > 0 {
                    m[(i, i - 1)] = a / h2 - b / h1;
                }
                if i + 1 < n {
                    m[(i, i + 1)] = a / h2 + b / h1;
                }
            }
        }
        _ => {
            let idx = |i: usize, j: usize| i + n * j;
            for j in 0..n {
                for i in 0..n {
                    let row = idx(i, j);
                    let x = grid.coords(row);
                    let a = c.diffusion(t, &x);
                    let b = c.drift(t, &x);
                    m[(row, row)] = -2.0 * (a.a11 + a.a22) / h2 + c.reaction(t, &x);
                    let cross = a.a12 / (2.0 * h2);
                    let stencil = [
                        (1, 0, a.a11 / h2 + b[0] / h1),
                        (-1, 0, a.a11 / h2 - b[0] / h1),
                        (0, 1, a.a22 / h2 + b[1] / h1),
                        (0, -1, a.a22 / h2 - b[1] / h1),
                        (1, 1, cross),
                        (-1, -1, cross),
                        (1, -1, -cross),
                        (-1, 1, -cross),
                    ];
                    for (di, dj, w) in stencil {
                        let (ii, jj) = (i as i64 + di, j as i64 + dj);
                        if w == 0.0 || ii < 0 || jj < 0 || ii >= n as i64 || jj >= n as i64 {
                            continue;
                        }
                        m[(row, idx(ii as usize, jj as usize))] += w;
                    }
                }
            }
        }
    }
    m
}

/// L(t) as a dense matrix.
pub fn assemble(family: &GeneratorFamily, t: f64) -> Result<DMatrix<f64>> {
    Ok(family.at(t)?.matrix().clone())
}

/// T_t(τ) v = exp(τ L(t)) v.
pub fn semigroup_apply(family: &GeneratorFamily, t: f64, tau: f64, v: &DVector<f64>) -> Result<DVector<f64>> {
    if !(tau >= 0.0) {
        return Err(Error::domain(format!("semigroup time must be nonnegative, got {tau}")));
    }
    if tau == 0.0 {
        return Ok(v.clone());
    }
    let op = family.at(t)?;
    Ok(match op.spectral() {
        Some(sp) => sp.apply_fn(|mu| (tau * mu).exp(), v),
        None => op.exp_scaled(tau) * v,
    })
}

/// (-L(t))^ν v by spectral calculus.
pub fn fractional_power_apply(family: &GeneratorFamily, t: f64, nu: f64, v: &DVector<f64>) -> Result<DVector<f64>> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(Error::domain(format!("fractional power must lie in (0, 1), got {nu}")));
    }
    let op = family.at(t)?;
    let sp = op.spectral().ok_or(Error::NotSymmetrizable { t })?;
    if let Some(mu) = sp.eigenvalues().iter().find(|mu| **mu >= 0.0) {
        return Err(Error::domain(format!("spectrum of L({t}) is not negative (eigenvalue {mu})")));
    }
    Ok(sp.apply_fn(|mu| (-mu).powf(nu), v))
}

/// (-L(t))^ν v from the resolvent integral
/// A^{-β} w = (sin πβ / π) ∫_0^∞ s^{-β} (sI + A)^{-1} w ds with β = 1 - ν, w = A v.
///
/// Independent of the eigen-decomposition; every node is a dense LU solve.
pub fn fractional_power_quadrature(
    family: &GeneratorFamily,
    t: f64,
    nu: f64,
    v: &DVector<f64>,
) -> Result<DVector<f64>> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(Error::domain(format!("fractional power must lie in (0, 1), got {nu}")));
    }
    let a = -family.at(t)?.matrix().clone();
    let w = &a * v;
    let beta = 1.0 - nu;
    let n = a.nrows();
    let solve = |s: f64| -> Result<DVector<f64>> {
        let shifted = &a + DMatrix::identity(n, n) * s;
        shifted.lu().solve(&w).ok_or(Error::SingularResolvent { lambda: -s })
    };
    let rule = GaussLegendre::new(12);
    let mut acc = DVector::zeros(n);
    // Geometric panels in the substituted variable u ∈ (0, 1].
    let mut panels: Vec<(f64, f64)> = (0..48).map(|k| (0.5f64.powi(k + 1), 0.5f64.powi(k))).collect();
    panels.push((0.0, 0.5f64.powi(48)));
    for &(lo, hi) in &panels {
        for (u, wt) in rule.mapped(lo, hi) {
            // s ∈ (0, 1]: s = u^{1/(1-β)}, s^{-β} ds = du / (1-β).
            let s_low = u.powf(1.0 / (1.0 - beta));
            acc += solve(s_low)? * (wt / (1.0 - beta));
            // s ∈ [1, ∞): s = u^{-1/β}, s^{-β} ds = u^{-1/β} du / β.
            let s_high = u.powf(-1.0 / beta);
            if s_high.is_finite() {
                acc += solve(s_high)? * (wt * u.powf(-1.0 / beta) / beta);
            } else {
                acc += &w * (wt / beta);
            }
        }
    }
    Ok(acc * ((std::f64::consts::PI * beta).sin() / std::f64::consts::PI))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace(n: usize) -> GeneratorFamily {
        GeneratorFamily::from_preset(Preset::Laplace1d, n, 1.0).unwrap()
    }

    #[test]
    fn hand_assembled_stencil() {
        let m = assemble(&laplace(3), 0.3).unwrap();
        let want = DMatrix::from_row_slice(3, 3, &[-32.0, 16.0, 0.0, 16.0, -32.0, 16.0, 0.0, 16.0, -32.0]);
        assert_eq!(m, want);
        let fam = GeneratorFamily::from_preset(Preset::Reaction1d, 3, 1.0).unwrap();
        let m2 = assemble(&fam, 0.3).unwrap();
        assert_eq!(m2, want - DMatrix::identity(3, 3));
    }

    #[test]
    fn autonomous_presets_are_time_frozen() {
        for p in [Preset::Laplace1d, Preset::Advection1d, Preset::Laplace2d] {
            let fam = GeneratorFamily::from_preset(p, 4, 2.0).unwrap();
            assert!(fam.is_time_independent());
            assert_eq!(assemble(&fam, 0.1).unwrap(), assemble(&fam, 1.7).unwrap());
        }
    }

    #[test]
    fn two_dimensional_cross_term_stays_symmetric() {
        let fam = GeneratorFamily::from_preset(Preset::TimevaryingEllipse2d, 5, 1.0).unwrap();
        let m = assemble(&fam, 0.7).unwrap();
        assert!((&m - m.transpose()).amax() < 1e-9);
        assert!(fam.at(0.7).unwrap().spectral().unwrap().eigenvalues().iter().all(|mu| *mu < 0.0));
    }

    #[test]
    fn ellipticity_violation_is_reported() {
        let c = CoefficientSet::new(|t, _| Diffusion::isotropic(1.0 - t), 1.0, 1.0).unwrap();
        let fam = GeneratorFamily::elliptic(SpatialGrid::new(1, 4).unwrap(), c, 2.0).unwrap();
        assert!(fam.at(0.5).is_ok());
        assert!(matches!(fam.at(1.5), Err(Error::Ellipticity { .. })));
    }

    #[test]
    fn semigroup_examples() {
        let fam = laplace(3);
        let v = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        assert_eq!(semigroup_apply(&fam, 0.0, 0.0, &v).unwrap(), v);
        let h: f64 = 0.25;
        for k in 1..=3 {
            let kf = k as f64;
            let mu = -(2.0 / (h * h)) * (1.0 - (kf * std::f64::consts::PI * h).cos());
            let e = DVector::from_fn(3, |i, _| (kf * std::f64::consts::PI * (i + 1) as f64 * h).sin());
            let got = semigroup_apply(&fam, 0.0, 0.01, &e).unwrap();
            assert!((got - &e * (0.01 * mu).exp()).amax() < 1e-13);
        }
        let scalar = GeneratorFamily::scalar_constant(2.0, 1.0).unwrap();
        let one = DVector::from_element(1, 3.0);
        let got = semigroup_apply(&scalar, 0.5, 0.7, &one).unwrap()[0];
        assert!((got - 3.0 * (-1.4f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn non_symmetrizable_family_uses_pade() {
        let grid = SpatialGrid::new(1, 2).unwrap();
        let fam = GeneratorFamily::from_matrix_fn(
            grid,
            |_| DMatrix::from_row_slice(2, 2, &[-2.0, 1.0, -1.0, -2.0]),
            1.0,
            1.0,
        )
        .unwrap();
        assert!(fam.at(0.0).unwrap().spectral().is_none());
        let v = DVector::from_vec(vec![1.0, 0.0]);
        let got = semigroup_apply(&fam, 0.0, 1.0, &v).unwrap();
        let e = (-2.0f64).exp();
        assert!((got[0] - e * 1f64.cos()).abs() < 1e-12);
        assert!((got[1] + e * 1f64.sin()).abs() < 1e-12);
        assert!(matches!(
            fractional_power_apply(&fam, 0.0, 0.5, &v),
            Err(Error::NotSymmetrizable { .. })
        ));
    }

    #[test]
    fn fractional_power_examples() {
        let scalar = GeneratorFamily::scalar_constant(4.0, 1.0).unwrap();
        let one = DVector::from_element(1, 1.0);
        assert!((fractional_power_apply(&scalar, 0.0, 0.5, &one).unwrap()[0] - 2.0).abs() < 1e-14);

        let fam = laplace(3);
        let v = DVector::from_vec(vec![0.3, 1.0, -0.2]);
        let half = fractional_power_apply(&fam, 0.0, 0.5, &v).unwrap();
        let twice = fractional_power_apply(&fam, 0.0, 0.5, &half).unwrap();
        let full = -assemble(&fam, 0.0).unwrap() * &v;
        assert!((twice - &full).amax() < 1e-10 * full.amax());
        let quad = fractional_power_quadrature(&fam, 0.0, 0.5, &v).unwrap();
        assert!((quad - half).amax() < 1e-6);
    }
}
