use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Interior nodes of a uniform grid on the unit interval or square.
///
/// A zero-dimensional grid (one node of unit mass) hosts scalar model families.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid {
    dim: usize,
    n: usize,
    h: f64,
    weights: Vec<f64>,
}

impl SpatialGrid {
    pub fn new(dim: usize, n_per_axis: usize) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::domain(format!("grid dimension must be 1 or 2, got {dim}")));
        }
        if n_per_axis == 0 {
            return Err(Error::domain("grid needs at least one interior node per axis"));
        }
        let h = 1.0 / (n_per_axis + 1) as f64;
        let len = n_per_axis.pow(dim as u32);
        Ok(Self { dim, n: n_per_axis, h, weights: vec![h.powi(dim as i32); len] })
    }

    pub fn point() -> Self {
        Self { dim: 0, n: 1, h: 1.0, weights: vec![1.0] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_per_axis(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Coordinates of node `idx`; the first axis varies fastest.
    pub fn coords(&self, idx: usize) -> [f64; 2] {
        match self.dim {
            0 => [0.0, 0.0],
            1 => [(idx + 1) as f64 * self.h, 0.0],
            _ => [((idx % self.n) + 1) as f64 * self.h, ((idx / self.n) + 1) as f64 * self.h],
        }
    }

    /// Samples a function of position at every node.
    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> DVector<f64> {
        DVector::from_iterator(self.len(), (0..self.len()).map(|i| f(&self.coords(i)[..self.dim.max(1)])))
    }
}

/// Weighted L^p norm (Σ σ_i |v_i|^p)^{1/p}; `p = ∞` gives the max norm.
pub fn lp_norm(v: &DVector<f64>, grid: &SpatialGrid, p: f64) -> f64 {
    debug_assert!(p >= 1.0);
    if p.is_infinite() {
        return v.iter().fold(0.0, |m, x| m.max(x.abs()));
    }
    let s: f64 = v.iter().zip(grid.weights()).map(|(x, w)| w * x.abs().powf(p)).sum();
    s.powf(1.0 / p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormPair {
    OneOne,
    TwoTwo,
    InfInf,
    OneTwo,
    TwoInf,
    OneInf,
}

impl NormPair {
    pub fn from_exponents(p: f64, q: f64) -> Result<Self> {
        let key = |x: f64| if x.is_infinite() { 0 } else if x == 1.0 { 1 } else if x == 2.0 { 2 } else { 3 };
        match (key(p), key(q)) {
            (1, 1) => Ok(Self::OneOne),
            (2, 2) => Ok(Self::TwoTwo),
            (0, 0) => Ok(Self::InfInf),
            (1, 2) => Ok(Self::OneTwo),
            (2, 0) => Ok(Self::TwoInf),
            (1, 0) => Ok(Self::OneInf),
            _ => Err(Error::UnsupportedNormPair { p, q }),
        }
    }

    pub fn exponents(self) -> (f64, f64) {
        let inf = f64::INFINITY;
        match self {
            Self::OneOne => (1.0, 1.0),
            Self::TwoTwo => (2.0, 2.0),
            Self::InfInf => (inf, inf),
            Self::OneTwo => (1.0, 2.0),
            Self::TwoInf => (2.0, inf),
            Self::OneInf => (1.0, inf),
        }
    }

    pub const ALL: [NormPair; 6] =
        [Self::OneOne, Self::TwoTwo, Self::InfInf, Self::OneTwo, Self::TwoInf, Self::OneInf];
}

/// Exact weighted operator norm ‖M‖_{L^p → L^q} for the supported pairs.
pub fn operator_norm(m: &DMatrix<f64>, grid: &SpatialGrid, p: f64, q: f64) -> Result<f64> {
    Ok(operator_norm_pair(m, grid, NormPair::from_exponents(p, q)?))
}

pub fn operator_norm_pair(m: &DMatrix<f64>, grid: &SpatialGrid, pair: NormPair) -> f64 {
    let w = grid.weights();
    let (rows, cols) = m.shape();
    match pair {
        NormPair::OneOne => (0..cols)
            .map(|j| (0..rows).map(|i| w[i] * m[(i, j)].abs()).sum::<f64>() / w[j])
            .fold(0.0, f64::max),
        NormPair::InfInf => (0..rows)
            .map(|i| m.row(i).iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max),
        NormPair::OneInf => (0..cols)
            .map(|j| m.column(j).iter().fold(0.0_f64, |a, x| a.max(x.abs())) / w[j])
            .fold(0.0, f64::max),
        NormPair::OneTwo => (0..cols)
            .map(|j| (0..rows).map(|i| w[i] * m[(i, j)].powi(2)).sum::<f64>().sqrt() / w[j])
            .fold(0.0, f64::max),
        NormPair::TwoInf => (0..rows)
            .map(|i| (0..cols).map(|j| m[(i, j)].powi(2) / w[j]).sum::<f64>().sqrt())
            .fold(0.0, f64::max),
        NormPair::TwoTwo => {
            let mut b = m.clone();
            for i in 0..rows {
                for j in 0..cols {
                    b[(i, j)] *= (w[i] / w[j]).sqrt();
                }
            }
            spectral_norm(&b)
        }
    }
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().iter().fold(0.0, |a: f64, s| a.max(*s))
}

/// Riesz–Thorin upper bound for ‖M‖_{L^p → L^q}, 1 ≤ p ≤ q ≤ ∞, interpolated
/// from the (∞,∞), (1,∞) and (1,1) norms.
pub fn interpolated_norm_bound(m: &DMatrix<f64>, grid: &SpatialGrid, p: f64, q: f64) -> Result<f64> {
    if !(p >= 1.0 && q >= p) {
        return Err(Error::UnsupportedNormPair { p, q });
    }
    let x = 1.0 / p;
    let y = 1.0 / q;
    let n_inf = operator_norm_pair(m, grid, NormPair::InfInf);
    let n_1inf = operator_norm_pair(m, grid, NormPair::OneInf);
    let n_11 = operator_norm_pair(m, grid, NormPair::OneOne);
    let pow = |base: f64, e: f64| if e == 0.0 { 1.0 } else { base.powf(e) };
    Ok(pow(n_inf, 1.0 - x) * pow(n_1inf, x - y) * pow(n_11, y))
}
