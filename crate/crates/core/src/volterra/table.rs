use nalgebra::DMatrix;

use crate::error::Result;
use crate::par::{try_map_indexed, Exec};
use crate::timegrid::TimeGrid;

/// Lower-triangular table indexed by node pairs (k, j), j ≤ k.
#[derive(Debug, Clone)]
pub struct Tri<T> {
    nodes: usize,
    data: Vec<T>,
}

impl<T> Tri<T> {
    fn index(k: usize, j: usize) -> usize {
        debug_assert!(j <= k);
        k * (k + 1) / 2 + j
    }

    /// Pairs in storage order.
    pub fn pairs(nodes: usize) -> Vec<(usize, usize)> {
        (0..nodes).flat_map(|k| (0..=k).map(move |j| (k, j))).collect()
    }

    pub fn from_fn(nodes: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let data = Self::pairs(nodes).into_iter().map(|(k, j)| f(k, j)).collect();
        Self { nodes, data }
    }

    pub fn try_build<F>(exec: Exec, nodes: usize, f: F) -> Result<Self>
    where
        T: Send,
        F: Fn(usize, usize) -> Result<T> + Sync + Send,
    {
        let pairs = Self::pairs(nodes);
        let data = try_map_indexed(exec, pairs.len(), |i| f(pairs[i].0, pairs[i].1))?;
        Ok(Self { nodes, data })
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn get(&self, k: usize, j: usize) -> &T {
        assert!(j <= k && k < self.nodes, "pair ({k}, {j}) outside the table");
        &self.data[Self::index(k, j)]
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), &T)> {
        Self::pairs(self.nodes).into_iter().zip(self.data.iter())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Q,
    R,
}

/// Q or R sampled on the strict lower triangle of a time grid.
#[derive(Debug, Clone)]
pub struct KernelTable {
    kind: KernelKind,
    entries: Tri<DMatrix<f64>>,
    singularity_exponent: f64,
}

impl KernelTable {
    pub(crate) fn new(kind: KernelKind, entries: Tri<DMatrix<f64>>, singularity_exponent: f64) -> Self {
        Self { kind, entries, singularity_exponent }
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    /// ω̄ - 1 for Q, θ - 1 for R.
    pub fn singularity_exponent(&self) -> f64 {
        self.singularity_exponent
    }

    pub fn nodes(&self) -> usize {
        self.entries.nodes()
    }

    /// Value at (t_k, t_j); `None` unless j < k.
    pub fn get(&self, k: usize, j: usize) -> Option<&DMatrix<f64>> {
        (j < k && k < self.nodes()).then(|| self.entries.get(k, j))
    }

    pub(crate) fn raw(&self) -> &Tri<DMatrix<f64>> {
        &self.entries
    }

    pub fn rows(&self, grid: &TimeGrid) -> Vec<TableRow> {
        summary_rows(&self.entries, grid, false)
    }
}

/// One exported table entry.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub k: usize,
    pub j: usize,
    pub t: f64,
    pub tau: f64,
    pub gap: f64,
    pub frobenius: f64,
}

pub(crate) fn summary_rows(tri: &Tri<DMatrix<f64>>, grid: &TimeGrid, include_diagonal: bool) -> Vec<TableRow> {
    tri.iter()
        .filter(|((k, j), _)| include_diagonal || j < k)
        .map(|((k, j), m)| TableRow {
            k,
            j,
            t: grid.t(k),
            tau: grid.t(j),
            gap: grid.t(k) - grid.t(j),
            frobenius: m.norm(),
        })
        .collect()
}
