use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Eigen-decomposition L = left · diag(μ) · right obtained from a diagonal
/// similarity D L D⁻¹ that is symmetric.
#[derive(Debug, Clone)]
pub struct Spectral {
    eigenvalues: DVector<f64>,
    left: DMatrix<f64>,
    right: DMatrix<f64>,
}

impl Spectral {
    /// Returns `None` when no diagonal similarity symmetrizes `l`.
    pub fn try_new(l: &DMatrix<f64>) -> Option<Self> {
        let d = symmetrizer(l)?;
        let n = l.nrows();
        let mut s = DMatrix::from_fn(n, n, |i, j| d[i] * l[(i, j)] / d[j]);
        let scale = s.amax().max(f64::MIN_POSITIVE);
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (s[(i, j)], s[(j, i)]);
                if (a - b).abs() > 1e-11 * scale {
                    return None;
                }
                let m = 0.5 * (a + b);
                s[(i, j)] = m;
                s[(j, i)] = m;
            }
        }
        let eig = SymmetricEigen::new(s);
        let v = eig.eigenvectors;
        let left = DMatrix::from_fn(n, n, |i, k| v[(i, k)] / d[i]);
        let right = DMatrix::from_fn(n, n, |k, j| v[(j, k)] * d[j]);
        Some(Self { eigenvalues: eig.eigenvalues, left, right })
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// f(L) as a dense matrix.
    pub fn matrix_fn(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        self.matrix_from_values(&self.eigenvalues.map(f))
    }

    /// left · diag(values) · right.
    pub fn matrix_from_values(&self, values: &DVector<f64>) -> DMatrix<f64> {
        let mut scaled = self.left.clone();
        for (k, mut col) in scaled.column_iter_mut().enumerate() {
            col *= values[k];
        }
        scaled * &self.right
    }

    /// f(L) v without forming f(L).
    pub fn apply_fn(&self, f: impl Fn(f64) -> f64, v: &DVector<f64>) -> DVector<f64> {
        let mut c = &self.right * v;
        for (k, x) in c.iter_mut().enumerate() {
            *x *= f(self.eigenvalues[k]);
        }
        &self.left * c
    }
}

/// Diagonal d with d_i L_ij / d_j symmetric, found by walking the sparsity graph.
fn symmetrizer(l: &DMatrix<f64>) -> Option<Vec<f64>> {
    let n = l.nrows();
    let tiny = 1e-14 * l.amax();
    let mut d = vec![0.0; n];
    let mut queue = VecDeque::new();
    for start in 0..n {
        if d[start] != 0.0 {
            continue;
        }
        d[start] = 1.0;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let (lij, lji) = (l[(i, j)], l[(j, i)]);
                let (zi, zj) = (lij.abs() <= tiny, lji.abs() <= tiny);
                if zi && zj {
                    continue;
                }
                if zi != zj || lij.signum() != lji.signum() {
                    return None;
                }
                let dj = d[i] * (lij / lji).sqrt();
                if d[j] == 0.0 {
                    d[j] = dj;
                    queue.push_back(j);
                } else if (d[j] - dj).abs() > 1e-10 * d[j].abs() {
                    return None;
                }
            }
        }
    }
    Some(d)
}
