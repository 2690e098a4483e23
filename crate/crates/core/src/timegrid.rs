use crate::error::{Error, Result};

/// Partition 0 = t₀ < … < t_K = T, graded as t_k = T (k/K)^r.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    nodes: Vec<f64>,
    grading: f64,
}

impl TimeGrid {
    pub fn graded(horizon: f64, steps: usize, grading: f64) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::domain(format!("time horizon must be positive, got {horizon}")));
        }
        if steps == 0 {
            return Err(Error::domain("time grid needs at least one step"));
        }
        if !(grading >= 1.0) || !grading.is_finite() {
            return Err(Error::domain(format!("grading exponent must be >= 1, got {grading}")));
        }
        let k = steps as f64;
        let mut nodes: Vec<f64> = (0..=steps).map(|i| horizon * (i as f64 / k).powf(grading)).collect();
        nodes[steps] = horizon;
        Ok(Self { nodes, grading })
    }

    pub fn uniform(horizon: f64, steps: usize) -> Result<Self> {
        Self::graded(horizon, steps, 1.0)
    }

    /// Grading max(1, 0.5 max(1, 2/α - 1)) rounded to one decimal.
    pub fn default_grading(alpha: f64) -> f64 {
        let r = 0.5 * (2.0 / alpha - 1.0).max(1.0);
        ((r * 10.0).round() / 10.0).max(1.0)
    }

    /// Arbitrary strictly increasing nodes starting at 0.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 || nodes[0] != 0.0 {
            return Err(Error::domain("time grid must start at 0 and have at least two nodes"));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("time grid nodes must be strictly increasing"));
        }
        Ok(Self { nodes, grading: 1.0 })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn t(&self, k: usize) -> f64 {
        self.nodes[k]
    }

    /// Number of nodes, K + 1.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn steps(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        *self.nodes.last().expect("non-empty grid")
    }

    pub fn grading(&self) -> f64 {
        self.grading
    }

    pub fn min_step(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    /// The first `len` nodes as a grid of their own.
    pub fn prefix(&self, len: usize) -> Result<Self> {
        if len < 2 || len > self.len() {
            return Err(Error::domain(format!("prefix length {len} outside 2..={}", self.len())));
        }
        Ok(Self { nodes: self.nodes[..len].to_vec(), grading: self.grading })
    }

    /// True when `other` begins with exactly these nodes.
    pub fn is_prefix_of(&self, other: &TimeGrid) -> bool {
        other.len() >= self.len() && other.nodes[..self.len()] == self.nodes[..]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_nodes() {
        let g = TimeGrid::graded(2.0, 4, 2.0).unwrap();
        assert_eq!(g.nodes(), &[0.0, 0.125, 0.5, 1.125, 2.0]);
        assert_eq!(g.steps(), 4);
        assert!((g.min_step() - 0.125).abs() < 1e-15);
        assert!(TimeGrid::graded(1.0, 4, 0.5).is_err());
        assert!(TimeGrid::from_nodes(vec![0.0, 0.5, 0.5]).is_err());
    }

    #[test]
    fn default_grading_values() {
        assert_eq!(TimeGrid::default_grading(0.5), 1.5);
        assert_eq!(TimeGrid::default_grading(0.3), 2.8);
        assert_eq!(TimeGrid::default_grading(0.8), 1.0);
    }

    #[test]
    fn prefixes() {
        let g = TimeGrid::uniform(1.0, 8).unwrap();
        let p = g.prefix(3).unwrap();
        assert!(p.is_prefix_of(&g));
        assert!(!g.is_prefix_of(&p));
        assert_eq!(p.horizon(), 0.25);
    }
}
