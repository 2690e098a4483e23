//! Gauss–Legendre rules and a globally adaptive Gauss–Kronrod (7, 15) integrator.

use std::collections::BinaryHeap;
use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Nodes and weights of the n-point Gauss–Legendre rule on [-1, 1], ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Fixed Gauss–Legendre rule mapped onto arbitrary intervals.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        let (nodes, weights) = gauss_legendre(n);
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }

    /// Composite rule on `panels` equal subintervals.
    pub fn integrate_composite(&self, a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|i| self.integrate(a + i as f64 * h, a + (i + 1) as f64 * h, &f))
            .sum()
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadTol {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for QuadTol {
    fn default() -> Self {
        Self { abs: 1e-14, rel: 1e-12, max_intervals: 2000 }
    }
}

impl QuadTol {
    pub fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
}

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

struct Interval {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Interval {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Interval {}
impl PartialOrd for Interval {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Interval {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Adaptive integration over `[a, b]`, bisecting the worst interval first.
pub fn integrate_adaptive(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: QuadTol) -> Result<QuadResult> {
    integrate_adaptive_points(f, &[a, b], tol)
}

/// Adaptive integration with user breakpoints (sorted, first and last are the limits).
pub fn integrate_adaptive_points(
    f: impl Fn(f64) -> f64,
    points: &[f64],
    tol: QuadTol,
) -> Result<QuadResult> {
    if points.len() < 2 {
        return Err(Error::domain("need at least two integration limits"));
    }
    let mut heap = BinaryHeap::new();
    let (mut total, mut err) = (0.0, 0.0);
    for w in points.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let (value, error) = gk15(&f, w[0], w[1]);
        total += value;
        err += error;
        heap.push(Interval { a: w[0], b: w[1], value, error });
    }
    let mut count = heap.len();
    while err > tol.abs.max(tol.rel * total.abs()) {
        if count >= tol.max_intervals {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk15(&f, worst.a, mid);
        let (v2, e2) = gk15(&f, mid, worst.b);
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.error;
        heap.push(Interval { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Interval { a: mid, b: worst.b, value: v2, error: e2 });
        count += 1;
    }
    // Re-sum to shed accumulated update rounding.
    let (value, error) = heap.iter().fold((0.0, 0.0), |(v, e), iv| (v + iv.value, e + iv.error));
    if !value.is_finite() {
        return Err(Error::AccuracyCeiling("non-finite quadrature value".into()));
    }
    Ok(QuadResult { value, error })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let rule = GaussLegendre::new(8);
        for k in 0..16 {
            let got = rule.integrate(0.0, 1.0, |x| x.powi(k));
            assert!((got - 1.0 / (k as f64 + 1.0)).abs() < 1e-14, "k = {k}");
        }
        let (x, w) = gauss_legendre(5);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-15);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
        assert_eq!(x[2], 0.0);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let r = integrate_adaptive(|x| 1.0 / x.sqrt(), 0.0, 1.0, QuadTol::new(1e-12, 1e-12)).unwrap();
        assert!((r.value - 2.0).abs() < 1e-10);
    }

    #[test]
    fn adaptive_smooth_integrand() {
        let r = integrate_adaptive(f64::sin, 0.0, std::f64::consts::PI, QuadTol::default()).unwrap();
        assert!((r.value - 2.0).abs() < 1e-14);
    }

    #[test]
    fn breakpoints_resolve_kinks() {
        let r = integrate_adaptive_points(|x: f64| (x - 0.3).abs(), &[0.0, 0.3, 1.0], QuadTol::default())
            .unwrap();
        assert!((r.value - (0.045 + 0.245)).abs() < 1e-15);
    }
}
