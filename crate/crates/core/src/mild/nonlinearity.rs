use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::generator::{lp_norm, SpatialGrid};

type Pointwise = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A pointwise nonlinearity J with its L^{2p} → L² Lipschitz envelope
/// l(r) = lipschitz_scale · r^envelope_exponent on the ball of radius r.
#[derive(Clone)]
pub struct SemilinearSpec {
    label: String,
    map: Pointwise,
    p_power: Option<f64>,
    lipschitz_scale: f64,
    envelope_exponent: f64,
    /// The p of the L^{2p} ball the envelope refers to.
    p: f64,
}

impl fmt::Debug for SemilinearSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SemilinearSpec")
            .field("label", &self.label)
            .field("p_power", &self.p_power)
            .field("lipschitz_scale", &self.lipschitz_scale)
            .field("envelope_exponent", &self.envelope_exponent)
            .finish()
    }
}

impl SemilinearSpec {
    /// J ≡ 0.
    pub fn zero(p: f64) -> Self {
        Self { label: "zero".into(), map: Arc::new(|_| 0.0), p_power: None, lipschitz_scale: 0.0, envelope_exponent: 0.0, p }
    }

    /// J(u) = c u; Hölder on the finite domain gives l(r) = |c| |Ω|^{1/2 - 1/(2p)}.
    pub fn linear(c: f64, p: f64, grid: &SpatialGrid) -> Result<Self> {
        check_p(p)?;
        let scale = c.abs() * grid.total_measure().powf(0.5 - 0.5 / p);
        Ok(Self {
            label: format!("linear({c})"),
            map: Arc::new(move |u| c * u),
            p_power: None,
            lipschitz_scale: scale,
            envelope_exponent: 0.0,
            p,
        })
    }

    /// J(u) = |u|^{s-1} u with 1 ≤ s ≤ p.
    ///
    /// |J(u) - J(v)| ≤ s max(|u|,|v|)^{s-1} |u - v| and Hölder give
    /// l(r) = s 2^{(s-1)/(2p)} |Ω|^{(p-s)/(2p)} r^{s-1}.
    pub fn power(s: f64, p: f64, grid: &SpatialGrid) -> Result<Self> {
        check_p(p)?;
        if !(s >= 1.0 && s <= p) {
            return Err(Error::domain(format!("power nonlinearity needs 1 <= s <= p = {p}, got {s}")));
        }
        let scale = s * 2f64.powf((s - 1.0) / (2.0 * p)) * grid.total_measure().powf((p - s) / (2.0 * p));
        Ok(Self {
            label: format!("power({s})"),
            map: Arc::new(move |u: f64| u.abs().powf(s - 1.0) * u),
            p_power: Some(s),
            lipschitz_scale: scale,
            envelope_exponent: s - 1.0,
            p,
        })
    }

    /// Arbitrary J with a caller-certified envelope.
    pub fn custom(
        label: impl Into<String>,
        map: impl Fn(f64) -> f64 + Send + Sync + 'static,
        p: f64,
        lipschitz_scale: f64,
        envelope_exponent: f64,
    ) -> Result<Self> {
        check_p(p)?;
        if map(0.0) != 0.0 {
            return Err(Error::domain("nonlinearity must vanish at 0"));
        }
        Ok(Self { label: label.into(), map: Arc::new(map), p_power: None, lipschitz_scale, envelope_exponent, p })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn p_power(&self) -> Option<f64> {
        self.p_power
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn is_zero(&self) -> bool {
        self.lipschitz_scale == 0.0
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        v.map(|x| (self.map)(x))
    }

    pub fn lipschitz_envelope(&self, r: f64) -> f64 {
        self.lipschitz_scale * r.max(0.0).powf(self.envelope_exponent)
    }

    /// Λ with l(r) ≤ Λ r^{(1-a)/b} for r ≥ 1.
    pub fn envelope_const(&self, a: f64, b: f64) -> Result<f64> {
        let growth = (1.0 - a) / b;
        if self.envelope_exponent > growth * (1.0 + 1e-12) + 1e-12 {
            return Err(Error::domain(format!(
                "envelope grows like r^{} but only r^{growth} is allowed",
                self.envelope_exponent
            )));
        }
        Ok(self.lipschitz_scale)
    }

    /// Largest observed ‖J(u) - J(v)‖₂ / (l(r) ‖u - v‖_{2p}) over random pairs in the ball of radius r.
    pub fn sample_lipschitz(&self, grid: &SpatialGrid, r: f64, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = 2.0 * self.p;
        let draw = |rng: &mut ChaCha8Rng| {
            let raw = DVector::from_fn(grid.len(), |_, _| rng.random_range(-1.0..1.0));
            let norm = lp_norm(&raw, grid, q).max(f64::MIN_POSITIVE);
            raw * (r * rng.random_range(0.0..1.0) / norm)
        };
        let env = self.lipschitz_envelope(r);
        (0..samples)
            .map(|_| {
                let (u, v) = (draw(&mut rng), draw(&mut rng));
                let num = lp_norm(&(self.apply(&u) - self.apply(&v)), grid, 2.0);
                let den = env * lp_norm(&(u - v), grid, q);
                if den > 0.0 { num / den } else { 0.0 }
            })
            .fold(0.0, f64::max)
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::domain(format!("p must exceed 1, got {p}")));
    }
    Ok(())
}
