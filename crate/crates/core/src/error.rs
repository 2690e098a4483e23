use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain violation: {0}")]
    Domain(String),

    #[error("series did not converge within {terms} terms at z = {z}")]
    SeriesNotConverged { z: f64, terms: usize },

    #[error("accuracy ceiling exceeded: {0}")]
    AccuracyCeiling(String),

    #[error("ellipticity violated at t = {t}: minimum symbol {min_symbol:.3e} below floor {floor:.3e}")]
    Ellipticity { t: f64, min_symbol: f64, floor: f64 },

    #[error("generator at t = {t} is not diagonalizable by a diagonal similarity")]
    NotSymmetrizable { t: f64 },

    #[error("resolvent is singular at lambda = {lambda}")]
    SingularResolvent { lambda: f64 },

    #[error("unsupported norm pair ({p}, {q})")]
    UnsupportedNormPair { p: f64, q: f64 },

    #[error("quadrature invariant violated: {0}")]
    QuadratureInvariant(String),

    #[error("Volterra iteration did not converge after {iterations} sweeps (last change {last_change:.3e})")]
    VolterraNotConverged { iterations: usize, last_change: f64 },

    #[error("precondition failed: weighted initial norm {measured:.6e} is not below kappa = {kappa:.6e}")]
    Precondition { measured: f64, kappa: f64 },

    #[error("Picard iteration is not contracting (ratio {ratio:.3} at sweep {iteration})")]
    NonContraction { iteration: usize, ratio: f64 },

    #[error("window too long: weighted norm {weighted:.6e} reached 2*kappa = {bound:.6e}")]
    WindowTooLong { weighted: f64, bound: f64 },

    #[error("fit rejected: {0}")]
    FitRejected(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
