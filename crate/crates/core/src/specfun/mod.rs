//! Special functions: Gamma, the Riemann–Liouville kernel, the Wright-type
//! density, and the two-parameter Mittag-Leffler function.

mod gamma;
mod mittag_leffler;
pub mod quad;
mod wright;

pub use gamma::{gamma, gamma_fn, ln_gamma, rgamma, sin_pi};
pub use mittag_leffler::mittag_leffler;
pub use wright::{
    beta_convolution, beta_convolution_quadrature, g_alpha, wright_moment, wright_moment_quadrature,
    wright_phi, FracOrder, SeriesAccuracy,
};
