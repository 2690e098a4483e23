//! Time-fractional evolution equations driven by time-dependent generators.

pub mod error;
pub mod fit;
pub mod generator;
pub mod mild;
pub mod oracle;
pub mod par;
pub mod subordination;
pub mod specfun;
pub mod timegrid;
pub mod ultra;
pub mod volterra;

pub use error::{Error, Result};
pub use par::Exec;
