//! Tail bounds and continuity certificates for suprema of random fields on
//! finite index sets, via Grand Lebesgue Space norms, metric entropy and
//! partition schemes, with Monte Carlo checks on reference fields.

pub mod bounds;
pub mod conjugate;
pub mod continuity;
pub mod counterexample;
pub mod error;
pub mod gls;
pub mod metric;
pub mod numeric;
pub mod partition;
pub mod simulate;

pub use error::{Error, Result};
