//! Coupling constructions and total-variation bounds for jump processes.
//!
//! The crate provides four layers:
//!
//! * [`measure`]: an exact algebra of atomic + grid-density measures
//!   (meet, total variation, convolution, isometries, truncation);
//! * [`semigroup`]: compound Poisson transition laws evaluated as truncated
//!   exponential series, with certified truncation error;
//! * [`coupling`]: the reflection-style coupling for random walks whose step
//!   distributions overlap after a shift, its first-passage laws, and the
//!   subordinated continuous-time version;
//! * [`criteria`] and [`bounds`]: checkable sufficient conditions for the
//!   coupling property of jump processes and closed-form/empirical
//!   total-variation rate bounds.
//!
//! The `levy-coupling` binary exposes the same functionality as a CLI; see
//! [`cli`].

pub mod bounds;
pub mod cli;
pub mod coupling;
pub mod criteria;
pub mod error;
pub mod measure;
pub mod semigroup;

pub use error::{Error, Result};
