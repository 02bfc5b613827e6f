//! Max-margin boosting for robust one-bit compressed sensing.
//!
//! The crate is split along the lines of the experiment pipeline:
//!
//! * [`types`] and [`margin`]: instances, models, trajectories and the
//!   margin / exponential-loss formulas everything else consumes.
//! * [`datagen`]: deterministic synthetic instances driven by [`rng`].
//! * [`boost`]: AdaBoost over canonical-basis weak learners with the
//!   quadratic adaptive stepsize.
//! * [`lpmargin`]: the exact max-ℓ1-margin with dual certificates, solved
//!   by the dense dual or two-phase primal simplex in [`simplex`].
//! * [`metrics`]: prediction error, direction error, small-ball probes.
//! * [`oracle`]: brute-force references for tests.
//! * [`harness`]: experiment plans, result tables and SVG plots.

// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boost;
pub mod datagen;
pub mod error;
pub mod harness;
pub mod io;
pub mod lpmargin;
pub mod margin;
pub mod matrix;
pub mod metrics;
pub mod oracle;
pub mod rng;
pub mod simplex;
pub mod types;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use types::{EstimatorTag, Instance, IterationRecord, Model, Trajectory};
