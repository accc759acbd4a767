//! Gradient descent with large, risk-adaptive stepsizes for linearly
//! separable classification.
//!
//! The crate is organised around a handful of modules:
//!
//! - [`losses`]: the loss family, its inverse and the transformed-objective
//!   primitives, all with log-domain variants that survive risk underflow.
//! - [`dataset`]: datasets carrying a margin certificate, random separable
//!   generators, and the hard-instance constructions used by lower bounds.
//! - [`descent`]: risk and gradient evaluation for linear models, the
//!   adaptive scheduler, GD runs, and closed-form risk bounds.
//! - [`two_layer`]: leaky two-layer networks with fixed output signs.
//! - [`online`]: Perceptron and online SGD with mistake counting.
//! - [`verify`]: executable checks that compare observed trajectories with
//!   the bounds, producing [`verify::BoundReport`]s.

pub mod dataset;
pub mod descent;
mod error;
pub mod export;
pub mod losses;
pub mod numeric;
pub mod online;
pub mod two_layer;
pub mod verify;

pub use dataset::{Certificate, Dataset, HardKind, ValidationReport};
pub use descent::{GdConfig, RiskValue, RunStatus, StepRecord, StepsizeMode, StopRule, Trajectory};
pub use error::{Error, Result};
pub use losses::{LossKind, LossSpec};
pub use online::OnlineRun;
pub use two_layer::{Activation, TwoLayerNet};
pub use verify::BoundReport;

/// Library version, embedded in output provenance headers.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
