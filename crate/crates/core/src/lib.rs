//! Budgeted selection of observations on tree-shaped Bayesian networks.
//!
//! Two model families are supported: boolean networks with noisy binary
//! tests ([`boss`]) and linear-Gaussian networks ([`goss`]). Both solvers
//! compile per-node profile tables over discretized quality grids and pick
//! the best root entry; [`oracle`] provides exact evaluation and brute force
//! for small instances.

pub mod boss;
pub mod driver;
mod engine;
pub mod error;
pub mod generate;
pub mod goss;
pub mod model;
pub mod oracle;
pub mod plan;
pub mod profile;
pub mod solution;

pub use engine::Compilation;
pub use error::{OssError, Result};
pub use generate::GenParams;
pub use model::{Instance, InstanceKind, NodeId};
pub use plan::ObservationPlan;
pub use solution::{Solution, SolutionDoc, SubsetEval};
