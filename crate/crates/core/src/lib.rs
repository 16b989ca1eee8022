//! Load allocation, coding and simulation for distributed matrix-vector
//! multiplication over heterogeneous clusters.
//!
//! The centerpiece is the HCMM allocator: given per-worker run-time models
//! (shifted exponential or shifted Weibull), it assigns each worker the number
//! of coded rows that maximizes the expected aggregate return at the master,
//! so that the product can be decoded from the first `r` coded inner products
//! that arrive. Around it sit:
//!
//! * [`models`]: run-time distribution models (CDF, sampling, means),
//! * [`allocator`]: HCMM plus the benchmark allocation schemes,
//! * [`coding`]: random linear codes and LT codes with a peeling decoder,
//! * [`simulator`]: Monte Carlo completion-time studies with straggler
//!   injection and common random numbers,
//! * [`budget`]: cost modeling and budget-constrained machine selection,
//! * [`scenarios`]: canned cluster/budget scenarios and a TOML config schema,
//! * [`emulator`]: a local master-worker run of a real coded job, verified
//!   against the directly computed product.
//!
//! All numeric kernels are generic over the scalar type through [`scalar::Real`]
//! (`f32` or `f64`); the aliases below fix `f64`, which is what the CLI and the
//! emulator use.

// Validation deliberately writes `!(x > 0)` so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod allocator;
pub mod budget;
pub mod coding;
pub mod emulator;
mod error;
pub mod gamma;
pub mod models;
pub mod rng;
pub mod roots;
pub mod scalar;
pub mod scenarios;
pub mod simulator;

pub use error::{Error, Result};
pub use scalar::Real;

/// Worker run-time model over `f64`.
pub type RuntimeModel = models::RuntimeModel<f64>;
/// Cluster description over `f64`.
pub type ClusterSpec = models::ClusterSpec<f64>;
/// Load allocation over `f64`.
pub type Allocation = allocator::Allocation<f64>;
/// Straggler injection model over `f64`.
pub type StragglerModel = simulator::StragglerModel<f64>;
/// Dense row-major matrix over `f64`.
pub type DenseMatrix = coding::DenseMatrix<f64>;
/// Budget-constrained machine-selection scenario over `f64`.
pub type BudgetScenario = budget::BudgetScenario<f64>;
