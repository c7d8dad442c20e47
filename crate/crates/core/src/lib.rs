//! Functional sliced inverse regression for sparse longitudinal covariates.
//!
//! Estimates the effective-dimension-reduction (e.d.r.) directions of a
//! scalar-on-function regression `Y = f(<beta_1, X>, ..., <beta_k, X>, eps)`
//! when each trajectory `X_i` is only observed at a handful of random times.
//!
//! The pipeline is:
//!
//! 1. smooth the pooled `(T_ij, Y_i, X_ij)` cloud with a 2D local linear
//!    smoother to get the inverse regression surface `m(t, y) = E[X(t) | Y = y]`
//!    and take the empirical covariance of the fitted curves ([`operators::estimate_gamma_e`]);
//! 2. smooth the pooled observations and their within-subject cross products to
//!    get the mean and covariance of `X` ([`operators::estimate_gamma`]);
//! 3. discretize both kernels on a grid, form a truncated inverse square root of
//!    the covariance, and eigendecompose the standardized inverse-regression
//!    operator ([`edr::fit`]).
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the CLI and the
//! parallel Monte Carlo driver live in the `fsir` crate.

#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod data;
pub mod edr;
pub mod error;
pub mod grid;
pub mod kernels;
pub mod linalg;
pub mod link;
pub mod metrics;
pub mod operators;
pub mod replicate;
pub mod simulation;
pub mod smoother;

pub use data::{LongitudinalDataset, Subject};
pub use edr::{fit, project, sign_align, EdrFit};
pub use error::{Error, Result};
pub use grid::{FunctionOnGrid, Grid};
pub use kernels::{BandwidthRule, Kernel1D, Kernel2D, KernelShape, SmootherSpec};
pub use operators::{OperatorKind, OperatorMatrix, SpectralDecomposition};
