//! Online subspace tracking and streaming tensor completion from incomplete
//! data, with dense batch oracles for checking the online estimates.
//!
//! The crate is `no_std` (it needs `alloc`). File formats and the experiment
//! runner live in the companion `subtrack` crate.
//!
//! * [`matrix_tracker`]: alternating least-squares tracker (direct and RLS
//!   row updates).
//! * [`sgd_tracker`]: first-order tracker with backtracking step sizes and
//!   optional Nesterov extrapolation.
//! * [`tensor_tracker`]: online PARAFAC decomposition and imputation of
//!   incomplete slices.
//! * [`oracle`]: nuclear-norm batch solvers and optimality certificates.
//! * [`anomaly`]: sparse anomaly estimation over a routing matrix.
//! * [`synth`]: seeded synthetic streams.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod anomaly;
pub mod data;
pub mod error;
pub mod linalg;
pub mod matrix_tracker;
pub mod metrics;
pub mod oracle;
pub mod sgd_tracker;
pub mod synth;
pub mod tensor_tracker;

pub use data::{MaskedSlice, MaskedVector};
pub use error::{Error, Result};
