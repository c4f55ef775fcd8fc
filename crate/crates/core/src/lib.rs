//! Multi-view learning with vertical, horizontal and sequential federation.
//!
//! The centralized solver lives in [`mvl`]. [`vfed`], [`hfed`] and [`sfed`]
//! run the three federated protocols on top of the round runtime and wire
//! format in [`fedcore`]. [`data`] generates, partitions and stores datasets,
//! and [`eval`] drives experiments and computes metrics.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod eval;
pub mod fedcore;
pub mod hfed;
pub mod mvl;
pub mod numerics;
pub mod sfed;
pub mod vfed;

pub use error::{Error, Result};
pub use numerics::{Matrix, RngSeed};
