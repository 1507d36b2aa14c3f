//! Crowd wisdom with decision aids: crowd error metrics, information and
//! choice effects, an experiment simulator, statistical tests, optimal crowd
//! weights and a replication harness for two published experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod effects;
pub mod error;
pub mod metrics;
pub mod model;
pub(crate) mod numeric;
pub mod plot;
pub mod replicate;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod weights;

pub use error::{Error, Result};
