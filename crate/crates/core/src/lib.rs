//! Regression with cost-based rejection.
//!
//! A model here is a pair (h, r): a regressor `h` that predicts a real value
//! and a rejector `r` whose sign decides whether to predict at all. Accepting
//! an example costs the squared error; rejecting it costs a known amount
//! c(x). The pair is trained jointly by descending a surrogate loss that
//! treats rejection as binary classification, and evaluated with a metric
//! suite built around the mean of that accept-or-pay loss.
//!
//! The crate also ships oracle machinery — synthetic distributions with known
//! conditional moments, closed-form optimal decisions, grid minimizers, and a
//! regret-transfer check — so the optimality and calibration claims behind
//! the training objective can be verified empirically, plus an experiment
//! runner (`rcr run`) that drives dataset x cost x loss grids with seeded,
//! byte-reproducible outputs.

pub mod data;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod loss;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod rng;
pub mod train;

pub use error::{Error, Result};
