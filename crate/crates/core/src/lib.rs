//! Predictivity statistics for discrete explanatory variables and a
//! two-class outcome: the I and J scores, exact biases of the training and
//! out-of-sample error estimates, a case-control SNP model with its oracle
//! parameters, a seeded simulator, and Partition Retention variable
//! selection.

pub mod catalog;
pub mod cli;
pub mod disease_model;
pub mod error;
pub mod estimators;
pub mod exact_binomial;
pub mod io;
pub mod partition_retention;
pub mod simulator;

pub use error::{Error, Result};
