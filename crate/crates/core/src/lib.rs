//! Distributed-lag sparse group lasso models that predict BOLD time series
//! from lagged EEG spectral power, with nested block cross-validation,
//! surrogate null tests, reference baselines and a synthetic data generator.

pub mod adf;
pub mod baselines;
pub mod bayes_opt;
pub mod cv;
pub mod error;
pub mod features;
pub mod sgl;
pub mod stats;
pub mod surrogates;
pub mod synth;

pub use error::{Error, Result};
