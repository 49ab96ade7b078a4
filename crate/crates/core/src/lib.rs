//! Adequate-bootstrap inference: confidence intervals for the parameters
//! of a knowingly misspecified model, built by resampling at the largest
//! size at which a model-adequacy test still rejects only half the time.
//!
//! The crate provides the resampling engine, the adequacy tests, the
//! isotonic power-curve estimator, the model families used in the studies,
//! closed-form coverage theory, and reproducible simulation studies.

pub mod adequacy;
pub mod engine;
pub mod error;
pub mod isotonic;
pub mod linalg;
pub mod models;
pub mod sim;
pub mod statdist;
pub mod theory;

pub use error::{Error, Result};
