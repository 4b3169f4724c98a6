//! Exact averages of quantum relative entropy between random density
//! matrices, with Monte Carlo estimators to check them.

pub mod ensembles;
pub mod error;
pub mod formulas;
pub mod harness;
pub mod matrixcore;
pub mod selftest;
pub mod specfun;
pub mod zonal;

pub use error::{Error, Result};
