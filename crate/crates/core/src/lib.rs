pub mod circuit;
pub mod cli;
pub mod datasets;
pub mod error;
pub mod metrics;
pub mod qcore;
pub mod rng;
pub mod tasks;
pub mod train;

pub use error::{Error, Result};
