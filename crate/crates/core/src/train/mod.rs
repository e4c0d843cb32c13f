//! Hybrid optimization: SPSA gradient estimates fed to AMSGrad or RMSProp,
//! with a shot budget that grows over the run.

mod optim;
mod run;
mod schedule;
mod spsa;

pub use optim::{amsgrad_step, rmsprop_step, OptimizerConfig, OptimizerKind, OptimizerState};
pub use run::{
    eval_with_retry, thread_count, train_loop, IterationRecord, RunRecord, TrainConfig,
};
pub use schedule::{shots_at, ShotSchedule};
pub use spsa::{spsa_gradient, spsa_gradient_with, Exec, SeededCost, SpsaConfig, MAX_NULL_RETRIES};

use crate::error::{Error, Result};

/// Mean squared difference.
pub fn mse_loss(scores: &[f64], target: &[f64]) -> Result<f64> {
    if scores.len() != target.len() {
        return Err(Error::DimensionMismatch {
            expected: target.len(),
            got: scores.len(),
        });
    }
    if scores.is_empty() {
        return Err(Error::invalid("empty score vector"));
    }
    let s: f64 = scores.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(s / scores.len() as f64)
}
