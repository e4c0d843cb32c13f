use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shots per cost evaluation double `doublings` times over the run:
/// `s0 * 2^floor(iter * (doublings + 1) / total_iters)`, capped at
/// `s0 * 2^doublings`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotSchedule {
    pub s0: u64,
    pub doublings: u32,
    pub total_iters: usize,
}

impl ShotSchedule {
    pub fn new(s0: u64, doublings: u32, total_iters: usize) -> Result<Self> {
        if s0 == 0 {
            return Err(Error::invalid("initial shot count must be positive"));
        }
        if doublings > 40 || s0.checked_shl(doublings).is_none_or(|v| v >> doublings != s0) {
            return Err(Error::invalid("shot schedule overflows"));
        }
        Ok(ShotSchedule {
            s0,
            doublings,
            total_iters,
        })
    }

    pub fn max_shots(&self) -> u64 {
        self.s0 << self.doublings
    }
}

pub fn shots_at(schedule: &ShotSchedule, iter: usize) -> Result<u64> {
    if iter >= schedule.total_iters {
        return Err(Error::invalid(format!(
            "iteration {iter} outside schedule of {}",
            schedule.total_iters
        )));
    }
    let level = (iter as u128 * (schedule.doublings as u128 + 1) / schedule.total_iters as u128)
        .min(schedule.doublings as u128) as u32;
    Ok(schedule.s0 << level)
}
