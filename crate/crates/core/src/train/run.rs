use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::optim::{OptimizerConfig, OptimizerState};
use super::schedule::{shots_at, ShotSchedule};
use super::spsa::{spsa_gradient_with, Exec, SeededCost, SpsaConfig, MAX_NULL_RETRIES};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

/// Everything that shapes a run besides the cost itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub optimizer: OptimizerConfig,
    pub spsa: SpsaConfig,
    pub schedule: ShotSchedule,
    pub iters: usize,
    pub seed: u64,
    /// Worker threads for cost evaluations; results do not depend on it.
    pub threads: usize,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.optimizer.validate()?;
        self.spsa.validate()?;
        if self.iters > self.schedule.total_iters {
            return Err(Error::invalid(format!(
                "{} iterations exceed the shot schedule length {}",
                self.iters, self.schedule.total_iters
            )));
        }
        if self.threads == 0 {
            return Err(Error::invalid("thread count must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    /// Cost at the parameters entering this iteration.
    pub cost: f64,
    pub shots: u64,
    /// Task-specific figure of merit, when the task reports one.
    pub metric: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: TrainConfig,
    pub seed: u64,
    pub history: Vec<IterationRecord>,
    pub final_params: Vec<f64>,
    /// Seconds per iteration. Not part of equality: it is the one field
    /// that legitimately differs between identical runs.
    pub wall_clock: Vec<f64>,
}

impl PartialEq for RunRecord {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
            && self.seed == other.seed
            && self.history == other.history
            && self.final_params.len() == other.final_params.len()
            && self
                .final_params
                .iter()
                .zip(&other.final_params)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Worker count from `ADEQNN_THREADS`, defaulting to one.
pub fn thread_count() -> usize {
    std::env::var("ADEQNN_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or(1)
}

/// Evaluates a seeded cost, retrying with fresh seeds when post-selection
/// blocks every shot.
pub fn eval_with_retry(cost: &dyn SeededCost, theta: &[f64], seed: u64) -> Result<f64> {
    for attempt in 0..MAX_NULL_RETRIES as u64 {
        match cost.eval(theta, derive_seed(seed, &[attempt])) {
            Err(Error::NullPostSelection(_)) => continue,
            other => return other,
        }
    }
    Err(Error::Training(format!(
        "post-selection blocked every shot in {MAX_NULL_RETRIES} consecutive evaluations"
    )))
}

/// SPSA + adaptive-moment optimization.
///
/// `build(iter)` returns the cost for iteration `iter` (for example one
/// mini-batch). Each iteration records the cost at the incoming
/// parameters, estimates the gradient with `shots_at(iter)` shots per
/// evaluation, and takes one optimizer step. `observe(iter, theta)` may
/// report a metric for the incoming parameters. Coordinates with
/// `free[i] == false` never move.
pub fn train_loop<B, C, O>(
    mut build: B,
    theta0: &[f64],
    free: Option<&[bool]>,
    cfg: &TrainConfig,
    mut observe: O,
) -> Result<RunRecord>
where
    B: FnMut(usize) -> C,
    C: Fn(&[f64], u64, u64) -> Result<f64> + Sync,
    O: FnMut(usize, &[f64]) -> Result<Option<f64>>,
{
    cfg.validate()?;
    if theta0.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFinite("initial parameters"));
    }
    let all_free = vec![true; theta0.len()];
    let free = free.unwrap_or(&all_free);
    if free.len() != theta0.len() {
        return Err(Error::DimensionMismatch {
            expected: theta0.len(),
            got: free.len(),
        });
    }

    let pool = if cfg.threads > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.threads)
                .build()
                .map_err(|e| Error::Training(format!("thread pool: {e}")))?,
        )
    } else {
        None
    };
    let exec = match &pool {
        Some(p) => Exec::Pool(p),
        None => Exec::Serial,
    };

    let mut rng = rng_from_seed(cfg.seed);
    let mut opt = OptimizerState::new(cfg.optimizer.clone(), theta0.len())?;
    let mut theta = theta0.to_vec();
    let mut history = Vec::with_capacity(cfg.iters);
    let mut wall_clock = Vec::with_capacity(cfg.iters);

    for iter in 0..cfg.iters {
        let started = Instant::now();
        let shots = shots_at(&cfg.schedule, iter)?;
        let cost_fn = build(iter);
        let seeded = |t: &[f64], seed: u64| cost_fn(t, shots, seed);

        let record_seed: u64 = rng.random();
        let cost = eval_with_retry(&seeded, &theta, record_seed)?;
        let metric = observe(iter, &theta)?;

        let g = spsa_gradient_with(&seeded, &theta, iter, &cfg.spsa, free, &mut rng, exec)?;
        opt.update(&mut theta, &g)?;
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite("parameters after update"));
        }

        history.push(IterationRecord {
            iter,
            cost,
            shots,
            metric,
        });
        wall_clock.push(started.elapsed().as_secs_f64());
    }

    Ok(RunRecord {
        config: cfg.clone(),
        seed: cfg.seed,
        history,
        final_params: theta,
        wall_clock,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad_cfg(iters: usize, threads: usize) -> TrainConfig {
        TrainConfig {
            optimizer: OptimizerConfig::amsgrad(),
            spsa: SpsaConfig::default(),
            schedule: ShotSchedule::new(100, 2, iters.max(1)).unwrap(),
            iters,
            seed: 7,
            threads,
        }
    }

    fn quad(t: &[f64], _shots: u64, _seed: u64) -> Result<f64> {
        Ok(t.iter().map(|x| (x - 0.5) * (x - 0.5)).sum())
    }

    #[test]
    fn zero_iterations_return_start() {
        let theta0 = [0.1, 0.2];
        let r = train_loop(|_| quad, &theta0, None, &quad_cfg(0, 1), |_, _| Ok(None)).unwrap();
        assert!(r.history.is_empty());
        assert_eq!(r.final_params, theta0.to_vec());
    }

    #[test]
    fn reduces_quadratic_and_is_deterministic() {
        let theta0 = [2.0, -1.0, 0.0];
        let a = train_loop(|_| quad, &theta0, None, &quad_cfg(200, 1), |_, _| Ok(None)).unwrap();
        let b = train_loop(|_| quad, &theta0, None, &quad_cfg(200, 1), |_, _| Ok(None)).unwrap();
        assert_eq!(a, b);
        assert!(a.history.last().unwrap().cost < 0.1 * a.history[0].cost);
    }

    #[test]
    fn threads_do_not_change_results() {
        let noisy = |t: &[f64], shots: u64, seed: u64| {
            let mut r = rng_from_seed(seed);
            let noise: f64 = r.random_range(-1.0..1.0) / (shots as f64).sqrt();
            Ok(t.iter().map(|x| x * x).sum::<f64>() + noise)
        };
        let theta0 = [1.0, -0.5];
        let a = train_loop(|_| noisy, &theta0, None, &quad_cfg(30, 1), |_, _| Ok(None)).unwrap();
        let b = train_loop(|_| noisy, &theta0, None, &quad_cfg(30, 3), |_, _| Ok(None)).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.final_params, b.final_params);
    }

    #[test]
    fn frozen_mask_holds_coordinates() {
        let theta0 = [2.0, -1.0];
        let r = train_loop(|_| quad, &theta0, Some(&[false, true]), &quad_cfg(50, 1), |_, _| Ok(None))
            .unwrap();
        assert_eq!(r.final_params[0], 2.0);
        assert_ne!(r.final_params[1], -1.0);
    }

    #[test]
    fn record_json_round_trip() {
        let r = train_loop(|_| quad, &[0.3], None, &quad_cfg(5, 1), |i, _| Ok(Some(i as f64)))
            .unwrap();
        let s = serde_json::to_string(&r).unwrap();
        let back: RunRecord = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.wall_clock.len(), 5);
    }

    #[test]
    fn blocked_cost_fails_after_retries() {
        let blocked = |_: &[f64], _: u64, _: u64| Err(Error::NullPostSelection(0.0));
        let r = train_loop(|_| blocked, &[0.0], None, &quad_cfg(3, 1), |_, _| Ok(None));
        assert!(matches!(r, Err(Error::Training(_))));
    }

    #[test]
    fn thread_count_defaults_to_one() {
        if std::env::var("ADEQNN_THREADS").is_err() {
            assert_eq!(thread_count(), 1);
        }
    }
}
