use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::derive_seed;

/// Consecutive post-selection failures tolerated per perturbation draw.
pub const MAX_NULL_RETRIES: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpsaConfig {
    pub c0: f64,
    pub gamma: f64,
    pub avg_draws: usize,
}

impl Default for SpsaConfig {
    fn default() -> Self {
        SpsaConfig {
            c0: 0.1,
            gamma: 0.101,
            avg_draws: 4,
        }
    }
}

impl SpsaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c0 > 0.0 && self.c0.is_finite()) {
            return Err(Error::invalid(format!("SPSA c0 = {}", self.c0)));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::invalid(format!("SPSA gamma = {}", self.gamma)));
        }
        if self.avg_draws == 0 {
            return Err(Error::invalid("SPSA needs at least one draw"));
        }
        Ok(())
    }

    /// Perturbation size at iteration `k`: `c0 / (k + 1)^gamma`.
    pub fn c_k(&self, k: usize) -> f64 {
        self.c0 / ((k + 1) as f64).powf(self.gamma)
    }
}

/// A cost that may use randomness; the second argument seeds it.
pub trait SeededCost: Sync {
    fn eval(&self, theta: &[f64], seed: u64) -> Result<f64>;
}

impl<F> SeededCost for F
where
    F: Fn(&[f64], u64) -> Result<f64> + Sync,
{
    fn eval(&self, theta: &[f64], seed: u64) -> Result<f64> {
        self(theta, seed)
    }
}

/// Where cost evaluations run. `Pool` evaluations are collected in index
/// order, so results match `Serial` bit for bit.
#[derive(Clone, Copy)]
pub enum Exec<'a> {
    Serial,
    Pool(&'a rayon::ThreadPool),
}

impl Exec<'_> {
    pub fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            Exec::Serial => items.iter().map(f).collect(),
            Exec::Pool(pool) => pool.install(|| items.par_iter().map(f).collect()),
        }
    }
}

fn rademacher(rng: &mut impl Rng, free: &[bool]) -> Vec<f64> {
    free.iter()
        .map(|&on| {
            if !on {
                0.0
            } else if rng.random::<bool>() {
                1.0
            } else {
                -1.0
            }
        })
        .collect()
}

/// Full estimator: frozen coordinates (`free[i] == false`) are never
/// perturbed and get a zero gradient. A draw whose evaluation hits an
/// all-blocked post-selection is redrawn; after [`MAX_NULL_RETRIES`]
/// consecutive failures the estimate fails.
pub fn spsa_gradient_with(
    cost: &dyn SeededCost,
    theta: &[f64],
    k: usize,
    cfg: &SpsaConfig,
    free: &[bool],
    rng: &mut impl Rng,
    exec: Exec<'_>,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if free.len() != theta.len() {
        return Err(Error::DimensionMismatch {
            expected: theta.len(),
            got: free.len(),
        });
    }
    let ck = cfg.c_k(k);
    let base: u64 = rng.random();

    let mut deltas: Vec<Vec<f64>> = (0..cfg.avg_draws).map(|_| rademacher(rng, free)).collect();
    let mut attempts = vec![0u64; cfg.avg_draws];
    let mut diffs: Vec<Option<f64>> = vec![None; cfg.avg_draws];

    loop {
        let pending: Vec<usize> = (0..cfg.avg_draws).filter(|&d| diffs[d].is_none()).collect();
        if pending.is_empty() {
            break;
        }
        let jobs: Vec<(usize, i8)> = pending.iter().flat_map(|&d| [(d, 1), (d, -1)]).collect();
        let values = exec.map(&jobs, |&(d, sign)| {
            let shifted: Vec<f64> = theta
                .iter()
                .zip(&deltas[d])
                .map(|(t, dl)| t + sign as f64 * ck * dl)
                .collect();
            let seed = derive_seed(base, &[d as u64, attempts[d], (sign > 0) as u64]);
            cost.eval(&shifted, seed)
        });
        let mut redraw = Vec::new();
        let mut values = values.into_iter();
        for &d in &pending {
            let plus = values.next().expect("paired evaluation");
            let minus = values.next().expect("paired evaluation");
            match (plus, minus) {
                (Ok(plus), Ok(minus)) => {
                    if !plus.is_finite() || !minus.is_finite() {
                        return Err(Error::NonFinite("cost"));
                    }
                    diffs[d] = Some(plus - minus);
                }
                (Err(Error::NullPostSelection(_)), _) | (_, Err(Error::NullPostSelection(_))) => {
                    redraw.push(d);
                }
                (Err(e), _) | (_, Err(e)) => return Err(e),
            }
        }
        for d in redraw {
            attempts[d] += 1;
            if attempts[d] as usize >= MAX_NULL_RETRIES {
                return Err(Error::Training(format!(
                    "post-selection blocked every shot in {MAX_NULL_RETRIES} consecutive perturbations"
                )));
            }
            deltas[d] = rademacher(rng, free);
        }
    }

    let mut g = vec![0.0; theta.len()];
    for (delta, diff) in deltas.iter().zip(&diffs) {
        let scale = diff.expect("all draws resolved") / (2.0 * ck);
        for (gi, dl) in g.iter_mut().zip(delta) {
            *gi += scale * dl;
        }
    }
    let n = cfg.avg_draws as f64;
    for gi in &mut g {
        *gi /= n;
    }
    Ok(g)
}

/// Plain form: deterministic cost, every coordinate free, serial.
pub fn spsa_gradient(
    cost: impl Fn(&[f64]) -> Result<f64> + Sync,
    theta: &[f64],
    k: usize,
    cfg: &SpsaConfig,
    rng: &mut impl Rng,
) -> Result<Vec<f64>> {
    let seeded = |t: &[f64], _seed: u64| cost(t);
    spsa_gradient_with(&seeded, theta, k, cfg, &vec![true; theta.len()], rng, Exec::Serial)
}
