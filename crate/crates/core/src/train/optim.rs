use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    AmsGrad,
    RmsProp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl OptimizerConfig {
    pub fn amsgrad() -> Self {
        OptimizerConfig {
            kind: OptimizerKind::AmsGrad,
            lr: 0.05,
            beta1: 0.9,
            beta2: 0.99,
            eps: 1e-8,
        }
    }

    pub fn rmsprop() -> Self {
        OptimizerConfig {
            kind: OptimizerKind::RmsProp,
            lr: 0.01,
            beta1: 0.0,
            beta2: 0.9,
            eps: 1e-8,
        }
    }

    pub fn with_lr(mut self, lr: f64) -> Self {
        self.lr = lr;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::invalid(format!("learning rate {}", self.lr)));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::invalid("optimizer betas must lie in [0, 1)"));
        }
        if !(self.eps > 0.0) {
            return Err(Error::invalid("optimizer epsilon must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub config: OptimizerConfig,
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    /// Running elementwise maximum of `second_moment` (AMSGrad only).
    pub max_second_moment: Vec<f64>,
    pub step: u64,
}

impl OptimizerState {
    pub fn new(config: OptimizerConfig, n: usize) -> Result<Self> {
        config.validate()?;
        Ok(OptimizerState {
            config,
            first_moment: vec![0.0; n],
            second_moment: vec![0.0; n],
            max_second_moment: vec![0.0; n],
            step: 0,
        })
    }

    fn check(&self, theta: &[f64], g: &[f64]) -> Result<()> {
        let n = self.first_moment.len();
        if theta.len() != n || g.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: if theta.len() != n { theta.len() } else { g.len() },
            });
        }
        if g.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("gradient"));
        }
        Ok(())
    }

    /// Updates `theta` in place with whichever rule the config names.
    pub fn update(&mut self, theta: &mut [f64], g: &[f64]) -> Result<()> {
        self.check(theta, g)?;
        let c = &self.config;
        match c.kind {
            OptimizerKind::AmsGrad => {
                for i in 0..theta.len() {
                    self.first_moment[i] = c.beta1 * self.first_moment[i] + (1.0 - c.beta1) * g[i];
                    self.second_moment[i] =
                        c.beta2 * self.second_moment[i] + (1.0 - c.beta2) * g[i] * g[i];
                    self.max_second_moment[i] =
                        self.max_second_moment[i].max(self.second_moment[i]);
                    theta[i] -=
                        c.lr * self.first_moment[i] / (self.max_second_moment[i].sqrt() + c.eps);
                }
            }
            OptimizerKind::RmsProp => {
                for i in 0..theta.len() {
                    self.second_moment[i] =
                        c.beta2 * self.second_moment[i] + (1.0 - c.beta2) * g[i] * g[i];
                    theta[i] -= c.lr * g[i] / (self.second_moment[i].sqrt() + c.eps);
                }
            }
        }
        self.step += 1;
        Ok(())
    }
}

/// `m <- b1 m + (1-b1) g`, `v <- b2 v + (1-b2) g^2`, `v_hat <- max(v_hat, v)`,
/// `theta <- theta - lr m / (sqrt(v_hat) + eps)`.
pub fn amsgrad_step(
    state: &OptimizerState,
    theta: &[f64],
    g: &[f64],
) -> Result<(Vec<f64>, OptimizerState)> {
    if state.config.kind != OptimizerKind::AmsGrad {
        return Err(Error::invalid("optimizer state is not AMSGrad"));
    }
    let mut s = state.clone();
    let mut t = theta.to_vec();
    s.update(&mut t, g)?;
    Ok((t, s))
}

/// `v <- b2 v + (1-b2) g^2`, `theta <- theta - lr g / (sqrt(v) + eps)`.
pub fn rmsprop_step(
    state: &OptimizerState,
    theta: &[f64],
    g: &[f64],
) -> Result<(Vec<f64>, OptimizerState)> {
    if state.config.kind != OptimizerKind::RmsProp {
        return Err(Error::invalid("optimizer state is not RMSProp"));
    }
    let mut s = state.clone();
    let mut t = theta.to_vec();
    s.update(&mut t, g)?;
    Ok((t, s))
}
