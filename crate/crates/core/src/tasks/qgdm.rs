use serde::{Deserialize, Serialize};

use super::Variant;
use crate::circuit::{denoiser_forward, Block, ParamVector, ShotsMode};
use crate::datasets::{default_hamiltonian, forward_diffuse, gibbs_state, linear_schedule};
use crate::error::{Error, Result};
use crate::qcore::{uhlmann_fidelity, CMatrix, DensityMatrix, C64};
use crate::rng::{derive_seed, rng_from_seed};
use crate::train::{train_loop, OptimizerConfig, RunRecord, ShotSchedule, SpsaConfig, TrainConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QgdmConfig {
    pub variant: Variant,
    pub steps: usize,
    pub beta: f64,
    /// Row-major 4x4 Hamiltonian as `[re, im]` pairs.
    pub hamiltonian: Vec<[f64; 2]>,
    pub seed: u64,
    /// Sampled mode reconstructs each output state by tomography.
    pub shots_mode: ShotsMode,
    /// Optimizer iterations per denoising step.
    pub iters_per_step: usize,
    pub optimizer: OptimizerConfig,
    pub spsa: SpsaConfig,
    pub shots_s0: u64,
    pub shots_doublings: u32,
    pub threads: usize,
}

impl QgdmConfig {
    pub fn new(variant: Variant, steps: usize) -> Self {
        QgdmConfig {
            variant,
            steps,
            beta: 1.0,
            hamiltonian: matrix_to_pairs(&default_hamiltonian()),
            seed: 0,
            shots_mode: ShotsMode::Exact,
            iters_per_step: 200,
            optimizer: OptimizerConfig::amsgrad(),
            spsa: SpsaConfig {
                avg_draws: 8,
                ..SpsaConfig::default()
            },
            shots_s0: 1000,
            shots_doublings: 3,
            threads: 1,
        }
    }

    pub fn hamiltonian_matrix(&self) -> Result<CMatrix> {
        if self.hamiltonian.len() != 16 {
            return Err(Error::DimensionMismatch {
                expected: 16,
                got: self.hamiltonian.len(),
            });
        }
        Ok(CMatrix::from_row_iterator(
            4,
            4,
            self.hamiltonian.iter().map(|[re, im]| C64::new(*re, *im)),
        ))
    }

    pub fn target(&self) -> Result<DensityMatrix> {
        gibbs_state(&self.hamiltonian_matrix()?, self.beta)
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.iters_per_step == 0 {
            return Err(Error::invalid("steps and iterations per step must be positive"));
        }
        if self.threads == 0 {
            return Err(Error::invalid("thread count must be positive"));
        }
        self.optimizer.validate()?;
        self.spsa.validate()?;
        ShotSchedule::new(self.shots_s0, self.shots_doublings, 1)?;
        self.target().map(|_| ())
    }
}

pub fn matrix_to_pairs(m: &CMatrix) -> Vec<[f64; 2]> {
    (0..m.nrows())
        .flat_map(|r| (0..m.ncols()).map(move |c| (r, c)))
        .map(|(r, c)| [m[(r, c)].re, m[(r, c)].im])
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QgdmStepResult {
    /// Diffusion step undone here: maps the estimate of `rho_t` to `rho_{t-1}`.
    pub t: usize,
    pub params: ParamVector,
    /// Fidelity of this step's output with `rho_{t-1}`.
    pub achieved_fidelity: f64,
    /// Fidelity of this step's output with the Gibbs target.
    pub target_fidelity: f64,
    /// Per-iteration fidelity `1 - cost`.
    pub history: Vec<f64>,
    pub record: RunRecord,
}

#[derive(Clone, Debug)]
pub struct QgdmResult {
    pub target: DensityMatrix,
    /// `rho_1 .. rho_T`.
    pub trajectory: Vec<DensityMatrix>,
    /// Steps in training order, `t = T` first.
    pub steps: Vec<QgdmStepResult>,
    /// Reconstructed estimates `rho~_{T-1} .. rho~_0`.
    pub reconstructions: Vec<DensityMatrix>,
    pub final_fidelity: f64,
}

impl QgdmResult {
    pub fn final_state(&self) -> &DensityMatrix {
        self.reconstructions.last().expect("at least one step")
    }
}

const SEED_INIT: u64 = 1;
const SEED_TRAIN: u64 = 2;
const SEED_APPLY: u64 = 3;

/// Denoising diffusion on a two-qubit target. The forward chain depolarizes
/// the target to `I/4` in `T` steps; steps `t = T..1` are then trained in
/// order, each from fresh random parameters, to map the running estimate
/// (starting at `I/4`) onto `rho_{t-1}`. The baseline keeps the MCRY module
/// fully transmitting, so only the partial trace makes the map non-unitary.
pub fn train_qgdm(cfg: &QgdmConfig) -> Result<QgdmResult> {
    cfg.validate()?;
    let target = cfg.target()?;
    let trajectory = forward_diffuse(&target, &linear_schedule(cfg.steps)?)?;
    let mut free = vec![true; crate::circuit::N_PARAMS];
    if cfg.variant == Variant::Baseline {
        for i in Block::Mcry.range() {
            free[i] = false;
        }
    }

    let mut estimate = DensityMatrix::maximally_mixed(4)?;
    let mut steps = Vec::with_capacity(cfg.steps);
    let mut reconstructions = Vec::with_capacity(cfg.steps);
    for t in (1..=cfg.steps).rev() {
        let goal = if t == 1 { target.clone() } else { trajectory[t - 2].clone() };
        let mut theta0 = ParamVector::random_init(&mut rng_from_seed(derive_seed(cfg.seed, &[SEED_INIT, t as u64])));
        if cfg.variant == Variant::Baseline {
            theta0.set_block(Block::Mcry, &ParamVector::identity().block(Block::Mcry).to_vec())?;
        }
        let tc = TrainConfig {
            optimizer: cfg.optimizer.clone(),
            spsa: cfg.spsa.clone(),
            schedule: ShotSchedule::new(cfg.shots_s0, cfg.shots_doublings, cfg.iters_per_step)?,
            iters: cfg.iters_per_step,
            seed: derive_seed(cfg.seed, &[SEED_TRAIN, t as u64]),
            threads: cfg.threads,
        };
        let input = &estimate;
        let goal_ref = &goal;
        let exact = cfg.shots_mode == ShotsMode::Exact;
        let record = train_loop(
            |_| {
                move |theta: &[f64], shots: u64, seed: u64| {
                    let params = ParamVector::new(theta.to_vec())?;
                    let out = denoiser_forward(&params, input, exact, shots, &mut rng_from_seed(seed))?;
                    Ok(1.0 - uhlmann_fidelity(&out, goal_ref)?)
                }
            },
            theta0.values(),
            Some(&free),
            &tc,
            |_, _| Ok(None),
        )?;
        let params = ParamVector::new(record.final_params.clone())?;
        let out = denoiser_forward(
            &params,
            &estimate,
            exact,
            tc.schedule.max_shots(),
            &mut rng_from_seed(derive_seed(cfg.seed, &[SEED_APPLY, t as u64])),
        )?;
        let achieved_fidelity = uhlmann_fidelity(&out, &goal)?;
        let target_fidelity = uhlmann_fidelity(&out, &target)?;
        steps.push(QgdmStepResult {
            t,
            params,
            achieved_fidelity,
            target_fidelity,
            history: record.history.iter().map(|h| 1.0 - h.cost).collect(),
            record,
        });
        reconstructions.push(out.clone());
        estimate = out;
    }
    let final_fidelity = uhlmann_fidelity(&estimate, &target)?;
    Ok(QgdmResult {
        target,
        trajectory,
        steps,
        reconstructions,
        final_fidelity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::hermitian_residual;

    #[test]
    fn hamiltonian_round_trip() {
        let cfg = QgdmConfig::new(Variant::Ade, 1);
        let h = cfg.hamiltonian_matrix().unwrap();
        assert_eq!(h, default_hamiltonian());
        assert!(hermitian_residual(&h) == 0.0);
    }

    #[test]
    fn infinite_temperature_is_trivial() {
        let mut cfg = QgdmConfig::new(Variant::Ade, 1);
        cfg.beta = 0.0;
        let r = train_qgdm(&cfg).unwrap();
        assert!(r.final_fidelity >= 0.999, "{}", r.final_fidelity);
    }

    #[test]
    fn short_run_shapes_and_validity() {
        let mut cfg = QgdmConfig::new(Variant::Baseline, 2);
        cfg.iters_per_step = 5;
        let r = train_qgdm(&cfg).unwrap();
        assert_eq!(r.steps.iter().map(|s| s.t).collect::<Vec<_>>(), vec![2, 1]);
        assert_eq!(r.trajectory.len(), 2);
        for s in &r.steps {
            assert!((0.0..=1.0).contains(&s.achieved_fidelity));
            assert!((0.0..=1.0).contains(&s.target_fidelity));
            assert_eq!(s.history.len(), 5);
            assert_eq!(s.params.block(Block::Mcry), ParamVector::identity().block(Block::Mcry));
        }
        for rho in r.reconstructions.iter().chain(&r.trajectory) {
            assert!((rho.trace() - 1.0).abs() < 1e-10);
            assert!(hermitian_residual(rho.matrix()) < 1e-10);
            assert!(rho.eigenvalues()[0] > -1e-9);
        }
        let again = train_qgdm(&cfg).unwrap();
        assert_eq!(again.steps, r.steps);
    }

    #[test]
    fn bad_hamiltonian_rejected() {
        let mut cfg = QgdmConfig::new(Variant::Ade, 1);
        cfg.hamiltonian[1] = [5.0, 0.0];
        assert!(cfg.validate().is_err());
        cfg.hamiltonian.pop();
        assert!(cfg.validate().is_err());
    }
}
