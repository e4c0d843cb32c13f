use std::path::PathBuf;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mlp::{critic_loss_and_grads, mlp_score, MlpDiscriminator};
use crate::circuit::{CircuitConfig, CompiledCircuit, InputMap, ParamVector, Readout, ShotsMode, N_PARAMS};
use crate::datasets::{class_prototype, load_digits, Image};
use crate::error::{Error, Result};
use crate::metrics::ssim;
use crate::rng::{derive_seed, rng_from_seed, SimRng};
use crate::train::{
    eval_with_retry, spsa_gradient_with, Exec, IterationRecord, OptimizerConfig, OptimizerState,
    RunRecord, ShotSchedule, SpsaConfig, TrainConfig,
};

pub const PATCHES: usize = 4;

/// Circuit used by every patch: two latent values on `q0` and `q2`.
/// `reupload` also feeds them to the hidden-layer RZ gates.
pub fn generator_circuit(reupload: bool, mode: ShotsMode) -> CircuitConfig {
    let mut c = CircuitConfig::ade(Readout::TwoClass);
    c.input_map = InputMap::Latent;
    c.replication = reupload;
    c.shots_mode = mode;
    c
}

/// Patch `k` fills rows `2k` and `2k + 1` with its 16 post-selected
/// probabilities, each scaled by the patch maximum.
pub fn generator_forward(
    circuit: &CircuitConfig,
    patches: &[ParamVector],
    noise: [f64; 2],
    shots: u64,
    rng: &mut impl Rng,
) -> Result<Image> {
    if patches.len() != PATCHES {
        return Err(Error::DimensionMismatch {
            expected: PATCHES,
            got: patches.len(),
        });
    }
    let angles = circuit.data_angles(&noise)?;
    let mut img = [0.0; 64];
    for (k, params) in patches.iter().enumerate() {
        let dist = CompiledCircuit::new(circuit, params)?.evaluate(&angles, shots, rng)?;
        let max = dist.p.iter().copied().fold(0.0, f64::max);
        if max <= 0.0 {
            return Err(Error::NullPostSelection(dist.success_prob));
        }
        for (j, p) in dist.p.iter().enumerate() {
            img[16 * k + j] = p / max;
        }
    }
    Ok(img)
}

fn split_patches(theta: &[f64]) -> Result<Vec<ParamVector>> {
    if theta.len() != PATCHES * N_PARAMS {
        return Err(Error::DimensionMismatch {
            expected: PATCHES * N_PARAMS,
            got: theta.len(),
        });
    }
    theta.chunks(N_PARAMS).map(|c| ParamVector::new(c.to_vec())).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QganConfig {
    pub digit: u32,
    pub iters: usize,
    pub batch: usize,
    pub seed: u64,
    pub shots_mode: ShotsMode,
    /// Noise also drives the hidden-layer RZ gates.
    pub reupload: bool,
    pub generator_opt: OptimizerConfig,
    pub critic_opt: OptimizerConfig,
    /// Critic updates per generator update.
    pub n_critic: usize,
    pub spsa: SpsaConfig,
    pub shots_s0: u64,
    pub shots_doublings: u32,
    /// Sample images are kept every this many iterations (and at the end).
    pub sample_every: usize,
    pub n_samples: usize,
    pub threads: usize,
    pub data_dir: PathBuf,
}

impl QganConfig {
    pub fn new(digit: u32) -> Self {
        QganConfig {
            digit,
            iters: 300,
            batch: 4,
            seed: 0,
            shots_mode: ShotsMode::Exact,
            reupload: true,
            generator_opt: OptimizerConfig::rmsprop().with_lr(0.03),
            critic_opt: OptimizerConfig::rmsprop().with_lr(3e-3),
            n_critic: 5,
            spsa: SpsaConfig {
                avg_draws: 32,
                ..SpsaConfig::default()
            },
            shots_s0: 256,
            shots_doublings: 5,
            sample_every: 50,
            n_samples: 16,
            threads: 1,
            data_dir: PathBuf::from("data"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.digit > 1 {
            return Err(Error::invalid(format!("digit {} (only 0 and 1 are supported)", self.digit)));
        }
        if self.batch == 0 || self.n_critic == 0 || self.n_samples == 0 || self.sample_every == 0 {
            return Err(Error::invalid("batch, critic steps, sample count and sample period must be positive"));
        }
        if self.threads == 0 {
            return Err(Error::invalid("thread count must be positive"));
        }
        self.generator_opt.validate()?;
        self.critic_opt.validate()?;
        self.spsa.validate()?;
        ShotSchedule::new(self.shots_s0, self.shots_doublings, 1)?;
        Ok(())
    }

    pub fn digits_path(&self) -> PathBuf {
        self.data_dir.join("digits.csv")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub iter: usize,
    pub images: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QganResult {
    /// `cost` is the generator loss `-mean D(G(z))`; `metric` the critic's
    /// Wasserstein estimate on the iteration's batch.
    pub record: RunRecord,
    pub generator: Vec<ParamVector>,
    pub critic: MlpDiscriminator,
    pub samples: Vec<SampleSet>,
    pub prototype: Vec<f64>,
    /// Mean SSIM of the final samples against the class-mean image.
    pub ssim_vs_prototype: f64,
    /// Mean over final samples of the best SSIM against any real image.
    pub ssim_vs_nearest_real: f64,
}

const SEED_INIT: u64 = 1;
const SEED_CRITIC_INIT: u64 = 2;
const SEED_LOOP: u64 = 3;
const SEED_SAMPLES: u64 = 4;

fn noise_batch(n: usize, rng: &mut SimRng) -> Vec<[f64; 2]> {
    (0..n).map(|_| [rng.random(), rng.random()]).collect()
}

fn generate(
    circuit: &CircuitConfig,
    patches: &[ParamVector],
    noise: &[[f64; 2]],
    shots: u64,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    noise
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let mut rng = rng_from_seed(derive_seed(seed, &[i as u64]));
            generator_forward(circuit, patches, *z, shots, &mut rng).map(|img| img.to_vec())
        })
        .collect()
}

/// Patched quantum GAN on one digit class with a WGAN-GP critic.
///
/// Each iteration runs `n_critic` critic steps (RMSProp on the exact
/// critic loss with gradient penalty) and then one generator step
/// (RMSProp on SPSA gradients of `-mean D(G(z))`).
pub fn train_qgan(cfg: &QganConfig) -> Result<QganResult> {
    cfg.validate()?;
    let reals = load_digits(&cfg.digits_path(), &[cfg.digit])?;
    train_qgan_on(cfg, &reals)
}

pub fn train_qgan_on(cfg: &QganConfig, reals: &[Image]) -> Result<QganResult> {
    cfg.validate()?;
    let prototype = class_prototype(reals)?;
    let circuit = generator_circuit(cfg.reupload, cfg.shots_mode);
    let schedule = ShotSchedule::new(cfg.shots_s0, cfg.shots_doublings, cfg.iters.max(1))?;
    let tc = TrainConfig {
        optimizer: cfg.generator_opt.clone(),
        spsa: cfg.spsa.clone(),
        schedule: schedule.clone(),
        iters: cfg.iters,
        seed: cfg.seed,
        threads: cfg.threads,
    };

    let mut init = rng_from_seed(derive_seed(cfg.seed, &[SEED_INIT]));
    let mut theta: Vec<f64> = (0..PATCHES)
        .flat_map(|_| ParamVector::random_init(&mut init).into_values())
        .collect();
    let mut critic = MlpDiscriminator::image_critic(&mut rng_from_seed(derive_seed(cfg.seed, &[SEED_CRITIC_INIT])));
    let mut gen_opt = OptimizerState::new(cfg.generator_opt.clone(), theta.len())?;
    let mut critic_opt = OptimizerState::new(cfg.critic_opt.clone(), critic.n_params())?;

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
    let exec = pool.as_ref().map_or(Exec::Serial, Exec::Pool);
    let free = vec![true; theta.len()];

    let sample_noise = noise_batch(cfg.n_samples, &mut rng_from_seed(derive_seed(cfg.seed, &[SEED_SAMPLES])));
    let sample_shots = schedule.max_shots();
    let mut samples = vec![SampleSet {
        iter: 0,
        images: generate(&circuit, &split_patches(&theta)?, &sample_noise, sample_shots, cfg.seed)?,
    }];

    let mut rng = rng_from_seed(derive_seed(cfg.seed, &[SEED_LOOP]));
    let mut history = Vec::with_capacity(cfg.iters);
    let mut wall_clock = Vec::with_capacity(cfg.iters);
    for iter in 0..cfg.iters {
        let started = std::time::Instant::now();
        let shots = crate::train::shots_at(&schedule, iter)?;
        let patches = split_patches(&theta)?;

        let mut last_w = 0.0;
        for _ in 0..cfg.n_critic {
            let real: Vec<Vec<f64>> = (0..cfg.batch)
                .map(|_| reals.choose(&mut rng).expect("nonempty").to_vec())
                .collect();
            let noise = noise_batch(cfg.batch, &mut rng);
            let fake = generate(&circuit, &patches, &noise, shots, rng.random())?;
            let step = critic_loss_and_grads(&critic, &real, &fake, &mut rng)?;
            let mut flat = critic.flatten();
            critic_opt.update(&mut flat, &step.grads.flatten())?;
            critic.set_flat(&flat)?;
            last_w = step.wasserstein;
        }

        let noise = noise_batch(cfg.batch, &mut rng);
        let gen_cost = |t: &[f64], seed: u64| -> Result<f64> {
            let fake = generate(&circuit, &split_patches(t)?, &noise, shots, seed)?;
            let mut s = 0.0;
            for img in &fake {
                s += mlp_score(&critic, img)?;
            }
            Ok(-s / fake.len() as f64)
        };
        let cost = eval_with_retry(&gen_cost, &theta, rng.random())?;
        let g = spsa_gradient_with(&gen_cost, &theta, iter, &cfg.spsa, &free, &mut rng, exec)?;
        gen_opt.update(&mut theta, &g)?;
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("generator parameters"));
        }

        history.push(IterationRecord {
            iter,
            cost,
            shots,
            metric: Some(last_w),
        });
        wall_clock.push(started.elapsed().as_secs_f64());
        if (iter + 1) % cfg.sample_every == 0 || iter + 1 == cfg.iters {
            samples.push(SampleSet {
                iter: iter + 1,
                images: generate(&circuit, &split_patches(&theta)?, &sample_noise, sample_shots, cfg.seed)?,
            });
        }
    }

    let finals = &samples.last().expect("initial samples").images;
    let mut vs_proto = 0.0;
    let mut vs_real = 0.0;
    for img in finals {
        vs_proto += ssim(img, &prototype)?;
        let mut best = f64::NEG_INFINITY;
        for r in reals {
            best = best.max(ssim(img, r)?);
        }
        vs_real += best;
    }
    let n = finals.len() as f64;

    Ok(QganResult {
        record: RunRecord {
            config: tc,
            seed: cfg.seed,
            history,
            final_params: theta.clone(),
            wall_clock,
        },
        generator: split_patches(&theta)?,
        critic,
        samples,
        prototype: prototype.to_vec(),
        ssim_vs_prototype: vs_proto / n,
        ssim_vs_nearest_real: vs_real / n,
    })
}
