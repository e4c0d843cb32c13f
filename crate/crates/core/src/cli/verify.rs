//! Fast invariant suite behind `adeqnn verify`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::circuit::{
    apply_diagonal, cccx_truth_table, cccz_angle, clements_u4, corrupt_interference_sign,
    denoiser_forward, ideal_cccx_table, mcry_diagonal, mcry_expanded_oracle, CircuitConfig,
    CompiledCircuit, ParamVector, Readout, Block,
};
use crate::error::Result;
use crate::metrics::statistical_fidelity;
use crate::qcore::{hermitian_residual, unitarity_residual, DensityMatrix, StateVector, C64};
use crate::rng::{derive_seed, rng_from_seed, SimRng};
use crate::tasks::mlp::{mlp_backward, mlp_forward, mlp_score, penalty_at, MlpDiscriminator};
use crate::tasks::tomography::{mle_tomography, pauli_settings, TomographyCounts};

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub cases: usize,
    pub seed: u64,
    /// Test hook: flip the sign of the two-photon entry of the MCRY table
    /// on the fast path so the oracle comparison has something to catch.
    pub corrupt_interference: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            cases: 1000,
            seed: 0,
            corrupt_interference: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, worst: Result<f64>, tol: f64) -> Check {
    match worst {
        Ok(w) => Check {
            name,
            passed: w.is_finite() && w <= tol,
            detail: format!("worst {w:.3e}, tolerance {tol:.0e}"),
        },
        Err(e) => Check {
            name,
            passed: false,
            detail: e.to_string(),
        },
    }
}

fn random_state(n: usize, rng: &mut SimRng) -> Result<StateVector> {
    let amps = (0..1 << n)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    StateVector::from_amplitudes(n, amps)?.normalized()
}

fn random_angles(n: usize, rng: &mut SimRng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-PI..PI)).collect()
}

fn oracle_equivalence(opts: &VerifyOptions) -> Result<f64> {
    let mut rng = rng_from_seed(derive_seed(opts.seed, &[1]));
    let mut worst: f64 = 0.0;
    for _ in 0..opts.cases {
        let s = random_state(4, &mut rng)?;
        let angles = random_angles(7, &mut rng);
        let mut diag = mcry_diagonal(&angles)?;
        if opts.corrupt_interference {
            diag = corrupt_interference_sign(diag);
        }
        let (fast, p_fast) = apply_diagonal(&s, &diag)?;
        let (slow, p_slow) = mcry_expanded_oracle(&s, &angles)?;
        worst = worst.max((p_fast - p_slow).abs());
        for b in 0..16 {
            worst = worst.max((fast.amp(b) - slow.amp(b)).norm());
        }
    }
    Ok(worst)
}

fn cccz_success(opts: &VerifyOptions) -> Result<f64> {
    let mut rng = rng_from_seed(derive_seed(opts.seed, &[2]));
    let mut diag = mcry_diagonal(&[cccz_angle(); 7])?;
    if opts.corrupt_interference {
        diag = corrupt_interference_sign(diag);
    }
    let mut worst: f64 = 0.0;
    for _ in 0..opts.cases.min(200) {
        let (_, p) = apply_diagonal(&random_state(4, &mut rng)?, &diag)?;
        worst = worst.max((p - 1.0 / 9.0).abs());
    }
    Ok(worst)
}

fn cccx_table() -> Result<f64> {
    let table = cccx_truth_table()?;
    let ideal = ideal_cccx_table();
    let mut worst: f64 = 0.0;
    for c in 0..16 {
        let got: Vec<f64> = (0..16).map(|r| table[r][c]).collect();
        let want: Vec<f64> = (0..16).map(|r| ideal[r][c]).collect();
        let s: f64 = got.iter().sum();
        let got: Vec<f64> = got.iter().map(|v| v / s).collect();
        worst = worst.max(1.0 - statistical_fidelity(&got, &want)?);
    }
    Ok(worst)
}

fn mesh_unitarity(opts: &VerifyOptions) -> Result<f64> {
    let mut rng = rng_from_seed(derive_seed(opts.seed, &[3]));
    let mut worst: f64 = 0.0;
    for _ in 0..opts.cases {
        let u = clements_u4(&random_angles(16, &mut rng))?;
        worst = worst.max(unitarity_residual(u.matrix()));
    }
    Ok(worst)
}

fn distribution_normalization(opts: &VerifyOptions) -> Result<f64> {
    let mut rng = rng_from_seed(derive_seed(opts.seed, &[4]));
    let mut worst: f64 = 0.0;
    for _ in 0..opts.cases.min(200) {
        let params = ParamVector::random_init(&mut rng);
        let circuit = CompiledCircuit::new(&CircuitConfig::ade(Readout::TwoClass), &params)?;
        let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let angles = circuit.config().data_angles(&x)?;
        let dist = circuit.run(&angles)?;
        worst = worst.max((dist.p.iter().sum::<f64>() - 1.0).abs());
    }
    Ok(worst)
}

fn transparent_mcry(opts: &VerifyOptions) -> Result<f64> {
    let mut rng = rng_from_seed(derive_seed(opts.seed, &[5]));
    let mut worst: f64 = 0.0;
    for _ in 0..opts.cases.min(200) {
        let mut params = ParamVector::random_init(&mut rng);
        params.set_block(Block::Mcry, &[PI; 7])?;
        let on = CircuitConfig::ade(Readout::TwoClass);
        let off = CircuitConfig { mcry: false, ..on.clone() };
        let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let a = CompiledCircuit::new(&on, &params)?.run(&on.data_angles(&x)?)?;
        let b = CompiledCircuit::new(&off, &params)?.run(&off.data_angles(&x)?)?;
        for (p, q) in a.p.iter().zip(&b.p) {
            worst = worst.max((p - q).abs());
        }
    }
    Ok(worst)
}

fn density_validity(rho: &DensityMatrix) -> f64 {
    let neg = -rho.eigenvalues()[0];
    hermitian_residual(rho.matrix())
        .max((rho.trace() - 1.0).abs())
        .max(neg.max(0.0))
}

fn denoiser_validity(opts: &VerifyOptions) -> Result<f64> {
    let mut rng = rng_from_seed(derive_seed(opts.seed, &[6]));
    let mut worst: f64 = 0.0;
    for _ in 0..opts.cases.min(100) {
        let params = ParamVector::random_init(&mut rng);
        let a = DensityMatrix::from_pure(&random_state(2, &mut rng)?)?;
        let b = DensityMatrix::from_pure(&random_state(2, &mut rng)?)?;
        let rho = a.mix(&b, rng.random())?;
        let out = denoiser_forward(&params, &rho, true, 1, &mut rng)?;
        worst = worst.max(density_validity(&out));
    }
    Ok(worst)
}

fn tomography_fixed_point() -> Result<f64> {
    let mixed = DensityMatrix::maximally_mixed(4)?;
    let mut counts: TomographyCounts = [[0; 4]; 9];
    for (row, s) in counts.iter_mut().zip(pauli_settings()) {
        let p = s.probabilities(&mixed)?;
        for (c, pk) in row.iter_mut().zip(p) {
            *c = (pk * 1e6).round() as u64;
        }
    }
    let rho = mle_tomography(&counts)?;
    let diff = crate::qcore::max_abs_diff(rho.matrix(), mixed.matrix());
    Ok(diff.max(density_validity(&rho)))
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-3)
}

fn critic_gradients(opts: &VerifyOptions) -> Result<f64> {
    let mut rng = rng_from_seed(derive_seed(opts.seed, &[7]));
    let d = MlpDiscriminator::image_critic(&mut rng);
    let x: Vec<f64> = (0..64).map(|_| rng.random()).collect();
    let h = 1e-6;
    let (_, cache) = mlp_forward(&d, &x)?;
    let (grads, gx) = mlp_backward(&d, &cache, 1.0)?;
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        let (mut xp, mut xm) = (x.clone(), x.clone());
        xp[i] += h;
        xm[i] -= h;
        let fd = (mlp_score(&d, &xp)? - mlp_score(&d, &xm)?) / (2.0 * h);
        worst = worst.max(rel_err(gx[i], fd));
    }
    let flat = d.flatten();
    let analytic = grads.flatten();
    let mut probe = d.clone();
    for k in (0..flat.len()).step_by(7) {
        let mut v = flat.clone();
        v[k] += h;
        probe.set_flat(&v)?;
        let up = mlp_score(&probe, &x)?;
        v[k] -= 2.0 * h;
        probe.set_flat(&v)?;
        let down = mlp_score(&probe, &x)?;
        worst = worst.max(rel_err(analytic[k], (up - down) / (2.0 * h)));
    }
    Ok(worst)
}

fn penalty_gradients(opts: &VerifyOptions) -> Result<f64> {
    let mut rng = rng_from_seed(derive_seed(opts.seed, &[8]));
    let d = MlpDiscriminator::random([16, 12, 8], &mut rng);
    let x: Vec<f64> = (0..16).map(|_| rng.random()).collect();
    let (_, grads) = penalty_at(&d, &x)?;
    let flat = d.flatten();
    let analytic = grads.flatten();
    let h = 1e-6;
    let mut probe = d.clone();
    let mut worst: f64 = 0.0;
    for k in 0..flat.len() {
        let mut v = flat.clone();
        v[k] += h;
        probe.set_flat(&v)?;
        let up = penalty_at(&probe, &x)?.0;
        v[k] -= 2.0 * h;
        probe.set_flat(&v)?;
        let down = penalty_at(&probe, &x)?.0;
        worst = worst.max(rel_err(analytic[k], (up - down) / (2.0 * h)));
    }
    Ok(worst)
}

pub fn run_checks(opts: &VerifyOptions) -> Vec<Check> {
    vec![
        check("mcry_oracle_equivalence", oracle_equivalence(opts), 1e-12),
        check("cccz_success_probability", cccz_success(opts), 1e-12),
        check("cccx_truth_table", cccx_table(), 1e-12),
        check("mesh_unitarity", mesh_unitarity(opts), 1e-10),
        check("distribution_normalization", distribution_normalization(opts), 1e-10),
        check("transparent_mcry", transparent_mcry(opts), 1e-12),
        check("denoiser_validity", denoiser_validity(opts), 1e-9),
        check("tomography_fixed_point", tomography_fixed_point(), 1e-6),
        check("critic_gradients", critic_gradients(opts), 1e-5),
        check("penalty_gradients", penalty_gradients(opts), 1e-4),
    ]
}
