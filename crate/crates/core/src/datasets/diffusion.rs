use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{hermitian_eig, kron, CMatrix, DensityMatrix, C64};

/// Depolarizing strengths `gammas[t]` for steps `1..=T`. The last is 1, so
/// the trajectory ends at the maximally mixed state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffusionSchedule {
    gammas: Vec<f64>,
}

impl DiffusionSchedule {
    pub fn new(gammas: Vec<f64>) -> Result<Self> {
        if gammas.is_empty() {
            return Err(Error::invalid("diffusion schedule needs at least one step"));
        }
        if gammas.iter().any(|g| !(*g > 0.0 && *g <= 1.0)) {
            return Err(Error::invalid("diffusion strengths must lie in (0, 1]"));
        }
        if *gammas.last().unwrap() != 1.0 {
            return Err(Error::invalid("final diffusion strength must be exactly 1"));
        }
        Ok(DiffusionSchedule { gammas })
    }

    pub fn steps(&self) -> usize {
        self.gammas.len()
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }
}

/// `gamma_t = t / T`.
pub fn linear_schedule(t: usize) -> Result<DiffusionSchedule> {
    if t == 0 {
        return Err(Error::invalid("diffusion needs T >= 1"));
    }
    DiffusionSchedule::new((1..=t).map(|k| k as f64 / t as f64).collect())
}

/// `rho_t = (1 - gamma_t) rho_{t-1} + gamma_t I/d`, returning `rho_1..rho_T`.
pub fn forward_diffuse(rho0: &DensityMatrix, schedule: &DiffusionSchedule) -> Result<Vec<DensityMatrix>> {
    let mixed = DensityMatrix::maximally_mixed(rho0.dim())?;
    let mut out = Vec::with_capacity(schedule.steps());
    let mut rho = rho0.clone();
    for &g in schedule.gammas() {
        rho = if g == 1.0 { mixed.clone() } else { rho.mix(&mixed, g)? };
        out.push(rho.clone());
    }
    Ok(out)
}

/// `Z Z + 0.5 (X I + I X)`.
pub fn default_hamiltonian() -> CMatrix {
    let c = |v: f64| C64::new(v, 0.0);
    let x = CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
    let z = CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]);
    let id = CMatrix::identity(2, 2);
    kron(&z, &z) + (kron(&x, &id) + kron(&id, &x)).scale(0.5)
}

/// `exp(-beta H) / Tr exp(-beta H)` for a 4x4 Hermitian `H`.
pub fn gibbs_state(h: &CMatrix, beta: f64) -> Result<DensityMatrix> {
    if h.nrows() != 4 || h.ncols() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: h.nrows().max(h.ncols()),
        });
    }
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::invalid(format!("inverse temperature {beta}")));
    }
    let eig = hermitian_eig(h)?;
    let e0 = eig.values[0];
    let weights: Vec<f64> = eig.values.iter().map(|&e| (-beta * (e - e0)).exp()).collect();
    let z: f64 = weights.iter().sum();
    let rho = eig.reconstruct_with(|e| (-beta * (e - e0)).exp() / z);
    DensityMatrix::new(rho)
}
