//! Two-qubit Pauli-basis measurements and maximum-likelihood reconstruction
//! with the R-rho-R fixed-point iteration.

use crate::error::{Error, Result};
use crate::qcore::{hadamard, CMatrix, DensityMatrix, Unitary, C64};

/// Counts per setting (rows, in [`pauli_settings`] order) and outcome.
pub type TomographyCounts = [[u64; 4]; 9];

pub const MLE_TOL: f64 = 1e-10;
pub const MLE_MAX_ITERS: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    /// Rotation taking this observable's `+1` eigenstate to `|0>`.
    fn basis_change(self) -> Unitary {
        match self {
            Pauli::Z => Unitary::identity(2),
            Pauli::X => hadamard(),
            Pauli::Y => {
                let o = C64::new(0.0, 0.0);
                let s_dag = Unitary::new(CMatrix::from_row_slice(
                    2,
                    2,
                    &[C64::new(1.0, 0.0), o, o, C64::new(0.0, -1.0)],
                ))
                .expect("S dagger is unitary");
                hadamard().compose(&s_dag).expect("2x2")
            }
        }
    }
}

/// A product measurement: `ops.0` on `q1`, `ops.1` on `q0`. Outcome index
/// is `2*s1 + s0` with `s = 0` meaning the `+1` eigenvalue.
#[derive(Clone, Debug)]
pub struct PauliSetting {
    pub ops: (Pauli, Pauli),
    rotation: Unitary,
    projectors: [CMatrix; 4],
}

impl PauliSetting {
    fn new(a: Pauli, b: Pauli) -> Self {
        let rotation = a.basis_change().kron(&b.basis_change());
        let r = rotation.matrix();
        let projectors = [0, 1, 2, 3].map(|k| {
            // R^dagger |k><k| R
            let row = r.row(k);
            CMatrix::from_fn(4, 4, |i, j| row[i].conj() * row[j])
        });
        PauliSetting {
            ops: (a, b),
            rotation,
            projectors,
        }
    }

    pub fn rotation(&self) -> &Unitary {
        &self.rotation
    }

    pub fn projector(&self, k: usize) -> &CMatrix {
        &self.projectors[k]
    }

    /// Outcome probabilities on a two-qubit state.
    pub fn probabilities(&self, rho: &DensityMatrix) -> Result<[f64; 4]> {
        if rho.dim() != 4 {
            return Err(Error::DimensionMismatch {
                expected: 4,
                got: rho.dim(),
            });
        }
        let mut p = [0.0; 4];
        for (pk, proj) in p.iter_mut().zip(&self.projectors) {
            *pk = trace_product(proj, rho.matrix()).max(0.0);
        }
        let s: f64 = p.iter().sum();
        for pk in &mut p {
            *pk /= s;
        }
        Ok(p)
    }
}

fn trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc.re
}

/// All nine settings from `{X, Y, Z}^2`, ordered `XX, XY, XZ, YX, ...`.
pub fn pauli_settings() -> Vec<PauliSetting> {
    let ps = [Pauli::X, Pauli::Y, Pauli::Z];
    let mut out = Vec::with_capacity(9);
    for a in ps {
        for b in ps {
            out.push(PauliSetting::new(a, b));
        }
    }
    out
}

/// Maximum-likelihood state from Pauli counts. Starts at `I/4` and
/// iterates `rho <- R rho R / Tr(R rho R)` with
/// `R = sum f_k / p_k(rho) Pi_k`, frequencies normalized per setting.
pub fn mle_tomography(counts: &TomographyCounts) -> Result<DensityMatrix> {
    let settings = pauli_settings();
    let mut freqs = [[0.0; 4]; 9];
    for (s, row) in counts.iter().enumerate() {
        let total: u64 = row.iter().sum();
        if total == 0 {
            return Err(Error::Tomography(format!("setting {s} has no counts")));
        }
        for k in 0..4 {
            freqs[s][k] = row[k] as f64 / total as f64;
        }
    }

    let mut rho = CMatrix::identity(4, 4).unscale(4.0);
    for _ in 0..MLE_MAX_ITERS {
        let mut r = CMatrix::zeros(4, 4);
        for (setting, f) in settings.iter().zip(&freqs) {
            for k in 0..4 {
                if f[k] == 0.0 {
                    continue;
                }
                let pk = trace_product(setting.projector(k), &rho);
                if pk <= 1e-300 {
                    return Err(Error::Tomography(
                        "observed outcome has zero model probability".into(),
                    ));
                }
                r += setting.projector(k).scale(f[k] / pk);
            }
        }
        let next = &r * &rho * &r;
        let t = next.trace().re;
        let next = next.unscale(t);
        let next = (&next + next.adjoint()).scale(0.5);
        let delta = next
            .iter()
            .zip(rho.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        rho = next;
        if delta < MLE_TOL {
            break;
        }
    }
    DensityMatrix::new(rho)
}
