//! The multivalue-controlled RY module: per-path interferometers that leak
//! amplitude into expanded "virtual" modes, followed by post-selection on
//! the original modes.
//!
//! The fast path contracts the state with a 4x4 table of surviving
//! amplitudes. `mcry_expanded_oracle` rebuilds the same map in the explicit
//! 64-dimensional space with two virtual qubits and exists to check it.

use crate::error::{Error, Result};
use crate::qcore::{CMatrix, StateVector, C64};

/// Post-selection success below this is treated as an all-blocked circuit.
pub const MIN_SUCCESS: f64 = 1e-12;

/// Transmission amplitude of an interferometer in the convention
/// `[[sin(t/2), cos(t/2)], [cos(t/2), -sin(t/2)]]`: the part of a single
/// photon that stays in the retained mode.
pub fn mzi_amplitude(theta: f64) -> f64 {
    (theta / 2.0).sin()
}

/// Coincidence amplitude when both photons enter the shared interferometer
/// and both stay in their retained modes: `t^2 - r^2 = -cos(theta_z)`.
pub fn two_photon_amplitude(theta_z: f64) -> f64 {
    -theta_z.cos()
}

/// Surviving amplitude multipliers. `d[i][j]` scales the basis state with
/// photon-2 mode `i` and photon-1 mode `j` (flat index `4i + j`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McryDiagonal {
    d: [[f64; 4]; 4],
}

impl McryDiagonal {
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.d[i][j]
    }

    pub fn rows(&self) -> &[[f64; 4]; 4] {
        &self.d
    }

    /// Multipliers in flat basis order.
    pub fn factors(&self) -> [f64; 16] {
        let mut f = [0.0; 16];
        for i in 0..4 {
            for j in 0..4 {
                f[4 * i + j] = self.d[i][j];
            }
        }
        f
    }

    /// Copy with the sign of the two-photon entry flipped. Only used to
    /// check that the oracle comparison notices a broken table.
    pub(crate) fn with_flipped_interference(mut self) -> Self {
        self.d[0][3] = -self.d[0][3];
        self
    }
}

/// Angles in order `(t0_p1, t1_p1, t2_p1, t1_p2, t2_p2, t3_p2, t_z)`.
pub fn mcry_diagonal(angles: &[f64]) -> Result<McryDiagonal> {
    if angles.len() != 7 {
        return Err(Error::DimensionMismatch {
            expected: 7,
            got: angles.len(),
        });
    }
    if angles.iter().any(|a| !a.is_finite()) {
        return Err(Error::NonFinite("MCRY angles"));
    }
    let tz = angles[6];
    let a1 = [
        mzi_amplitude(angles[0]),
        mzi_amplitude(angles[1]),
        mzi_amplitude(angles[2]),
        mzi_amplitude(tz),
    ];
    let a2 = [
        mzi_amplitude(tz),
        mzi_amplitude(angles[3]),
        mzi_amplitude(angles[4]),
        mzi_amplitude(angles[5]),
    ];
    let mut d = [[0.0; 4]; 4];
    for (i, row) in d.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = a2[i] * a1[j];
        }
    }
    d[0][3] = two_photon_amplitude(tz);
    Ok(McryDiagonal { d })
}

/// Scales, measures the surviving norm, and renormalizes.
pub fn apply_diagonal(state: &StateVector, diag: &McryDiagonal) -> Result<(StateVector, f64)> {
    if state.n_qubits() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 16,
            got: state.dim(),
        });
    }
    let scaled = state.scale_diagonal(&diag.factors())?;
    let success = scaled.norm_sqr();
    if success <= MIN_SUCCESS {
        return Err(Error::NullPostSelection(success));
    }
    Ok((scaled.normalized()?, success))
}

pub fn apply_mcry(state: &StateVector, angles: &[f64]) -> Result<(StateVector, f64)> {
    apply_diagonal(state, &mcry_diagonal(angles)?)
}

/// Interferometer transfer matrix acting on (retained, expanded) modes.
fn mzi_matrix(theta: f64) -> [[f64; 2]; 2] {
    let (s, c) = (theta / 2.0).sin_cos();
    [[s, c], [c, -s]]
}

/// Permanent of the two-mode transfer matrix for the shared interferometer,
/// with both photons transmitted with amplitude `t` and cross-coupled with
/// `r` and `-r`.
fn coincidence_permanent(theta_z: f64) -> f64 {
    let (t, r) = (theta_z / 2.0).sin_cos();
    let m = [[t, r], [-r, t]];
    m[0][0] * m[1][1] + m[0][1] * m[1][0]
}

/// Explicit six-qubit evaluation: virtual qubits `v2` (qubit 5) and `v1`
/// (qubit 4) start in `|0>`; each photon-mode branch rotates them with the
/// interferometers on its paths; the result is projected onto `v = |00>`.
pub fn mcry_expanded_oracle(state: &StateVector, angles: &[f64]) -> Result<(StateVector, f64)> {
    if state.n_qubits() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 16,
            got: state.dim(),
        });
    }
    if angles.len() != 7 {
        return Err(Error::DimensionMismatch {
            expected: 7,
            got: angles.len(),
        });
    }
    if angles.iter().any(|a| !a.is_finite()) {
        return Err(Error::NonFinite("MCRY angles"));
    }
    let tz = angles[6];
    let photon1 = |j: usize| if j < 3 { angles[j] } else { tz };
    let photon2 = |i: usize| if i == 0 { tz } else { angles[2 + i] };

    let mut op = CMatrix::zeros(64, 64);
    for b in 0..16 {
        let (i, j) = (b >> 2, b & 3);
        let (g2, g1) = if (i, j) == (0, 3) {
            let f = 2.0 * coincidence_permanent(tz).clamp(-1.0, 1.0).asin();
            (mzi_matrix(f), mzi_matrix(std::f64::consts::PI))
        } else {
            (mzi_matrix(photon2(i)), mzi_matrix(photon1(j)))
        };
        for v2o in 0..2 {
            for v1o in 0..2 {
                for v2i in 0..2 {
                    for v1i in 0..2 {
                        let amp = g2[v2o][v2i] * g1[v1o][v1i];
                        let row = (v2o << 5) | (v1o << 4) | b;
                        let col = (v2i << 5) | (v1i << 4) | b;
                        op[(row, col)] = C64::new(amp, 0.0);
                    }
                }
            }
        }
    }

    let mut embedded = nalgebra::DVector::<C64>::zeros(64);
    for (b, a) in state.amps().iter().enumerate() {
        embedded[b] = *a;
    }
    let evolved = op * embedded;
    let kept: Vec<C64> = (0..16).map(|b| evolved[b]).collect();
    let projected = StateVector::from_amplitudes(4, kept)?;
    let success = projected.norm_sqr();
    if success <= MIN_SUCCESS {
        return Err(Error::NullPostSelection(success));
    }
    Ok((projected.normalized()?, success))
}

/// The angle at which every retained amplitude is `1/sqrt(3)`.
pub fn cccz_angle() -> f64 {
    2.0 * (1.0 / 3f64.sqrt()).asin()
}
