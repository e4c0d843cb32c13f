use std::f64::consts::FRAC_1_SQRT_2;

use super::{CMatrix, Unitary, C64};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    Y,
    Z,
}

/// Standard rotation `exp(-i theta sigma / 2)`.
///
/// This is the convention for encoding and trainable gates. The
/// interferometer transfer matrix used inside the post-selection module is
/// a different convention and lives in `circuit::mzi_amplitude`.
pub fn rotation_gate(axis: Axis, theta: f64) -> Result<Unitary> {
    if !theta.is_finite() {
        return Err(Error::NonFinite("rotation angle"));
    }
    let (s, c) = (theta / 2.0).sin_cos();
    let m = match axis {
        Axis::Y => CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(c, 0.0),
                C64::new(-s, 0.0),
                C64::new(s, 0.0),
                C64::new(c, 0.0),
            ],
        ),
        Axis::Z => CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(c, -s),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(c, s),
            ],
        ),
    };
    Ok(Unitary::new_unchecked(m))
}

/// `RZ(alpha) RY(beta) RZ(gamma)`, an SU(2) element; identity at zero.
pub fn su2_zyz(alpha: f64, beta: f64, gamma: f64) -> Result<Unitary> {
    let a = rotation_gate(Axis::Z, alpha)?;
    let b = rotation_gate(Axis::Y, beta)?;
    let g = rotation_gate(Axis::Z, gamma)?;
    a.compose(&b)?.compose(&g)
}

pub fn hadamard() -> Unitary {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    Unitary::new_unchecked(CMatrix::from_row_slice(2, 2, &[h, h, h, -h]))
}

pub fn pauli_x() -> Unitary {
    let o = C64::new(0.0, 0.0);
    let l = C64::new(1.0, 0.0);
    Unitary::new_unchecked(CMatrix::from_row_slice(2, 2, &[o, l, l, o]))
}

/// Two-qubit controlled gate; the control is the more significant qubit.
pub fn controlled(gate: &Unitary) -> Result<Unitary> {
    if gate.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: gate.dim(),
        });
    }
    let mut m = CMatrix::identity(4, 4);
    for r in 0..2 {
        for c in 0..2 {
            m[(2 + r, 2 + c)] = gate.entry(r, c);
        }
    }
    Ok(Unitary::new_unchecked(m))
}
