//! Dense complex linear algebra and quantum-state primitives for systems of
//! up to six qubits.
//!
//! Basis convention: for four qubits the flat index is
//! `b = 8*q3 + 4*q2 + 2*q1 + q0`. Viewing the register as two photons,
//! photon 2 carries `(q3, q2)` as ququart index `i = 2*q3 + q2` and photon 1
//! carries `(q1, q0)` as `j = 2*q1 + q0`, so `b = 4*i + j`.
//!
//! All types are plain values. Operations are pure and take any randomness
//! as an explicit generator argument.

mod density;
mod eig;
mod gates;
mod sampling;
mod state;
mod unitary;

pub use density::{partial_trace, purify, uhlmann_fidelity, DensityMatrix};
pub use eig::{hermitian_eig, hermitian_function, HermitianEig};
pub use gates::{controlled, hadamard, pauli_x, rotation_gate, su2_zyz, Axis};
pub use sampling::sample_counts;
pub use state::{apply_gate, StateVector};
pub use unitary::{unitarity_residual, Unitary};

pub use num_complex::Complex64 as C64;

/// Dense complex matrix used for operators and density matrices.
pub type CMatrix = nalgebra::DMatrix<C64>;

/// Largest register the dense simulator accepts.
pub const MAX_QUBITS: usize = 6;

/// Tolerance for `U^dagger U = I` checks.
pub const UNITARY_TOL: f64 = 1e-10;

/// Tolerances for density-matrix validity.
pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-9;

/// Flat index of a four-qubit basis state.
pub fn basis_index(q3: u8, q2: u8, q1: u8, q0: u8) -> usize {
    debug_assert!(q3 < 2 && q2 < 2 && q1 < 2 && q0 < 2);
    8 * q3 as usize + 4 * q2 as usize + 2 * q1 as usize + q0 as usize
}

/// Inverse of [`basis_index`]: returns `[q3, q2, q1, q0]`.
pub fn basis_bits(index: usize) -> [u8; 4] {
    debug_assert!(index < 16);
    [
        ((index >> 3) & 1) as u8,
        ((index >> 2) & 1) as u8,
        ((index >> 1) & 1) as u8,
        (index & 1) as u8,
    ]
}

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Largest absolute entry of `m - m^dagger`.
pub fn hermitian_residual(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Kronecker product `a (x) b`, with `a` acting on the more significant index.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_index_examples() {
        assert_eq!(basis_index(0, 0, 0, 0), 0);
        assert_eq!(basis_index(0, 0, 1, 1), 3);
        assert_eq!(basis_index(1, 1, 1, 1), 15);
    }

    #[test]
    fn basis_bits_round_trips() {
        for b in 0..16 {
            let [q3, q2, q1, q0] = basis_bits(b);
            assert_eq!(basis_index(q3, q2, q1, q0), b);
        }
    }
}
