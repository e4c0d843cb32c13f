use std::f64::consts::PI;

use super::mesh::clements_u4;
use super::params::{Block, ParamVector};
use crate::error::{Error, Result};
use crate::qcore::{controlled, rotation_gate, su2_zyz, Axis, CMatrix, StateVector, Unitary};

/// Tiles up to four features cyclically onto the register and maps each to
/// the rotation angle `feature * pi`. Entry `k` drives qubit `k`.
pub fn encode_features(features: &[f64]) -> Result<[f64; 4]> {
    if features.is_empty() || features.len() > 4 {
        return Err(Error::invalid(format!(
            "expected 1 to 4 features, got {}",
            features.len()
        )));
    }
    let mut angles = [0.0; 4];
    for (k, a) in angles.iter_mut().enumerate() {
        let f = features[k % features.len()];
        if !f.is_finite() {
            return Err(Error::NonFinite("features"));
        }
        if f.abs() > 1.0 + 1e-9 {
            return Err(Error::invalid(format!("feature {f} outside [-1, 1]")));
        }
        *a = f.clamp(-1.0, 1.0) * PI;
    }
    Ok(angles)
}

/// `sum_x |x><x|_(q3,q1) (x) (V_x (x) U_x)_(q2,q0)` as a 16x16 gate on
/// targets `[3, 1, 2, 0]`.
pub fn controlled_pair_gate(pairs: &[(Unitary, Unitary); 4]) -> Result<Unitary> {
    let mut m = CMatrix::zeros(16, 16);
    for (x, (v, u)) in pairs.iter().enumerate() {
        if v.dim() != 2 || u.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: v.dim().max(u.dim()),
            });
        }
        let vu = v.kron(u);
        for r in 0..4 {
            for c in 0..4 {
                m[(4 * x + r, 4 * x + c)] = vu.entry(r, c);
            }
        }
    }
    Ok(Unitary::new_unchecked(m))
}

/// Targets for [`controlled_pair_gate`].
pub const PAIR_TARGETS: [usize; 4] = [3, 1, 2, 0];

pub(crate) fn pair_gate_from_angles(cu: &[f64]) -> Result<Unitary> {
    if cu.len() != 24 {
        return Err(Error::DimensionMismatch {
            expected: 24,
            got: cu.len(),
        });
    }
    let su2 = |a: &[f64]| su2_zyz(a[0], a[1], a[2]);
    let pairs = [0, 1, 2, 3].map(|x| {
        let base = 6 * x;
        (su2(&cu[base..base + 3]), su2(&cu[base + 3..base + 6]))
    });
    let mut built = Vec::with_capacity(4);
    for (v, u) in pairs {
        built.push((v?, u?));
    }
    let built: [(Unitary, Unitary); 4] = built.try_into().expect("four pairs");
    controlled_pair_gate(&built)
}

/// Controlled RY with the control on the more significant target.
pub(crate) fn cry_gate(theta: f64) -> Result<Unitary> {
    controlled(&rotation_gate(Axis::Y, theta)?)
}

pub(crate) fn rotate_each(state: &StateVector, axis: Axis, angles: &[f64; 4]) -> Result<StateVector> {
    let mut s = state.clone();
    for (q, &a) in angles.iter().enumerate() {
        if a != 0.0 {
            s = s.apply_gate(&rotation_gate(axis, a)?, &[q])?;
        }
    }
    Ok(s)
}

/// Precomputed first-layer gates.
#[derive(Clone, Debug)]
pub(crate) struct Layer1 {
    pub w: Unitary,
    pub pair: Unitary,
}

impl Layer1 {
    pub fn new(params: &ParamVector) -> Result<Self> {
        Ok(Layer1 {
            w: clements_u4(params.block(Block::Layer1W))?,
            pair: pair_gate_from_angles(params.block(Block::Layer1Cu))?,
        })
    }

    pub fn apply(
        &self,
        state: &StateVector,
        data_angles: &[f64; 4],
        replication: bool,
    ) -> Result<StateVector> {
        let s = rotate_each(state, Axis::Y, data_angles)?;
        let s = s.apply_gate(&self.w, &[3, 1])?;
        let s = s.apply_gate(&self.pair, &PAIR_TARGETS)?;
        if replication {
            rotate_each(&s, Axis::Z, data_angles)
        } else {
            Ok(s)
        }
    }
}

/// Input encoding `RY(data_k)` on every qubit, the mesh on `(q3, q1)`, the
/// controlled pair on `(q2, q0)`, then the re-upload `RZ(data_k)` when
/// replication is on.
pub fn layer1_apply(
    state: &StateVector,
    params: &ParamVector,
    data_angles: &[f64; 4],
    replication: bool,
) -> Result<StateVector> {
    if state.n_qubits() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 16,
            got: state.dim(),
        });
    }
    if data_angles.iter().any(|a| !a.is_finite()) {
        return Err(Error::NonFinite("data angles"));
    }
    Layer1::new(params)?.apply(state, data_angles, replication)?.normalized()
}
