//! The four-qubit network: parameter layout, first layer (encoding, mesh,
//! controlled pair, re-upload), second layer (two photon meshes, the
//! post-selecting MCRY module, two CRY gates) and readout.
//!
//! Qubits `(q3, q2)` are photon 2 and `(q1, q0)` are photon 1. Flat basis
//! index is `8*q3 + 4*q2 + 2*q1 + q0`.

mod denoiser;
mod forward;
mod layers;
mod mcry;
mod mesh;
mod params;

pub use denoiser::denoiser_forward;
pub use forward::{
    cccx_truth_table, forward, forward_sampled, ideal_cccx_table, readout_scores, CircuitConfig,
    CompiledCircuit, InputMap, OutputDistribution, Readout, ShotsMode,
};
pub use layers::{controlled_pair_gate, encode_features, layer1_apply, PAIR_TARGETS};
pub use mcry::{
    apply_diagonal, apply_mcry, cccz_angle, mcry_diagonal, mcry_expanded_oracle, mzi_amplitude,
    two_photon_amplitude, McryDiagonal, MIN_SUCCESS,
};
pub use mesh::{clements_u4, identity_angles, BLOCK_ORDER, MESH_ANGLES};
pub use params::{Block, ParamVector, LAYOUT_VERSION, N_PARAMS};

#[doc(hidden)]
pub fn corrupt_interference_sign(d: McryDiagonal) -> McryDiagonal {
    d.with_flipped_interference()
}
