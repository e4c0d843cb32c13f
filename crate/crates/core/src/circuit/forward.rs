use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use super::layers::{cry_gate, encode_features, Layer1, PAIR_TARGETS};
use super::mcry::{apply_diagonal, cccz_angle, mcry_diagonal, McryDiagonal};
use super::mesh::clements_u4;
use super::params::{Block, ParamVector};
use crate::error::{Error, Result};
use crate::qcore::{hadamard, sample_counts, StateVector, Unitary};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Readout {
    /// `(P(q2 = 1), P(q3 = 1))`.
    TwoClass,
    /// `(q3, q2)` outcomes `00, 01, 10`, renormalized.
    ThreeClass,
    /// Reduced state of `(q1, q0)`.
    Tomography,
}

/// How features become the four data angles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputMap {
    /// Features tiled cyclically over all four qubits.
    Tiled,
    /// Two latent values in `[0, 1]` on `q0` and `q2`; `q1`, `q3` get zero.
    Latent,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShotsMode {
    Exact,
    Sampled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitConfig {
    pub replication: bool,
    pub mcry: bool,
    pub readout: Readout,
    pub input_map: InputMap,
    pub shots_mode: ShotsMode,
    /// `(control, target)` for the two trailing CRY gates.
    pub cry_pairs: [(usize, usize); 2],
}

impl CircuitConfig {
    pub fn ade(readout: Readout) -> Self {
        CircuitConfig {
            replication: true,
            mcry: true,
            readout,
            input_map: InputMap::Tiled,
            shots_mode: ShotsMode::Exact,
            cry_pairs: [(1, 0), (3, 2)],
        }
    }

    /// No re-upload and no post-selection: a plain linear circuit.
    pub fn baseline(readout: Readout) -> Self {
        CircuitConfig {
            replication: false,
            mcry: false,
            ..Self::ade(readout)
        }
    }

    pub fn validate(&self) -> Result<()> {
        for &(c, t) in &self.cry_pairs {
            if c > 3 || t > 3 || c == t {
                return Err(Error::InvalidTargets(vec![c, t]));
            }
        }
        Ok(())
    }

    /// Data angles for one input under this config's input map.
    pub fn data_angles(&self, features: &[f64]) -> Result<[f64; 4]> {
        match self.input_map {
            InputMap::Tiled => encode_features(features),
            InputMap::Latent => {
                if features.len() != 2 {
                    return Err(Error::DimensionMismatch {
                        expected: 2,
                        got: features.len(),
                    });
                }
                if features.iter().any(|z| !(-1e-9..=1.0 + 1e-9).contains(z)) {
                    return Err(Error::invalid("latent values must lie in [0, 1]"));
                }
                let pi = std::f64::consts::PI;
                Ok([features[0] * pi, 0.0, features[1] * pi, 0.0])
            }
        }
    }
}

/// Post-selected basis-state probabilities and the post-selection success.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputDistribution {
    pub p: [f64; 16],
    pub success_prob: f64,
}

impl OutputDistribution {
    /// Empirical distribution from accepted counts.
    pub fn from_counts(counts: &[u64; 16], accepted: u64, shots: u64) -> Result<Self> {
        if accepted == 0 {
            return Err(Error::NullPostSelection(0.0));
        }
        let mut p = [0.0; 16];
        for (pk, &c) in p.iter_mut().zip(counts) {
            *pk = c as f64 / accepted as f64;
        }
        Ok(OutputDistribution {
            p,
            success_prob: accepted as f64 / shots as f64,
        })
    }

    pub fn total(&self) -> f64 {
        self.p.iter().sum()
    }
}

/// All parameter-dependent gates of one circuit, built once and reused
/// for every input.
#[derive(Clone, Debug)]
pub struct CompiledCircuit {
    config: CircuitConfig,
    layer1: Layer1,
    u4_p1: Unitary,
    u4_p2: Unitary,
    mcry: Option<McryDiagonal>,
    cry: [Unitary; 2],
}

impl CompiledCircuit {
    pub fn new(config: &CircuitConfig, params: &ParamVector) -> Result<Self> {
        config.validate()?;
        let cry = params.block(Block::Cry);
        Ok(CompiledCircuit {
            config: config.clone(),
            layer1: Layer1::new(params)?,
            u4_p1: clements_u4(params.block(Block::U4Photon1))?,
            u4_p2: clements_u4(params.block(Block::U4Photon2))?,
            mcry: if config.mcry {
                Some(mcry_diagonal(params.block(Block::Mcry))?)
            } else {
                None
            },
            cry: [cry_gate(cry[0])?, cry_gate(cry[1])?],
        })
    }

    pub fn config(&self) -> &CircuitConfig {
        &self.config
    }

    /// Second layer only: meshes, MCRY, CRY. Returns the output state and
    /// the post-selection success probability.
    pub(crate) fn second_layer(&self, state: &StateVector) -> Result<(StateVector, f64)> {
        let s = state.apply_gate(&self.u4_p2, &[3, 2])?;
        let s = s.apply_gate(&self.u4_p1, &[1, 0])?;
        let (mut s, success) = match &self.mcry {
            Some(d) => apply_diagonal(&s, d)?,
            None => (s, 1.0),
        };
        for (gate, &(c, t)) in self.cry.iter().zip(&self.config.cry_pairs) {
            s = s.apply_gate(gate, &[c, t])?;
        }
        Ok((s, success))
    }

    /// Controlled pair followed by the second layer, for externally
    /// prepared inputs.
    pub(crate) fn from_loaded(&self, state: &StateVector) -> Result<(StateVector, f64)> {
        let s = state.apply_gate(&self.layer1.pair, &PAIR_TARGETS)?;
        self.second_layer(&s)
    }

    pub fn state(&self, data_angles: &[f64; 4]) -> Result<(StateVector, f64)> {
        if data_angles.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite("data angles"));
        }
        let s = StateVector::zero(4)?;
        let s = self.layer1.apply(&s, data_angles, self.config.replication)?;
        self.second_layer(&s)
    }

    pub fn run(&self, data_angles: &[f64; 4]) -> Result<OutputDistribution> {
        let (s, success_prob) = self.state(data_angles)?;
        let probs = s.probabilities();
        let total: f64 = probs.iter().sum();
        let mut p = [0.0; 16];
        for (pk, q) in p.iter_mut().zip(&probs) {
            *pk = q / total;
        }
        Ok(OutputDistribution { p, success_prob })
    }

    pub fn run_sampled(
        &self,
        data_angles: &[f64; 4],
        shots: u64,
        rng: &mut impl Rng,
    ) -> Result<([u64; 16], u64)> {
        if shots == 0 {
            return Err(Error::invalid("shot count must be positive"));
        }
        let dist = self.run(data_angles)?;
        let accepted = Binomial::new(shots, dist.success_prob.clamp(0.0, 1.0))
            .map_err(|e| Error::invalid(format!("binomial: {e}")))?
            .sample(rng);
        let mut counts = [0u64; 16];
        if accepted > 0 {
            let c = sample_counts(&dist.p, accepted, rng)?;
            counts.copy_from_slice(&c);
        }
        Ok((counts, accepted))
    }

    /// Exact distribution or a shot-noise estimate, depending on the config.
    pub fn evaluate(
        &self,
        data_angles: &[f64; 4],
        shots: u64,
        rng: &mut impl Rng,
    ) -> Result<OutputDistribution> {
        match self.config.shots_mode {
            ShotsMode::Exact => self.run(data_angles),
            ShotsMode::Sampled => {
                let (counts, accepted) = self.run_sampled(data_angles, shots, rng)?;
                OutputDistribution::from_counts(&counts, accepted, shots)
            }
        }
    }
}

/// `|0000>` through both layers, then post-selected readout probabilities.
pub fn forward(
    config: &CircuitConfig,
    params: &ParamVector,
    data_angles: &[f64; 4],
) -> Result<OutputDistribution> {
    CompiledCircuit::new(config, params)?.run(data_angles)
}

/// Shot-level forward: `accepted ~ Binomial(shots, success)`, then
/// multinomial counts over the post-selected distribution.
pub fn forward_sampled(
    config: &CircuitConfig,
    params: &ParamVector,
    data_angles: &[f64; 4],
    shots: u64,
    rng: &mut impl Rng,
) -> Result<([u64; 16], u64)> {
    CompiledCircuit::new(config, params)?.run_sampled(data_angles, shots, rng)
}

/// Class scores from a distribution.
pub fn readout_scores(dist: &OutputDistribution, mode: Readout) -> Result<Vec<f64>> {
    let p = &dist.p;
    match mode {
        Readout::TwoClass => {
            let q2: f64 = (0..16).filter(|b| (b >> 2) & 1 == 1).map(|b| p[b]).sum();
            let q3: f64 = (0..16).filter(|b| (b >> 3) & 1 == 1).map(|b| p[b]).sum();
            Ok(vec![q2, q3])
        }
        Readout::ThreeClass => {
            let mut m = [0.0; 3];
            for (b, &pb) in p.iter().enumerate() {
                let k = b >> 2;
                if k < 3 {
                    m[k] += pb;
                }
            }
            let s: f64 = m.iter().sum();
            if s < 1e-9 {
                return Err(Error::invalid(
                    "three-class readout has no mass on the accepted outcomes",
                ));
            }
            Ok(m.iter().map(|x| x / s).collect())
        }
        Readout::Tomography => Err(Error::invalid(
            "tomography readout produces a state, not class scores",
        )),
    }
}

/// Exact truth table of the triply controlled NOT built from the MCRY
/// module: every retained amplitude at `1/sqrt(3)`, with a Hadamard on `q2`
/// before and after. Column `c` holds the output distribution for basis
/// input `c`.
pub fn cccx_truth_table() -> Result<[[f64; 16]; 16]> {
    let mut params = ParamVector::identity();
    params.set_block(Block::Mcry, &[cccz_angle(); 7])?;
    let compiled = CompiledCircuit::new(&CircuitConfig::ade(Readout::TwoClass), &params)?;
    let h = hadamard();
    let mut table = [[0.0; 16]; 16];
    for input in 0..16 {
        let s = StateVector::basis(4, input)?.apply_gate(&h, &[2])?;
        let (s, _) = compiled.second_layer(&s)?;
        let s = s.apply_gate(&h, &[2])?;
        for (row, p) in s.probabilities().into_iter().enumerate() {
            table[row][input] = p;
        }
    }
    Ok(table)
}

/// Permutation table: identity except `|0011> <-> |0111>`.
pub fn ideal_cccx_table() -> [[f64; 16]; 16] {
    let mut t = [[0.0; 16]; 16];
    for c in 0..16 {
        let r = match c {
            0b0011 => 0b0111,
            0b0111 => 0b0011,
            x => x,
        };
        t[r][c] = 1.0;
    }
    t
}
