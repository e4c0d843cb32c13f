use std::f64::consts::PI;
use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mesh::identity_angles;
use crate::error::{Error, Result};

/// Tag written next to every persisted parameter vector.
pub const LAYOUT_VERSION: &str = "adeqnn-params-v1";

pub const N_PARAMS: usize = 81;

/// Named slices of the flat parameter vector, in storage order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Block {
    /// Mesh on `(q3, q1)` before the controlled pair.
    Layer1W,
    /// Four `(V_x, U_x)` pairs, three angles each, `x = 2*q3 + q1`.
    Layer1Cu,
    /// Mesh on `(q1, q0)`.
    U4Photon1,
    /// Mesh on `(q3, q2)`.
    U4Photon2,
    Mcry,
    Cry,
}

impl Block {
    pub const ALL: [Block; 6] = [
        Block::Layer1W,
        Block::Layer1Cu,
        Block::U4Photon1,
        Block::U4Photon2,
        Block::Mcry,
        Block::Cry,
    ];

    pub fn range(self) -> Range<usize> {
        match self {
            Block::Layer1W => 0..16,
            Block::Layer1Cu => 16..40,
            Block::U4Photon1 => 40..56,
            Block::U4Photon2 => 56..72,
            Block::Mcry => 72..79,
            Block::Cry => 79..81,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Block::Layer1W => "layer1_W",
            Block::Layer1Cu => "layer1_CU",
            Block::U4Photon1 => "u4_photon1",
            Block::U4Photon2 => "u4_photon2",
            Block::Mcry => "mcry",
            Block::Cry => "cry",
        }
    }

    fn is_mesh(self) -> bool {
        matches!(self, Block::Layer1W | Block::U4Photon1 | Block::U4Photon2)
    }
}

/// Trainable angles in radians. Values are kept as given (no wrapping).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamFile", into = "ParamFile")]
pub struct ParamVector {
    values: Vec<f64>,
}

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() != N_PARAMS {
            return Err(Error::DimensionMismatch {
                expected: N_PARAMS,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("parameter vector"));
        }
        Ok(ParamVector { values })
    }

    /// Every block set to its identity action: meshes at the identity
    /// setting, controlled pair and CRY at zero, MCRY fully transmitting.
    pub fn identity() -> Self {
        let mut values = vec![0.0; N_PARAMS];
        let mesh = identity_angles();
        for b in [Block::Layer1W, Block::U4Photon1, Block::U4Photon2] {
            values[b.range()].copy_from_slice(&mesh);
        }
        for v in &mut values[Block::Mcry.range()] {
            *v = PI;
        }
        ParamVector { values }
    }

    /// Meshes and the controlled pair start within `pi/8` of identity;
    /// MCRY and CRY angles are uniform in `[-pi, pi]`.
    pub fn random_init(rng: &mut impl Rng) -> Self {
        let base = Self::identity();
        let mut values = base.values;
        for b in Block::ALL {
            for v in &mut values[b.range()] {
                if b.is_mesh() || b == Block::Layer1Cu {
                    *v += rng.random_range(-PI / 8.0..=PI / 8.0);
                } else {
                    *v = rng.random_range(-PI..=PI);
                }
            }
        }
        ParamVector { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn block(&self, b: Block) -> &[f64] {
        &self.values[b.range()]
    }

    pub fn set_block(&mut self, b: Block, values: &[f64]) -> Result<()> {
        let r = b.range();
        if values.len() != r.len() {
            return Err(Error::DimensionMismatch {
                expected: r.len(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("parameter block"));
        }
        self.values[r].copy_from_slice(values);
        Ok(())
    }
}

/// On-disk form: the layout tag, the named blocks, and the flat values.
#[derive(Serialize, Deserialize)]
struct ParamFile {
    layout_version: String,
    blocks: Vec<BlockEntry>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct BlockEntry {
    name: String,
    start: usize,
    len: usize,
}

impl From<ParamVector> for ParamFile {
    fn from(p: ParamVector) -> Self {
        ParamFile {
            layout_version: LAYOUT_VERSION.to_string(),
            blocks: Block::ALL
                .iter()
                .map(|b| BlockEntry {
                    name: b.name().to_string(),
                    start: b.range().start,
                    len: b.range().len(),
                })
                .collect(),
            values: p.values,
        }
    }
}

impl TryFrom<ParamFile> for ParamVector {
    type Error = Error;

    fn try_from(f: ParamFile) -> Result<Self> {
        if f.layout_version != LAYOUT_VERSION {
            return Err(Error::invalid(format!(
                "parameter layout {} is not {LAYOUT_VERSION}",
                f.layout_version
            )));
        }
        ParamVector::new(f.values)
    }
}
