//! Experiment pipelines built on the circuit and training modules.

pub mod classification;
pub mod mlp;
pub mod qgan;
pub mod qgdm;
pub mod tomography;

use serde::{Deserialize, Serialize};

/// Full architecture, or the linear reference without re-upload and
/// post-selection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Ade,
    Baseline,
}
