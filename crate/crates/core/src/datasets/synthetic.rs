use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed, SimRng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledPoint {
    pub features: Vec<f64>,
    pub label: usize,
}

/// Squared radius of the circle boundary. The disk covers exactly half of
/// `[-1, 1]^2`.
pub const CIRCLE_RADIUS_SQ: f64 = 2.0 / PI;

pub fn circle_label(x: f64, y: f64) -> usize {
    usize::from(x * x + y * y < CIRCLE_RADIUS_SQ)
}

fn circle_points(n: usize, rng: &mut SimRng) -> Vec<LabeledPoint> {
    (0..n)
        .map(|_| {
            let x = rng.random_range(-1.0..=1.0);
            let y = rng.random_range(-1.0..=1.0);
            LabeledPoint {
                features: vec![x, y],
                label: circle_label(x, y),
            }
        })
        .collect()
}

/// Uniform points on the square labelled by the centered disk.
pub fn gen_circle(n_train: usize, n_test: usize, seed: u64) -> (Vec<LabeledPoint>, Vec<LabeledPoint>) {
    let train = circle_points(n_train, &mut rng_from_seed(derive_seed(seed, &[0])));
    let test = circle_points(n_test, &mut rng_from_seed(derive_seed(seed, &[1])));
    (train, test)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpiralConfig {
    /// Angle swept by each arm from center to rim.
    pub sweep: f64,
    pub noise: f64,
}

impl Default for SpiralConfig {
    fn default() -> Self {
        SpiralConfig {
            sweep: 3.0 * PI,
            noise: 0.05,
        }
    }
}

/// Noise-free point of arm `class` at parameter `u` in `[0, 1]`.
pub fn spiral_point(cfg: &SpiralConfig, class: usize, u: f64) -> [f64; 2] {
    let angle = cfg.sweep * u + class as f64 * PI;
    [u * angle.sin(), u * angle.cos()]
}

fn spiral_points(cfg: &SpiralConfig, n: usize, rng: &mut SimRng) -> Vec<LabeledPoint> {
    let noise = Normal::new(0.0, cfg.noise).expect("finite noise level");
    (0..n)
        .map(|i| {
            let label = i % 2;
            let u: f64 = rng.random();
            let [x, y] = spiral_point(cfg, label, u);
            let x = (x + noise.sample(rng)).clamp(-1.0, 1.0);
            let y = (y + noise.sample(rng)).clamp(-1.0, 1.0);
            LabeledPoint {
                features: vec![x, y],
                label,
            }
        })
        .collect()
}

/// Two interleaved arms, labels alternating so the classes are balanced.
pub fn gen_spiral_with(
    cfg: &SpiralConfig,
    n_train: usize,
    n_test: usize,
    seed: u64,
) -> Result<(Vec<LabeledPoint>, Vec<LabeledPoint>)> {
    if !(cfg.noise >= 0.0 && cfg.noise.is_finite() && cfg.sweep.is_finite()) {
        return Err(Error::invalid("spiral noise must be finite and non-negative"));
    }
    let train = spiral_points(cfg, n_train, &mut rng_from_seed(derive_seed(seed, &[0])));
    let test = spiral_points(cfg, n_test, &mut rng_from_seed(derive_seed(seed, &[1])));
    Ok((train, test))
}

pub fn gen_spiral(n_train: usize, n_test: usize, seed: u64) -> (Vec<LabeledPoint>, Vec<LabeledPoint>) {
    gen_spiral_with(&SpiralConfig::default(), n_train, n_test, seed).expect("default spiral config")
}

/// Nine significant digits in scientific notation.
pub(crate) fn fmt_sig9(x: f64) -> String {
    format!("{x:.8e}")
}

/// Writes `f0,f1,...,label` CSV.
pub fn write_csv(points: &[LabeledPoint], path: &Path) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    let width = points.first().map_or(0, |p| p.features.len());
    let mut header: Vec<String> = (0..width).map(|i| format!("f{i}")).collect();
    header.push("label".into());
    writeln!(out, "{}", header.join(",")).map_err(io)?;
    for p in points {
        if p.features.len() != width {
            return Err(Error::DimensionMismatch {
                expected: width,
                got: p.features.len(),
            });
        }
        let mut row: Vec<String> = p.features.iter().map(|&v| fmt_sig9(v)).collect();
        row.push(p.label.to_string());
        writeln!(out, "{}", row.join(",")).map_err(io)?;
    }
    out.flush().map_err(io)
}
