//! Run-directory writers. Floats use Rust's shortest round-trip form, so
//! identical runs give identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::qcore::DensityMatrix;
use crate::tasks::classification::BoundaryPoint;
use crate::train::IterationRecord;

/// Shortest round-trip digits; exponent form outside `[1e-4, 1e15)`.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) || !a.is_finite() {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub fn create(root: &Path) -> Result<Self> {
        let exports = root.join("exports");
        fs::create_dir_all(&exports).map_err(|e| Error::io(&exports, e))?;
        Ok(RunDir { root: root.to_path_buf() })
    }

    pub fn write(&self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))
    }

    pub fn write_json<T: Serialize>(&self, rel: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)
            .map_err(|e| Error::invalid(format!("serializing {rel}: {e}")))?;
        s.push('\n');
        self.write(rel, s.as_bytes())
    }
}

/// `iter,cost,shots,<metric>`; a missing metric leaves the cell empty.
pub fn history_csv(history: &[IterationRecord], metric: &str) -> String {
    let mut out = format!("iter,cost,shots,{metric}\n");
    for h in history {
        let m = h.metric.map(num).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{}", h.iter, num(h.cost), h.shots, m);
    }
    out
}

pub fn boundary_csv(grid: &[BoundaryPoint]) -> String {
    let k = grid.first().map_or(0, |p| p.scores.len());
    let mut out = String::from("x,y");
    for c in 0..k {
        let _ = write!(out, ",score{c}");
    }
    out.push_str(",pred\n");
    for p in grid {
        let _ = write!(out, "{},{}", num(p.x), num(p.y));
        for s in &p.scores {
            let _ = write!(out, ",{}", num(*s));
        }
        let _ = writeln!(out, ",{}", p.pred);
    }
    out
}

/// One row per matrix row, entries interleaved as `re,im`.
pub fn density_csv(rho: &DensityMatrix) -> String {
    let m = rho.matrix();
    let mut out = String::new();
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .flat_map(|c| [num(m[(r, c)].re), num(m[(r, c)].im)])
            .collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

/// 8x8 binary graymap; pixel values in `[0, 1]` map to `0..=255`.
pub fn pgm(image: &[f64]) -> Vec<u8> {
    let mut out = b"P5\n8 8\n255\n".to_vec();
    out.extend(image.iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    out
}

pub fn image_csv(image: &[f64]) -> String {
    let mut out = String::new();
    for row in image.chunks(8) {
        let cells: Vec<String> = row.iter().map(|&v| num(v)).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}
