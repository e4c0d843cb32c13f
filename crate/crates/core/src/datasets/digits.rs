use std::path::Path;

use crate::error::{Error, Result};

/// Row-major 8x8 image with pixels in `[0, 1]`.
pub type Image = [f64; 64];

/// Loads 8x8 digit images (64 intensities 0..=16, then the label) of the
/// requested classes, scaled by 1/16.
pub fn load_digits(path: &Path, classes: &[u32]) -> Result<Vec<Image>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<u32> = line
            .split(',')
            .map(|s| s.trim().parse::<u32>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| bad(i + 1, e.to_string()))?;
        if vals.len() != 65 {
            return Err(bad(i + 1, format!("expected 65 values, found {}", vals.len())));
        }
        if let Some(v) = vals[..64].iter().find(|&&v| v > 16) {
            return Err(bad(i + 1, format!("intensity {v} outside 0..=16")));
        }
        if classes.contains(&vals[64]) {
            let mut img = [0.0; 64];
            for (p, &v) in img.iter_mut().zip(&vals[..64]) {
                *p = v as f64 / 16.0;
            }
            out.push(img);
        }
    }
    Ok(out)
}

/// Pixelwise mean image.
pub fn class_prototype(images: &[Image]) -> Result<Image> {
    if images.is_empty() {
        return Err(Error::Dataset("no images to average".into()));
    }
    let mut m = [0.0; 64];
    for img in images {
        for (a, b) in m.iter_mut().zip(img) {
            *a += b;
        }
    }
    for a in &mut m {
        *a /= images.len() as f64;
    }
    Ok(m)
}
