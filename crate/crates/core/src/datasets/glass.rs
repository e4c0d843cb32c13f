use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::SliceRandom;

use super::synthetic::LabeledPoint;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// UCI class ids kept, in label order 0, 1, 2.
pub const GLASS_CLASSES: [u32; 3] = [1, 2, 7];
pub const GLASS_TEST_SIZE: usize = 44;
const GLASS_ROWS: usize = 214;
const RAW_FEATURES: usize = 9;
const COMPONENTS: usize = 4;

#[derive(Clone, Debug)]
pub struct GlassSplit {
    pub train: Vec<LabeledPoint>,
    pub test: Vec<LabeledPoint>,
    /// Principal axes in standardized feature space, one per row.
    pub components: DMatrix<f64>,
}

fn parse(path: &Path) -> Result<Vec<([f64; RAW_FEATURES], u32)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 11 {
            return Err(bad(i + 1, format!("expected 11 columns, found {}", cols.len())));
        }
        let mut f = [0.0; RAW_FEATURES];
        for (k, slot) in f.iter_mut().enumerate() {
            *slot = cols[k + 1]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(i + 1, format!("bad feature '{}'", cols[k + 1])))?;
        }
        let class = cols[10]
            .parse::<u32>()
            .map_err(|_| bad(i + 1, format!("bad class '{}'", cols[10])))?;
        rows.push((f, class));
    }
    if rows.len() != GLASS_ROWS {
        return Err(Error::Dataset(format!(
            "{}: expected {GLASS_ROWS} rows, found {}",
            path.display(),
            rows.len()
        )));
    }
    Ok(rows)
}

/// Per-class test quotas by largest remainder, so they sum to `test_size`.
fn quotas(counts: &[usize], test_size: usize) -> Vec<usize> {
    let total: usize = counts.iter().sum();
    let exact: Vec<f64> = counts
        .iter()
        .map(|&c| c as f64 * test_size as f64 / total as f64)
        .collect();
    let mut q: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let short = test_size - q.iter().sum::<usize>();
    for &k in order.iter().take(short) {
        q[k] += 1;
    }
    q
}

/// Three-class Glass task: classes 1, 2 and 7, stratified 131/44 split,
/// standardized and compressed to four principal components scaled to
/// `[-1, 1]` with training statistics. Test features outside the training
/// range are clipped.
pub fn load_glass(path: &Path, seed: u64) -> Result<GlassSplit> {
    let rows = parse(path)?;
    let mut by_class: Vec<Vec<[f64; RAW_FEATURES]>> = vec![Vec::new(); GLASS_CLASSES.len()];
    for (f, c) in rows {
        if let Some(k) = GLASS_CLASSES.iter().position(|&g| g == c) {
            by_class[k].push(f);
        }
    }
    let counts: Vec<usize> = by_class.iter().map(Vec::len).collect();
    if counts.iter().sum::<usize>() != 175 {
        return Err(Error::Dataset(format!(
            "expected 175 rows in classes {GLASS_CLASSES:?}, found {counts:?}"
        )));
    }

    let mut rng = rng_from_seed(seed);
    let mut train_raw = Vec::new();
    let mut test_raw = Vec::new();
    for (label, (mut rows, q)) in by_class.into_iter().zip(quotas(&counts, GLASS_TEST_SIZE)).enumerate() {
        rows.shuffle(&mut rng);
        for (i, f) in rows.into_iter().enumerate() {
            if i < q {
                test_raw.push((f, label));
            } else {
                train_raw.push((f, label));
            }
        }
    }

    let n = train_raw.len() as f64;
    let mut mean = [0.0; RAW_FEATURES];
    for (f, _) in &train_raw {
        for k in 0..RAW_FEATURES {
            mean[k] += f[k] / n;
        }
    }
    let mut std = [0.0; RAW_FEATURES];
    for (f, _) in &train_raw {
        for k in 0..RAW_FEATURES {
            std[k] += (f[k] - mean[k]).powi(2) / (n - 1.0);
        }
    }
    for s in &mut std {
        *s = if *s > 0.0 { s.sqrt() } else { 1.0 };
    }
    let standardize = |f: &[f64; RAW_FEATURES]| -> Vec<f64> {
        (0..RAW_FEATURES).map(|k| (f[k] - mean[k]) / std[k]).collect()
    };
    let z_train: Vec<Vec<f64>> = train_raw.iter().map(|(f, _)| standardize(f)).collect();

    let mut cov = DMatrix::<f64>::zeros(RAW_FEATURES, RAW_FEATURES);
    for z in &z_train {
        for a in 0..RAW_FEATURES {
            for b in 0..RAW_FEATURES {
                cov[(a, b)] += z[a] * z[b] / (n - 1.0);
            }
        }
    }
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..RAW_FEATURES).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut components = DMatrix::<f64>::zeros(COMPONENTS, RAW_FEATURES);
    for (r, &k) in order.iter().take(COMPONENTS).enumerate() {
        let col = eig.eigenvectors.column(k);
        // sign convention: largest-magnitude loading positive
        let pivot = col.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
        let s = if pivot < 0.0 { -1.0 } else { 1.0 };
        for c in 0..RAW_FEATURES {
            components[(r, c)] = s * col[c];
        }
    }
    let project = |z: &[f64]| -> Vec<f64> {
        (0..COMPONENTS)
            .map(|r| (0..RAW_FEATURES).map(|c| components[(r, c)] * z[c]).sum())
            .collect()
    };
    let p_train: Vec<Vec<f64>> = z_train.iter().map(|z| project(z)).collect();
    let mut lo = [f64::INFINITY; COMPONENTS];
    let mut hi = [f64::NEG_INFINITY; COMPONENTS];
    for p in &p_train {
        for k in 0..COMPONENTS {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let rescale = |p: &[f64]| -> Vec<f64> {
        (0..COMPONENTS)
            .map(|k| {
                let span = hi[k] - lo[k];
                if span > 0.0 {
                    (2.0 * (p[k] - lo[k]) / span - 1.0).clamp(-1.0, 1.0)
                } else {
                    0.0
                }
            })
            .collect()
    };

    let train = p_train
        .iter()
        .zip(&train_raw)
        .map(|(p, (_, label))| LabeledPoint {
            features: rescale(p),
            label: *label,
        })
        .collect();
    let test = test_raw
        .iter()
        .map(|(f, label)| LabeledPoint {
            features: rescale(&project(&standardize(f))),
            label: *label,
        })
        .collect();
    Ok(GlassSplit {
        train,
        test,
        components,
    })
}
