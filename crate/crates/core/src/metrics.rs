//! Evaluation metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tasks::mlp::{mlp_score, MlpDiscriminator};

/// `(sum_i sqrt(p_i q_i))^2`.
pub fn statistical_fidelity(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            got: q.len(),
        });
    }
    for d in [p, q] {
        if d.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("distribution entries must be finite and non-negative"));
        }
        let s: f64 = d.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("distribution sums to {s}")));
        }
    }
    let bc: f64 = p.iter().zip(q).map(|(a, b)| (a * b).sqrt()).sum();
    Ok((bc * bc).min(1.0))
}

const SSIM_C1: f64 = 1e-4;
const SSIM_C2: f64 = 9e-4;

/// Single-window SSIM over the whole image, dynamic range 1, unbiased
/// (n - 1) variances.
pub fn ssim(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::invalid("SSIM needs at least two pixels"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut vx, mut vy, mut cov) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
        cov += (a - mx) * (b - my);
    }
    vx /= n - 1.0;
    vy /= n - 1.0;
    cov /= n - 1.0;
    Ok(((2.0 * mx * my + SSIM_C1) * (2.0 * cov + SSIM_C2))
        / ((mx * mx + my * my + SSIM_C1) * (vx + vy + SSIM_C2)))
}

/// Rows are true labels, columns predictions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.counts.len()).map(|k| self.counts[k][k]).sum()
    }
}

/// Index of the largest score; ties go to the lower index.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (k, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = k;
        }
    }
    best
}

pub fn accuracy_and_confusion(preds: &[usize], truths: &[usize], k: usize) -> Result<(f64, ConfusionMatrix)> {
    if preds.len() != truths.len() {
        return Err(Error::DimensionMismatch {
            expected: truths.len(),
            got: preds.len(),
        });
    }
    if preds.is_empty() {
        return Err(Error::invalid("no predictions"));
    }
    let mut counts = vec![vec![0u64; k]; k];
    for (&p, &t) in preds.iter().zip(truths) {
        if p >= k || t >= k {
            return Err(Error::invalid(format!("label outside 0..{k}")));
        }
        counts[t][p] += 1;
    }
    let cm = ConfusionMatrix { counts };
    Ok((cm.correct() as f64 / cm.total() as f64, cm))
}

/// `mean D(real) - mean D(fake)`.
pub fn wasserstein_estimate(d: &MlpDiscriminator, real: &[Vec<f64>], fake: &[Vec<f64>]) -> Result<f64> {
    if real.is_empty() || fake.is_empty() {
        return Err(Error::invalid("Wasserstein estimate needs nonempty batches"));
    }
    let mean = |batch: &[Vec<f64>]| -> Result<f64> {
        let mut s = 0.0;
        for x in batch {
            s += mlp_score(d, x)?;
        }
        Ok(s / batch.len() as f64)
    };
    Ok(mean(real)? - mean(fake)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    #[test]
    fn fidelity_examples() {
        assert!((statistical_fidelity(&[0.3, 0.7], &[0.3, 0.7]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(statistical_fidelity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!((statistical_fidelity(&[1.0, 0.0], &[0.5, 0.5]).unwrap() - 0.5).abs() < 1e-15);
        assert!(statistical_fidelity(&[1.5, -0.5], &[0.5, 0.5]).is_err());
        assert!(statistical_fidelity(&[0.5, 0.6], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn fidelity_symmetric() {
        let mut rng = rng_from_seed(0);
        for _ in 0..100 {
            let mut p: Vec<f64> = (0..16).map(|_| rng.random()).collect();
            let mut q: Vec<f64> = (0..16).map(|_| rng.random()).collect();
            let (sp, sq): (f64, f64) = (p.iter().sum(), q.iter().sum());
            p.iter_mut().for_each(|v| *v /= sp);
            q.iter_mut().for_each(|v| *v /= sq);
            let a = statistical_fidelity(&p, &q).unwrap();
            assert_eq!(a, statistical_fidelity(&q, &p).unwrap());
            assert!((0.0..=1.0).contains(&a));
        }
    }

    #[test]
    fn ssim_properties() {
        let mut rng = rng_from_seed(1);
        for _ in 0..50 {
            let x: Vec<f64> = (0..64).map(|_| rng.random()).collect();
            let y: Vec<f64> = (0..64).map(|_| rng.random()).collect();
            assert!((ssim(&x, &x).unwrap() - 1.0).abs() < 1e-12);
            let (a, b) = (ssim(&x, &y).unwrap(), ssim(&y, &x).unwrap());
            assert!((a - b).abs() < 1e-12);
            assert!((-1.0..=1.0).contains(&a));
        }
        assert!(ssim(&[0.0; 64], &[0.0; 63]).is_err());
    }

    #[test]
    fn ssim_constant_images() {
        // zero variance: only the luminance term survives
        let s = ssim(&[0.2; 64], &[0.6; 64]).unwrap();
        let want = (2.0 * 0.2 * 0.6 + SSIM_C1) / (0.04 + 0.36 + SSIM_C1);
        assert!((s - want).abs() < 1e-12);
        assert!(s > 0.0 && s < 1.0);
    }

    #[test]
    fn confusion_examples() {
        let (acc, cm) = accuracy_and_confusion(&[0, 1, 1, 0], &[0, 1, 1, 0], 2).unwrap();
        assert_eq!(acc, 1.0);
        assert_eq!(cm.counts, vec![vec![2, 0], vec![0, 2]]);
        let (acc, cm) = accuracy_and_confusion(&[1, 0, 0], &[0, 1, 1], 2).unwrap();
        assert_eq!(acc, 0.0);
        assert_eq!(cm.counts, vec![vec![0, 1], vec![2, 0]]);
        assert!(accuracy_and_confusion(&[3], &[0], 3).is_err());
    }

    #[test]
    fn confusion_three_class_hand_count() {
        // 18/19/7 truth split; 5 + 3 + 2 mistakes placed by hand
        let mut truths = vec![0; 18];
        truths.extend(vec![1; 19]);
        truths.extend(vec![2; 7]);
        let mut preds = truths.clone();
        for p in preds.iter_mut().take(5) {
            *p = 1;
        }
        for p in preds.iter_mut().skip(18).take(3) {
            *p = 2;
        }
        preds[37] = 0;
        preds[38] = 1;
        let (acc, cm) = accuracy_and_confusion(&preds, &truths, 3).unwrap();
        assert_eq!(cm.counts, vec![vec![13, 5, 0], vec![0, 16, 3], vec![1, 1, 5]]);
        assert!((acc - 34.0 / 44.0).abs() < 1e-15);
        let rows: Vec<u64> = cm.counts.iter().map(|r| r.iter().sum()).collect();
        assert_eq!(rows, vec![18, 19, 7]);
    }

    #[test]
    fn argmax_ties_low() {
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        assert_eq!(argmax(&[0.2, 0.4, 0.4]), 1);
    }

    #[test]
    fn wasserstein_examples() {
        let mut rng = rng_from_seed(2);
        let d = MlpDiscriminator::image_critic(&mut rng);
        let batch: Vec<Vec<f64>> = (0..3).map(|_| (0..64).map(|_| rng.random()).collect()).collect();
        assert_eq!(wasserstein_estimate(&d, &batch, &batch).unwrap(), 0.0);
        let mut flat = d.flatten();
        let n = flat.len();
        flat.iter_mut().for_each(|v| *v = 0.0);
        flat[n - 1] = 3.0;
        let mut c = d.clone();
        c.set_flat(&flat).unwrap();
        let other: Vec<Vec<f64>> = vec![vec![1.0; 64]];
        assert_eq!(wasserstein_estimate(&c, &batch, &other).unwrap(), 0.0);
        assert!(wasserstein_estimate(&d, &[], &batch).is_err());
    }

    #[test]
    fn wasserstein_linear_critic() {
        // identity first layer, one active unit: D(x) = w . x on [0, 1]^4
        let w = [0.5, -0.25, 1.0, 0.75];
        let mut d = MlpDiscriminator::zeros([4, 4, 1]);
        for i in 0..4 {
            d.w1[i * 4 + i] = 1.0;
            d.w2[i] = w[i];
        }
        d.b2[0] = 10.0;
        d.w3[0] = 1.0;
        d.b3 = -10.0;
        let real = vec![vec![0.2, 0.4, 0.6, 0.8], vec![0.4, 0.2, 0.0, 1.0]];
        let fake = vec![vec![0.1, 0.1, 0.1, 0.1]];
        let mu_r = [0.3, 0.3, 0.3, 0.9];
        let want: f64 = w.iter().zip(mu_r).map(|(a, m)| a * (m - 0.1)).sum();
        assert!((wasserstein_estimate(&d, &real, &fake).unwrap() - want).abs() < 1e-12);
    }
}
