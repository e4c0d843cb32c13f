use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};

/// Draws multinomial counts over `probs` by sequential conditional binomials.
///
/// Probabilities must be non-negative and sum to one within `1e-9`; they are
/// renormalized before sampling. The counts always sum to `shots`.
pub fn sample_counts(probs: &[f64], shots: u64, rng: &mut impl Rng) -> Result<Vec<u64>> {
    if shots == 0 {
        return Err(Error::invalid("shot count must be positive"));
    }
    if probs.is_empty() {
        return Err(Error::invalid("empty probability vector"));
    }
    if probs.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite("probabilities"));
    }
    if let Some(p) = probs.iter().find(|p| **p < 0.0) {
        return Err(Error::invalid(format!("negative probability {p}")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("probabilities sum to {total}")));
    }

    let mut counts = vec![0u64; probs.len()];
    let mut remaining = shots;
    let mut mass_left = 1.0;
    let last = probs.len() - 1;
    for (k, p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if k == last {
            counts[k] = remaining;
            break;
        }
        let p = p / total;
        let cond = if mass_left > 0.0 {
            (p / mass_left).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let draw = Binomial::new(remaining, cond)
            .map_err(|e| Error::invalid(format!("binomial: {e}")))?
            .sample(rng);
        counts[k] = draw;
        remaining -= draw;
        mass_left -= p;
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn counts_sum_to_shots() {
        let mut rng = rng_from_seed(1);
        let p = [0.1, 0.2, 0.3, 0.4];
        for shots in [1, 7, 100, 10_000] {
            let c = sample_counts(&p, shots, &mut rng).unwrap();
            assert_eq!(c.iter().sum::<u64>(), shots);
        }
    }

    #[test]
    fn deterministic_outcome() {
        let mut rng = rng_from_seed(2);
        let c = sample_counts(&[0.0, 1.0, 0.0], 50, &mut rng).unwrap();
        assert_eq!(c, vec![0, 50, 0]);
    }

    #[test]
    fn frequencies_converge() {
        let mut rng = rng_from_seed(3);
        let p = [0.25, 0.05, 0.5, 0.2];
        let n = 200_000;
        let c = sample_counts(&p, n, &mut rng).unwrap();
        for (k, &pk) in p.iter().enumerate() {
            let f = c[k] as f64 / n as f64;
            assert!((f - pk).abs() < 0.005, "{k}: {f} vs {pk}");
        }
    }

    #[test]
    fn same_seed_same_counts() {
        let p = [0.3, 0.3, 0.4];
        let a = sample_counts(&p, 1000, &mut rng_from_seed(7)).unwrap();
        let b = sample_counts(&p, 1000, &mut rng_from_seed(7)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_input() {
        let mut rng = rng_from_seed(4);
        assert!(sample_counts(&[0.5, 0.5], 0, &mut rng).is_err());
        assert!(sample_counts(&[-0.1, 1.1], 10, &mut rng).is_err());
        assert!(sample_counts(&[0.5, 0.6], 10, &mut rng).is_err());
        assert!(sample_counts(&[], 10, &mut rng).is_err());
    }
}
