use rand::Rng;
use rand_distr::{Binomial, Distribution};

use super::forward::{CircuitConfig, CompiledCircuit, Readout};
use super::params::ParamVector;
use crate::error::{Error, Result};
use crate::qcore::{partial_trace, purify, sample_counts, DensityMatrix};
use crate::tasks::tomography::{mle_tomography, pauli_settings, TomographyCounts};

/// One denoising step. The input state is loaded on `(q3, q1)` through its
/// purification (purifier on `(q2, q0)`), passed through the controlled pair
/// and the second layer, and read out on `(q1, q0)` with `(q3, q2)` traced
/// out.
///
/// In exact mode the reduced state is returned directly. Otherwise each of
/// the nine Pauli settings gets `shots` trials, thinned by post-selection,
/// and the state is rebuilt by maximum-likelihood tomography.
pub fn denoiser_forward(
    params: &ParamVector,
    rho_in: &DensityMatrix,
    exact: bool,
    shots: u64,
    rng: &mut impl Rng,
) -> Result<DensityMatrix> {
    let compiled = CompiledCircuit::new(&CircuitConfig::ade(Readout::Tomography), params)?;
    let (out, success) = compiled.from_loaded(&purify(rho_in)?)?;
    let reduced = partial_trace(&DensityMatrix::from_pure(&out)?, &[1, 0])?;
    if exact {
        return Ok(reduced);
    }
    if shots == 0 {
        return Err(Error::invalid("shot count must be positive"));
    }
    let mut counts: TomographyCounts = [[0; 4]; 9];
    for (setting, row) in pauli_settings().iter().zip(counts.iter_mut()) {
        let accepted = Binomial::new(shots, success.clamp(0.0, 1.0))
            .map_err(|e| Error::invalid(format!("binomial: {e}")))?
            .sample(rng);
        if accepted == 0 {
            return Err(Error::NullPostSelection(success));
        }
        let probs = setting.probabilities(&reduced)?;
        let c = sample_counts(&probs, accepted, rng)?;
        row.copy_from_slice(&c);
    }
    mle_tomography(&counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Block;
    use crate::qcore::{max_abs_diff, uhlmann_fidelity, CMatrix, C64};
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn random_density(rng: &mut impl Rng) -> DensityMatrix {
        let a = CMatrix::from_fn(4, 4, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let m = &a * a.adjoint();
        let t = m.trace().re;
        DensityMatrix::new(m.unscale(t)).unwrap()
    }

    #[test]
    fn identity_params_relabel_pure_input() {
        // the identity circuit moves nothing, so the output is the (q1, q0)
        // marginal of the loaded purification
        let mut rng = rng_from_seed(1);
        let rho = random_density(&mut rng);
        let loaded = purify(&rho).unwrap();
        let expect = partial_trace(&DensityMatrix::from_pure(&loaded).unwrap(), &[1, 0]).unwrap();
        let got = denoiser_forward(&ParamVector::identity(), &rho, true, 0, &mut rng).unwrap();
        assert!(max_abs_diff(got.matrix(), expect.matrix()) < 1e-12);
    }

    #[test]
    fn outputs_are_valid_states() {
        let mut rng = rng_from_seed(2);
        for _ in 0..100 {
            let p = ParamVector::random_init(&mut rng);
            let rho = random_density(&mut rng);
            match denoiser_forward(&p, &rho, true, 0, &mut rng) {
                Ok(out) => {
                    assert!((out.trace() - 1.0).abs() < 1e-10);
                    assert!(out.eigenvalues()[0] >= -1e-9);
                }
                Err(Error::NullPostSelection(_)) => {}
                Err(e) => panic!("{e}"),
            }
        }
    }

    #[test]
    fn sampled_matches_exact() {
        let mut rng = rng_from_seed(3);
        let mut p = ParamVector::random_init(&mut rng);
        p.set_block(Block::Mcry, &[2.5, 2.8, 3.0, 2.9, 2.7, 3.1, 2.6]).unwrap();
        let rho = random_density(&mut rng);
        let exact = denoiser_forward(&p, &rho, true, 0, &mut rng).unwrap();
        let sampled = denoiser_forward(&p, &rho, false, 100_000, &mut rng).unwrap();
        assert!(uhlmann_fidelity(&exact, &sampled).unwrap() >= 0.99);
    }
}
