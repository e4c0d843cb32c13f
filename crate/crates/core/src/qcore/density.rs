use super::{
    hermitian_eig, hermitian_residual, CMatrix, StateVector, C64, HERMITIAN_TOL, MAX_QUBITS,
    PSD_TOL, TRACE_TOL,
};
use crate::error::{Error, Result};

/// Hermitian, positive semidefinite, unit-trace matrix on `n` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    /// Validates `m`. Eigenvalues in `[-1e-9, 0)` are clamped to zero and
    /// the result renormalized; anything more negative is rejected.
    pub fn new(m: CMatrix) -> Result<Self> {
        let n = m.nrows();
        if n != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: m.ncols(),
            });
        }
        if !n.is_power_of_two() || n < 2 || n > 1 << MAX_QUBITS {
            return Err(Error::invalid(format!("density matrix dimension {n}")));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("density matrix"));
        }
        let asym = hermitian_residual(&m);
        if asym > HERMITIAN_TOL {
            return Err(Error::NotHermitian(asym));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::BadTrace(tr.re));
        }
        let eig = hermitian_eig(&m)?;
        let min = eig.values[0];
        if min < -PSD_TOL {
            return Err(Error::NotPsd(min));
        }
        if min < 0.0 {
            let clamped = eig.reconstruct_with(|x| x.max(0.0));
            let t = clamped.trace().re;
            return Ok(DensityMatrix(hermitize(&clamped.unscale(t))));
        }
        Ok(DensityMatrix(hermitize(&m)))
    }

    /// `|psi><psi|` for a normalized state.
    pub fn from_pure(state: &StateVector) -> Result<Self> {
        let s = state.normalized()?;
        Ok(DensityMatrix(s.outer()))
    }

    /// `I / dim`.
    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        if !dim.is_power_of_two() || dim < 2 || dim > 1 << MAX_QUBITS {
            return Err(Error::invalid(format!("density matrix dimension {dim}")));
        }
        Ok(DensityMatrix(
            CMatrix::identity(dim, dim).unscale(dim as f64),
        ))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn entry(&self, r: usize, c: usize) -> C64 {
        self.0[(r, c)]
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eig(&self.0)
            .expect("density matrices are Hermitian")
            .values
    }

    /// Diagonal of the matrix: computational-basis populations.
    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.0[(k, k)].re).collect()
    }

    /// Convex combination `(1 - w) self + w other`.
    pub fn mix(&self, other: &DensityMatrix, w: f64) -> Result<DensityMatrix> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::invalid(format!("mixing weight {w} outside [0, 1]")));
        }
        DensityMatrix::new(self.0.scale(1.0 - w) + other.0.scale(w))
    }
}

fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Traces out every qubit not listed in `keep`. `keep[0]` becomes the most
/// significant qubit of the reduced index.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let n = rho.n_qubits();
    let mut keep_mask = 0usize;
    for &q in keep {
        if q >= n || keep_mask & (1 << q) != 0 {
            return Err(Error::InvalidTargets(keep.to_vec()));
        }
        keep_mask |= 1 << q;
    }
    if keep.is_empty() || keep.len() == n {
        return Err(Error::InvalidTargets(keep.to_vec()));
    }
    let k = keep.len();
    let traced: Vec<usize> = (0..n).filter(|q| keep_mask & (1 << q) == 0).collect();

    let embed_kept = |r: usize| -> usize {
        (0..k)
            .filter(|m| (r >> (k - 1 - m)) & 1 == 1)
            .map(|m| 1 << keep[m])
            .sum()
    };
    let embed_traced = |t: usize| -> usize {
        traced
            .iter()
            .enumerate()
            .filter(|(m, _)| (t >> m) & 1 == 1)
            .map(|(_, q)| 1 << q)
            .sum()
    };
    let kept_offsets: Vec<usize> = (0..1 << k).map(embed_kept).collect();
    let traced_offsets: Vec<usize> = (0..1 << traced.len()).map(embed_traced).collect();

    let m = rho.matrix();
    let out = CMatrix::from_fn(1 << k, 1 << k, |r, c| {
        traced_offsets
            .iter()
            .map(|t| m[(kept_offsets[r] | t, kept_offsets[c] | t)])
            .sum()
    });
    DensityMatrix::new(hermitize(&out))
}

/// Purifies a two-qubit state living on `(q3, q1)` into a four-qubit pure
/// state, using `(q2, q0)` as the purifying register:
/// `|psi> = sum_i sqrt(lambda_i) |e_i>_(q3,q1) |i>_(q2,q0)`.
pub fn purify(rho: &DensityMatrix) -> Result<StateVector> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: rho.dim(),
        });
    }
    let eig = hermitian_eig(rho.matrix())?;
    if eig.values[0] < -PSD_TOL {
        return Err(Error::NotPsd(eig.values[0]));
    }
    let mut amps = vec![C64::new(0.0, 0.0); 16];
    // descending order so a pure input lands on purifier |00>
    for (i, k) in (0..4).rev().enumerate() {
        let weight = eig.values[k].max(0.0).sqrt();
        if weight == 0.0 {
            continue;
        }
        let (p2, p0) = (i >> 1, i & 1);
        for x in 0..4 {
            let (q3, q1) = (x >> 1, x & 1);
            let b = 8 * q3 + 4 * p2 + 2 * q1 + p0;
            amps[b] += eig.vectors.entry(x, k) * weight;
        }
    }
    StateVector::from_amplitudes(4, amps)?.normalized()
}

/// Uhlmann fidelity `(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`, clamped to `[0, 1]`.
pub fn uhlmann_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: sigma.dim(),
        });
    }
    let sqrt_rho = hermitian_eig(rho.matrix())?.reconstruct_with(|x| x.max(0.0).sqrt());
    let inner = &sqrt_rho * sigma.matrix() * &sqrt_rho;
    let eig = hermitian_eig(&hermitize(&inner))?;
    // rounding noise on null eigenvalues would otherwise survive the square root
    let root_sum: f64 = eig
        .values
        .iter()
        .filter(|x| **x > 1e-14)
        .map(|x| x.sqrt())
        .sum();
    Ok((root_sum * root_sum).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::max_abs_diff;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn random_density(rng: &mut impl Rng, dim: usize, rank: usize) -> DensityMatrix {
        let a = CMatrix::from_fn(dim, rank, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let m = &a * a.adjoint();
        let t = m.trace().re;
        DensityMatrix::new(m.unscale(t)).unwrap()
    }

    fn pure(amps: &[(usize, f64)], n: usize) -> StateVector {
        let mut v = vec![C64::new(0.0, 0.0); 1 << n];
        for &(i, a) in amps {
            v[i] = C64::new(a, 0.0);
        }
        StateVector::from_amplitudes(n, v).unwrap().normalized().unwrap()
    }

    /// Explicit bit-by-bit index sum, kept independent of `partial_trace`.
    fn trace_oracle(rho: &CMatrix, keep: [usize; 2]) -> CMatrix {
        let mut out = CMatrix::zeros(4, 4);
        for row in 0..16usize {
            for col in 0..16usize {
                let same_traced = (0..4)
                    .filter(|q| !keep.contains(q))
                    .all(|q| (row >> q) & 1 == (col >> q) & 1);
                if !same_traced {
                    continue;
                }
                let r = 2 * ((row >> keep[0]) & 1) + ((row >> keep[1]) & 1);
                let c = 2 * ((col >> keep[0]) & 1) + ((col >> keep[1]) & 1);
                out[(r, c)] += rho[(row, col)];
            }
        }
        out
    }

    #[test]
    fn rejects_invalid_matrices() {
        let mut m = CMatrix::identity(4, 4).unscale(4.0);
        m[(0, 1)] = C64::new(0.1, 0.0);
        assert!(matches!(DensityMatrix::new(m), Err(Error::NotHermitian(_))));
        let m = CMatrix::identity(4, 4).unscale(2.0);
        assert!(matches!(DensityMatrix::new(m), Err(Error::BadTrace(_))));
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = C64::new(1.5, 0.0);
        m[(1, 1)] = C64::new(-0.5, 0.0);
        assert!(matches!(DensityMatrix::new(m), Err(Error::NotPsd(_))));
    }

    #[test]
    fn clamps_tiny_negative_eigenvalues() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = C64::new(1.0 + 5e-10, 0.0);
        m[(1, 1)] = C64::new(-5e-10, 0.0);
        let d = DensityMatrix::new(m).unwrap();
        assert!(d.eigenvalues()[0] >= 0.0);
        assert!((d.trace() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn product_state_partial_trace() {
        // |00><00| on (q3,q2) times |01><01| on (q1,q0)
        let psi = StateVector::basis(4, 0b0001).unwrap();
        let rho = DensityMatrix::from_pure(&psi).unwrap();
        let low = partial_trace(&rho, &[1, 0]).unwrap();
        assert!((low.entry(1, 1).re - 1.0).abs() < 1e-15);
        let high = partial_trace(&rho, &[3, 2]).unwrap();
        assert!((high.entry(0, 0).re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bell_pair_reduces_to_mixed() {
        // Bell pair on (q3, q1), |00> on (q2, q0): (|0000> + |1010>)/sqrt2
        let psi = pure(&[(0b0000, 1.0), (0b1010, 1.0)], 4);
        let rho = DensityMatrix::from_pure(&psi).unwrap();
        let red = partial_trace(&rho, &[1, 0]).unwrap();
        let oracle = trace_oracle(rho.matrix(), [1, 0]);
        assert!(max_abs_diff(red.matrix(), &oracle) < 1e-12);
        assert!((red.entry(0, 0).re - 0.5).abs() < 1e-12);
        assert!((red.entry(2, 2).re - 0.5).abs() < 1e-12);
        assert!(red.entry(0, 2).norm() < 1e-12);
    }

    #[test]
    fn partial_trace_matches_oracle_on_random_states() {
        let mut rng = rng_from_seed(3);
        let pairs = [[1, 0], [3, 2], [3, 1], [0, 2], [2, 3]];
        for k in 0..100 {
            let rho = random_density(&mut rng, 16, 1 + k % 16);
            let keep = pairs[k % pairs.len()];
            let red = partial_trace(&rho, &keep).unwrap();
            assert!((red.trace() - 1.0).abs() < 1e-12);
            assert!(max_abs_diff(red.matrix(), &trace_oracle(rho.matrix(), keep)) < 1e-12);
        }
    }

    #[test]
    fn partial_trace_rejects_bad_keep() {
        let rho = DensityMatrix::maximally_mixed(16).unwrap();
        assert!(partial_trace(&rho, &[1, 1]).is_err());
        assert!(partial_trace(&rho, &[4, 0]).is_err());
    }

    #[test]
    fn purify_pure_input_uses_zero_purifier() {
        // |10> on (q3, q1)
        let mut m = CMatrix::zeros(4, 4);
        m[(2, 2)] = C64::new(1.0, 0.0);
        let rho = DensityMatrix::new(m).unwrap();
        let psi = purify(&rho).unwrap();
        // q3 = 1, q1 = 0, purifier (q2, q0) = 00 -> index 8
        assert!((psi.amp(8).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn purify_maximally_mixed_has_uniform_schmidt() {
        let rho = DensityMatrix::maximally_mixed(4).unwrap();
        let psi = purify(&rho).unwrap();
        let full = DensityMatrix::from_pure(&psi).unwrap();
        let purifier = partial_trace(&full, &[2, 0]).unwrap();
        for v in purifier.eigenvalues() {
            assert!((v - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn purify_round_trips() {
        let mut rng = rng_from_seed(5);
        for k in 0..100 {
            let rho = random_density(&mut rng, 4, 1 + k % 4);
            let psi = purify(&rho).unwrap();
            let back = partial_trace(&DensityMatrix::from_pure(&psi).unwrap(), &[3, 1]).unwrap();
            assert!(max_abs_diff(back.matrix(), rho.matrix()) < 1e-9);
        }
    }

    #[test]
    fn fidelity_examples() {
        let mut rng = rng_from_seed(9);
        let rho = random_density(&mut rng, 4, 3);
        assert!((uhlmann_fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-9);

        let a = DensityMatrix::from_pure(&StateVector::basis(2, 0).unwrap()).unwrap();
        let b = DensityMatrix::from_pure(&StateVector::basis(2, 3).unwrap()).unwrap();
        assert!(uhlmann_fidelity(&a, &b).unwrap() < 1e-12);

        let mixed = DensityMatrix::maximally_mixed(4).unwrap();
        assert!((uhlmann_fidelity(&mixed, &a).unwrap() - 0.25).abs() < 1e-9);
    }

    #[test]
    fn fidelity_symmetric_and_pure_overlap() {
        let mut rng = rng_from_seed(10);
        for _ in 0..50 {
            let r = random_density(&mut rng, 4, 2);
            let s = random_density(&mut rng, 4, 4);
            let f1 = uhlmann_fidelity(&r, &s).unwrap();
            let f2 = uhlmann_fidelity(&s, &r).unwrap();
            assert!((f1 - f2).abs() < 1e-9);

            let rand_state = |rng: &mut crate::rng::SimRng| {
                let v = (0..4)
                    .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                    .collect();
                StateVector::from_amplitudes(2, v).unwrap().normalized().unwrap()
            };
            let p = rand_state(&mut rng);
            let q = rand_state(&mut rng);
            let f = uhlmann_fidelity(
                &DensityMatrix::from_pure(&p).unwrap(),
                &DensityMatrix::from_pure(&q).unwrap(),
            )
            .unwrap();
            assert!((f - p.inner(&q).norm_sqr()).abs() < 1e-9);
        }
    }

    #[test]
    fn fidelity_dim_mismatch() {
        let a = DensityMatrix::maximally_mixed(4).unwrap();
        let b = DensityMatrix::maximally_mixed(16).unwrap();
        assert!(uhlmann_fidelity(&a, &b).is_err());
    }
}
