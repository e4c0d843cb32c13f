use super::{hermitian_residual, CMatrix, Unitary, C64};
use crate::error::{Error, Result};

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct HermitianEig {
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector for `values[k]`.
    pub vectors: Unitary,
}

impl HermitianEig {
    /// `V diag(f(lambda)) V^dagger`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let v = self.vectors.matrix();
        let n = v.nrows();
        let mut scaled = v.clone();
        for (k, &lambda) in self.values.iter().enumerate() {
            let fk = f(lambda);
            for r in 0..n {
                scaled[(r, k)] *= fk;
            }
        }
        scaled * v.adjoint()
    }
}

/// Accepts matrices that are Hermitian within `1e-9`.
pub fn hermitian_eig(h: &CMatrix) -> Result<HermitianEig> {
    if h.nrows() != h.ncols() {
        return Err(Error::DimensionMismatch {
            expected: h.nrows(),
            got: h.ncols(),
        });
    }
    if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("Hermitian matrix"));
    }
    let asym = hermitian_residual(h);
    if asym > 1e-9 {
        return Err(Error::NotHermitian(asym));
    }
    let sym = (h + h.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();

    let n = h.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(HermitianEig {
        values,
        vectors: Unitary::new(vectors)?,
    })
}

/// Applies a real function to a Hermitian matrix through its spectrum.
pub fn hermitian_function(h: &CMatrix, f: impl Fn(f64) -> f64) -> Result<CMatrix> {
    Ok(hermitian_eig(h)?.reconstruct_with(f))
}

#[allow(dead_code)]
pub(crate) fn diag(values: &[f64]) -> CMatrix {
    let n = values.len();
    CMatrix::from_fn(n, n, |r, c| {
        if r == c {
            C64::new(values[r], 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::max_abs_diff;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    #[test]
    fn diagonal_input() {
        let h = diag(&[3.0, -1.0, 2.0]);
        let e = hermitian_eig(&h).unwrap();
        assert_eq!(e.values, vec![-1.0, 2.0, 3.0]);
        // eigenvectors form a permutation matrix
        for c in 0..3 {
            let col: Vec<f64> = (0..3).map(|r| e.vectors.entry(r, c).norm()).collect();
            assert_eq!(col.iter().filter(|x| (**x - 1.0).abs() < 1e-12).count(), 1);
        }
    }

    #[test]
    fn pauli_x_spectrum() {
        let o = C64::new(0.0, 0.0);
        let l = C64::new(1.0, 0.0);
        let x = CMatrix::from_row_slice(2, 2, &[o, l, l, o]);
        let e = hermitian_eig(&x).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn random_reconstruction() {
        let mut rng = rng_from_seed(11);
        for _ in 0..100 {
            let a = CMatrix::from_fn(4, 4, |_, _| {
                C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let h = &a + a.adjoint();
            let e = hermitian_eig(&h).unwrap();
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
            let back = e.reconstruct_with(|x| x);
            assert!(max_abs_diff(&back, &h) < 1e-8);
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut h = diag(&[1.0, 2.0]);
        h[(0, 1)] = C64::new(0.5, 0.0);
        assert!(matches!(hermitian_eig(&h), Err(Error::NotHermitian(_))));
    }
}
