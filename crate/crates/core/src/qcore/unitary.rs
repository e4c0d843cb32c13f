use super::{max_abs_diff, CMatrix, C64, UNITARY_TOL};
use crate::error::{Error, Result};

/// A square matrix checked to satisfy `U^dagger U = I` on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct Unitary(CMatrix);

impl Unitary {
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("unitary entries"));
        }
        let residual = unitarity_residual(&m);
        if residual > UNITARY_TOL {
            return Err(Error::NotUnitary(residual));
        }
        Ok(Unitary(m))
    }

    /// Wraps a matrix that is unitary by construction (products and
    /// Kronecker products of checked unitaries). Checked in debug builds.
    pub(crate) fn new_unchecked(m: CMatrix) -> Self {
        debug_assert!(unitarity_residual(&m) < 1e-9);
        Unitary(m)
    }

    pub fn identity(dim: usize) -> Self {
        Unitary(CMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn adjoint(&self) -> Unitary {
        Unitary(self.0.adjoint())
    }

    /// Matrix product `self * rhs` (apply `rhs` first).
    pub fn compose(&self, rhs: &Unitary) -> Result<Unitary> {
        if self.dim() != rhs.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: rhs.dim(),
            });
        }
        Ok(Unitary::new_unchecked(&self.0 * &rhs.0))
    }

    pub fn kron(&self, rhs: &Unitary) -> Unitary {
        Unitary::new_unchecked(self.0.kronecker(&rhs.0))
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.0[(row, col)]
    }
}

/// `max |U^dagger U - I|` entrywise.
pub fn unitarity_residual(m: &CMatrix) -> f64 {
    let n = m.nrows();
    max_abs_diff(&(m.adjoint() * m), &CMatrix::identity(n, n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_unitary() {
        let mut m = CMatrix::identity(2, 2);
        m[(0, 0)] = C64::new(2.0, 0.0);
        assert!(matches!(Unitary::new(m), Err(Error::NotUnitary(_))));
    }

    #[test]
    fn rejects_non_square() {
        let m = CMatrix::zeros(2, 3);
        assert!(Unitary::new(m).is_err());
    }
}
