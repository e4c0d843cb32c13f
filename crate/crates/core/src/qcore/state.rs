use super::{CMatrix, Unitary, C64, MAX_QUBITS};
use crate::error::{Error, Result};

/// Pure state of an `n`-qubit register (`2 <= n <= 6`).
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<C64>,
}

fn check_qubits(n: usize) -> Result<()> {
    if !(2..=MAX_QUBITS).contains(&n) {
        return Err(Error::invalid(format!(
            "register size {n} outside supported range 2..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

impl StateVector {
    /// `|0...0>`.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = 1 << n_qubits;
        if index >= dim {
            return Err(Error::invalid(format!(
                "basis index {index} out of range for {n_qubits} qubits"
            )));
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[index] = C64::new(1.0, 0.0);
        Ok(StateVector { n_qubits, amps })
    }

    /// Wraps raw amplitudes without normalizing them.
    pub fn from_amplitudes(n_qubits: usize, amps: Vec<C64>) -> Result<Self> {
        check_qubits(n_qubits)?;
        if amps.len() != 1 << n_qubits {
            return Err(Error::DimensionMismatch {
                expected: 1 << n_qubits,
                got: amps.len(),
            });
        }
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("state amplitudes"));
        }
        Ok(StateVector { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn amp(&self, index: usize) -> C64 {
        self.amps[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol
    }

    /// Returns the state divided by its norm.
    pub fn normalized(&self) -> Result<Self> {
        let n2 = self.norm_sqr();
        if n2 <= 1e-300 {
            return Err(Error::invalid("cannot normalize the zero vector"));
        }
        let s = 1.0 / n2.sqrt();
        Ok(StateVector {
            n_qubits: self.n_qubits,
            amps: self.amps.iter().map(|z| z * s).collect(),
        })
    }

    /// Basis-state probabilities `|amp_b|^2`.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|z| z.norm_sqr()).collect()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `|psi><psi|` as a dense matrix.
    pub fn outer(&self) -> CMatrix {
        let n = self.dim();
        CMatrix::from_fn(n, n, |r, c| self.amps[r] * self.amps[c].conj())
    }

    /// Multiplies each amplitude by the matching entry of `factors`.
    pub fn scale_diagonal(&self, factors: &[f64]) -> Result<Self> {
        if factors.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: factors.len(),
            });
        }
        Ok(StateVector {
            n_qubits: self.n_qubits,
            amps: self
                .amps
                .iter()
                .zip(factors)
                .map(|(a, f)| a * *f)
                .collect(),
        })
    }

    /// Applies `gate` to the listed qubits. `targets[0]` is the most
    /// significant qubit of the gate's own index.
    pub fn apply_gate(&self, gate: &Unitary, targets: &[usize]) -> Result<Self> {
        let k = targets.len();
        if k == 0 || gate.dim() != 1 << k {
            return Err(Error::DimensionMismatch {
                expected: 1 << k,
                got: gate.dim(),
            });
        }
        let mut mask = 0usize;
        for &t in targets {
            if t >= self.n_qubits || mask & (1 << t) != 0 {
                return Err(Error::InvalidTargets(targets.to_vec()));
            }
            mask |= 1 << t;
        }

        let sub = 1usize << k;
        // offset of each gate-local basis state within the full index
        let offsets: Vec<usize> = (0..sub)
            .map(|s| {
                (0..k)
                    .filter(|m| (s >> (k - 1 - m)) & 1 == 1)
                    .map(|m| 1 << targets[m])
                    .sum()
            })
            .collect();
        let g = gate.matrix();
        let mut out = vec![C64::new(0.0, 0.0); self.dim()];
        let mut gathered = vec![C64::new(0.0, 0.0); sub];
        for base in (0..self.dim()).filter(|b| b & mask == 0) {
            for (s, off) in offsets.iter().enumerate() {
                gathered[s] = self.amps[base | off];
            }
            for (r, off) in offsets.iter().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for (s, a) in gathered.iter().enumerate() {
                    acc += g[(r, s)] * a;
                }
                out[base | off] = acc;
            }
        }
        Ok(StateVector {
            n_qubits: self.n_qubits,
            amps: out,
        })
    }
}

/// Free-function form of [`StateVector::apply_gate`].
pub fn apply_gate(state: &StateVector, gate: &Unitary, targets: &[usize]) -> Result<StateVector> {
    state.apply_gate(gate, targets)
}
