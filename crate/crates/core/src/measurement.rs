//! Pauli basis enumeration, exact expectation vectors and the inverse
//! expansion ρ = 2⁻ⁿ Σ c_α P_α.
//!
//! Words are enumerated lexicographically with letter order I < X < Y < Z,
//! first qubit most significant. For two qubits the measurement vector drops
//! the leading `II` and reads
//!
//! ```text
//! IX IY IZ XI XX XY XZ YI YX YY YZ ZI ZX ZY ZZ
//! ```

use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{ComplexMatrix, DensityMatrix, C64, I, ONE, ZERO};

pub const N_QUBITS: usize = 2;
pub const N_OBSERVABLES: usize = 15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn matrix(self) -> ComplexMatrix {
        match self {
            Pauli::I => ComplexMatrix::identity(2),
            Pauli::X => ComplexMatrix::from_rows(&[[ZERO, ONE], [ONE, ZERO]]),
            Pauli::Y => ComplexMatrix::from_rows(&[[ZERO, -I], [I, ZERO]]),
            Pauli::Z => ComplexMatrix::from_rows(&[[ONE, ZERO], [ZERO, -ONE]]),
        }
    }

    pub fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Tensor product of single-qubit Paulis, qubit 0 first.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliWord(pub Vec<Pauli>);

impl PauliWord {
    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|&p| p == Pauli::I)
    }

    pub fn matrix(&self) -> ComplexMatrix {
        self.0
            .iter()
            .fold(ComplexMatrix::identity(1), |acc, p| acc.kron(&p.matrix()))
    }
}

impl fmt::Display for PauliWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|p| write!(f, "{}", p.letter()))
    }
}

/// All 4ⁿ Pauli words with their dense matrices, identity first.
pub fn pauli_basis(n: usize) -> Vec<(PauliWord, ComplexMatrix)> {
    let total = 4usize.pow(n as u32);
    (0..total)
        .map(|mut index| {
            let mut letters = vec![Pauli::I; n];
            for slot in (0..n).rev() {
                letters[slot] = Pauli::ALL[index % 4];
                index /= 4;
            }
            let word = PauliWord(letters);
            let m = word.matrix();
            (word, m)
        })
        .collect()
}

fn two_qubit_observables() -> &'static [(PauliWord, ComplexMatrix)] {
    static TABLE: OnceLock<Vec<(PauliWord, ComplexMatrix)>> = OnceLock::new();
    TABLE.get_or_init(|| pauli_basis(N_QUBITS).into_iter().skip(1).collect())
}

/// Canonical order of the fifteen two-qubit observables.
pub fn canonical_order() -> Vec<String> {
    two_qubit_observables()
        .iter()
        .map(|(w, _)| w.to_string())
        .collect()
}

/// Fifteen exact Pauli expectation values of a two-qubit state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MeasurementVector(pub Vec<f64>);

impl MeasurementVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() != N_OBSERVABLES {
            return Err(Error::Shape {
                what: "measurement vector",
                expected: N_OBSERVABLES,
                got: values.len(),
            });
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Tr(ρ P_α) for every non-identity two-qubit Pauli word.
pub fn expectations(rho: &DensityMatrix) -> Result<MeasurementVector> {
    if rho.dim() != 1 << N_QUBITS {
        return Err(Error::DimensionMismatch {
            expected: 1 << N_QUBITS,
            got: rho.dim(),
        });
    }
    Ok(MeasurementVector(expectations_of(rho.matrix())))
}

/// Expectations of an arbitrary 4×4 Hermitian operator; imaginary parts are
/// discarded.
pub(crate) fn expectations_of(m: &ComplexMatrix) -> Vec<f64> {
    two_qubit_observables()
        .iter()
        .map(|(_, p)| trace_product(m, p).re)
        .collect()
}

fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    let n = a.rows();
    let mut s = ZERO;
    for i in 0..n {
        for k in 0..n {
            s += a[(i, k)] * b[(k, i)];
        }
    }
    s
}

/// ρ = ¼ (I + Σ_α x_α P_α). Hermitian with unit trace, not necessarily PSD.
pub fn reconstruct(x: &MeasurementVector) -> Result<ComplexMatrix> {
    if x.0.len() != N_OBSERVABLES {
        return Err(Error::Shape {
            what: "measurement vector",
            expected: N_OBSERVABLES,
            got: x.0.len(),
        });
    }
    let d = 1 << N_QUBITS;
    let mut m = ComplexMatrix::identity(d);
    for (c, (_, p)) in x.0.iter().zip(two_qubit_observables()) {
        m.add_scaled(p, *c);
    }
    Ok(m.scale(1.0 / d as f64))
}
