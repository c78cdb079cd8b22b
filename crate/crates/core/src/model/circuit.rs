//! Hardware-efficient two-qubit ansatz and the density-matrix decoder.
//!
//! Each of the six layers applies RX, RY, RZ on both qubits and then a CNOT
//! with control qubit 0 and target qubit 1. Angle `3·(2ℓ + j) + r` drives
//! rotation `r ∈ {X, Y, Z}` on qubit `j` in layer `ℓ`. Qubit 0 is the
//! leftmost tensor factor. Rotations are `R_A(θ) = exp(−iθA/2)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{ComplexMatrix, DensityMatrix, C64, ONE, ZERO};

pub const N_LAYERS: usize = 6;
pub const N_ANGLES: usize = 36;
pub const N_NOISE: usize = 2;

/// How the decoder turns circuit parameters into a state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecoderMode {
    /// U(θ)·(I/4)·U(θ)†. Unitary conjugation fixes the maximally mixed
    /// state, so every θ decodes to I/4.
    PaperLiteral,
    /// U(θ)|00⟩ followed by trainable single-qubit depolarization on each
    /// qubit.
    Corrected,
}

impl DecoderMode {
    /// Width of the latent-to-circuit map output.
    pub fn n_circuit_params(self) -> usize {
        match self {
            DecoderMode::PaperLiteral => N_ANGLES,
            DecoderMode::Corrected => N_ANGLES + N_NOISE,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DecoderMode::PaperLiteral => "literal",
            DecoderMode::Corrected => "corrected",
        }
    }
}

impl std::str::FromStr for DecoderMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "literal" | "paper_literal" => Ok(DecoderMode::PaperLiteral),
            "corrected" => Ok(DecoderMode::Corrected),
            other => Err(Error::InvalidArgument(format!("unknown decoder mode {other:?}"))),
        }
    }
}

/// Rotation angles plus, in corrected mode, two noise logits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    pub angles: Vec<f64>,
    pub noise_logits: Option<[f64; 2]>,
}

impl CircuitParams {
    /// Splits a raw map output into angles and (optional) noise logits.
    pub fn from_raw(raw: &[f64], mode: DecoderMode) -> Result<Self> {
        if raw.len() != mode.n_circuit_params() {
            return Err(Error::Shape {
                what: "circuit parameters",
                expected: mode.n_circuit_params(),
                got: raw.len(),
            });
        }
        Ok(Self {
            angles: raw[..N_ANGLES].to_vec(),
            noise_logits: match mode {
                DecoderMode::PaperLiteral => None,
                DecoderMode::Corrected => Some([raw[N_ANGLES], raw[N_ANGLES + 1]]),
            },
        })
    }

    pub fn to_raw(&self) -> Vec<f64> {
        let mut v = self.angles.clone();
        if let Some(n) = self.noise_logits {
            v.extend_from_slice(&n);
        }
        v
    }

    pub fn mode(&self) -> DecoderMode {
        if self.noise_logits.is_some() {
            DecoderMode::Corrected
        } else {
            DecoderMode::PaperLiteral
        }
    }

    /// Depolarization probabilities σ(logits); zero in literal mode.
    pub fn noise_probabilities(&self) -> [f64; 2] {
        self.noise_logits
            .map(|[a, b]| [sigmoid(a), sigmoid(b)])
            .unwrap_or([0.0, 0.0])
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

type Gate2 = [[C64; 2]; 2];

pub fn rx(theta: f64) -> Gate2 {
    let (s, c) = (theta / 2.0).sin_cos();
    [[C64::new(c, 0.0), C64::new(0.0, -s)], [C64::new(0.0, -s), C64::new(c, 0.0)]]
}

pub fn ry(theta: f64) -> Gate2 {
    let (s, c) = (theta / 2.0).sin_cos();
    [[C64::new(c, 0.0), C64::new(-s, 0.0)], [C64::new(s, 0.0), C64::new(c, 0.0)]]
}

pub fn rz(theta: f64) -> Gate2 {
    let (s, c) = (theta / 2.0).sin_cos();
    [[C64::new(c, -s), ZERO], [ZERO, C64::new(c, s)]]
}

fn mul2(a: &Gate2, b: &Gate2) -> Gate2 {
    let mut out = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// R_Z(γ)·R_Y(β)·R_X(α).
pub fn euler_rotation(alpha: f64, beta: f64, gamma: f64) -> Gate2 {
    mul2(&rz(gamma), &mul2(&ry(beta), &rx(alpha)))
}

pub fn gate_matrix(g: &Gate2) -> ComplexMatrix {
    ComplexMatrix::from_rows(g)
}

pub fn cnot() -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(4, 4);
    m[(0, 0)] = ONE;
    m[(1, 1)] = ONE;
    m[(2, 3)] = ONE;
    m[(3, 2)] = ONE;
    m
}

fn layer_rotations(angles: &[f64], layer: usize) -> (Gate2, Gate2) {
    let base = |j: usize| 3 * (layer * 2 + j);
    let r0 = euler_rotation(angles[base(0)], angles[base(0) + 1], angles[base(0) + 2]);
    let r1 = euler_rotation(angles[base(1)], angles[base(1) + 1], angles[base(1) + 2]);
    (r0, r1)
}

fn check_angles(angles: &[f64]) -> Result<()> {
    if angles.len() != N_ANGLES {
        return Err(Error::Shape {
            what: "circuit angles",
            expected: N_ANGLES,
            got: angles.len(),
        });
    }
    Ok(())
}

/// The 4×4 ansatz unitary U(θ).
pub fn build_unitary(angles: &[f64]) -> Result<ComplexMatrix> {
    check_angles(angles)?;
    let cx = cnot();
    let mut u = ComplexMatrix::identity(4);
    for layer in 0..N_LAYERS {
        let (r0, r1) = layer_rotations(angles, layer);
        let local = gate_matrix(&r0).kron(&gate_matrix(&r1));
        u = cx.matmul(&local.matmul(&u));
    }
    Ok(u)
}

/// U(θ)|00⟩, evolved gate by gate on the state vector.
pub fn prepare_pure(angles: &[f64]) -> Result<[C64; 4]> {
    check_angles(angles)?;
    let mut psi = [ONE, ZERO, ZERO, ZERO];
    for layer in 0..N_LAYERS {
        let (r0, r1) = layer_rotations(angles, layer);
        // Qubit 0 pairs amplitudes (b, 2+b); qubit 1 pairs (2a, 2a+1).
        for b in 0..2 {
            let (x, y) = (psi[b], psi[2 + b]);
            psi[b] = r0[0][0] * x + r0[0][1] * y;
            psi[2 + b] = r0[1][0] * x + r0[1][1] * y;
        }
        for a in 0..2 {
            let (x, y) = (psi[2 * a], psi[2 * a + 1]);
            psi[2 * a] = r1[0][0] * x + r1[0][1] * y;
            psi[2 * a + 1] = r1[1][0] * x + r1[1][1] * y;
        }
        psi.swap(2, 3);
    }
    Ok(psi)
}

/// Replaces qubit `q` by I/2: `I/2 ⊗ Tr₀ρ` or `Tr₁ρ ⊗ I/2`.
pub fn fully_depolarize(m: &ComplexMatrix, qubit: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(4, 4);
    let idx = |q0: usize, q1: usize| 2 * q0 + q1;
    for a in 0..2 {
        for b in 0..2 {
            for c in 0..2 {
                for d in 0..2 {
                    let v = if qubit == 0 {
                        if a != c {
                            continue;
                        }
                        (m[(idx(0, b), idx(0, d))] + m[(idx(1, b), idx(1, d))]) * 0.5
                    } else {
                        if b != d {
                            continue;
                        }
                        (m[(idx(a, 0), idx(c, 0))] + m[(idx(a, 1), idx(c, 1))]) * 0.5
                    };
                    out[(idx(a, b), idx(c, d))] = v;
                }
            }
        }
    }
    out
}

/// Single-qubit depolarizing channel `(1 − p)ρ + p·Φ_q(ρ)` on qubit `q`.
pub fn depolarize(m: &ComplexMatrix, qubit: usize, p: f64) -> ComplexMatrix {
    let mut out = m.scale(1.0 - p);
    out.add_scaled(&fully_depolarize(m, qubit), p);
    out
}

/// Depolarizes qubit 0 with `p[0]`, then qubit 1 with `p[1]`.
pub fn product_depolarize(m: &ComplexMatrix, p: [f64; 2]) -> ComplexMatrix {
    depolarize(&depolarize(m, 0, p[0]), 1, p[1])
}

/// Circuit output for the given mode, as a raw matrix.
pub(crate) fn decode_matrix(theta: &CircuitParams) -> Result<ComplexMatrix> {
    match theta.noise_logits {
        None => {
            let u = build_unitary(&theta.angles)?;
            let rho0 = DensityMatrix::maximally_mixed(4);
            Ok(u.conjugate(rho0.matrix()).hermitian_part())
        }
        Some(_) => {
            let psi = prepare_pure(&theta.angles)?;
            let pure = ComplexMatrix::projector(&psi);
            Ok(product_depolarize(&pure, theta.noise_probabilities()).hermitian_part())
        }
    }
}

/// Decoded density matrix.
pub fn decode(theta: &CircuitParams) -> Result<DensityMatrix> {
    Ok(DensityMatrix::new_unchecked(decode_matrix(theta)?))
}
