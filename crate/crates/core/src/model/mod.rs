//! Hybrid autoencoder: MLP encoder, affine latent-to-circuit map and
//! parameterized-circuit decoder with Pauli readout.
//!
//! ```text
//! x ∈ ℝ¹⁵ ─encode→ z ∈ ℝ²⁰ ─W₄z+b₄→ θ ─decode→ ρ_pred ─Tr(ρP)→ x̂ ∈ ℝ¹⁵
//! ```

mod circuit;
mod encoder;

pub use circuit::{
    build_unitary, cnot, decode, depolarize, euler_rotation, fully_depolarize, gate_matrix,
    prepare_pure, product_depolarize, rx, ry, rz, sigmoid, CircuitParams, DecoderMode, N_ANGLES,
    N_LAYERS, N_NOISE,
};
pub use encoder::{Architecture, Dense, EncoderParams, EncoderTrace};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::{expectations_of, MeasurementVector};
use crate::qcore::DensityMatrix;
use crate::rng::Rng;

/// Latent coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatentVector(pub Vec<f64>);

/// Affine map θ = W₄ z + b₄.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatentMapParams(pub Dense);

/// All trainable parameters plus the decoder mode they were built for.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub encoder: EncoderParams,
    pub latent_map: LatentMapParams,
    pub mode: DecoderMode,
}

/// Everything produced by one forward pass.
#[derive(Clone, Debug)]
pub struct ForwardOutput {
    pub z: LatentVector,
    pub theta: CircuitParams,
    pub rho_pred: DensityMatrix,
    pub x_hat: MeasurementVector,
}

pub fn encode(x: &MeasurementVector, p: &EncoderParams) -> Result<LatentVector> {
    Ok(LatentVector(p.forward_trace(x.as_slice())?.z))
}

pub fn latent_to_params(
    z: &LatentVector,
    m: &LatentMapParams,
    mode: DecoderMode,
) -> Result<CircuitParams> {
    if z.0.len() != m.0.inputs {
        return Err(Error::Shape {
            what: "latent vector",
            expected: m.0.inputs,
            got: z.0.len(),
        });
    }
    CircuitParams::from_raw(&m.0.forward(&z.0), mode)
}

pub fn forward(x: &MeasurementVector, p: &ModelParams) -> Result<ForwardOutput> {
    let z = encode(x, &p.encoder)?;
    let theta = latent_to_params(&z, &p.latent_map, p.mode)?;
    let rho_pred = decode(&theta)?;
    let x_hat = MeasurementVector(expectations_of(rho_pred.matrix()));
    Ok(ForwardOutput {
        z,
        theta,
        rho_pred,
        x_hat,
    })
}

/// He-normal weights for the encoder, variance 1/latent for W₄, zero biases.
pub fn init_params(rng: &mut Rng, mode: DecoderMode, arch: Architecture) -> ModelParams {
    let he = |fan_in: usize| 2.0 / fan_in as f64;
    let encoder = EncoderParams {
        layer1: Dense::gaussian(arch.hidden1, arch.input, he(arch.input), rng),
        layer2: Dense::gaussian(arch.hidden2, arch.hidden1, he(arch.hidden1), rng),
        layer3: Dense::gaussian(arch.latent, arch.hidden2, he(arch.hidden2), rng),
    };
    let latent_map = LatentMapParams(Dense::gaussian(
        mode.n_circuit_params(),
        arch.latent,
        1.0 / arch.latent as f64,
        rng,
    ));
    ModelParams {
        encoder,
        latent_map,
        mode,
    }
}

impl ModelParams {
    pub fn zeros(arch: Architecture, mode: DecoderMode) -> Self {
        Self {
            encoder: EncoderParams::zeros(arch),
            latent_map: LatentMapParams(Dense::zeros(mode.n_circuit_params(), arch.latent)),
            mode,
        }
    }

    pub fn architecture(&self) -> Architecture {
        self.encoder.architecture()
    }

    /// Layers in storage order W1,b1,W2,b2,W3,b3,W4,b4.
    pub fn layers(&self) -> [&Dense; 4] {
        let [a, b, c] = self.encoder.layers();
        [a, b, c, &self.latent_map.0]
    }

    pub fn layers_mut(&mut self) -> [&mut Dense; 4] {
        let [a, b, c] = self.encoder.layers_mut();
        [a, b, c, &mut self.latent_map.0]
    }

    pub fn n_params(&self) -> usize {
        self.layers().iter().map(|l| l.n_params()).sum()
    }

    /// Flattened parameters, row-major per tensor, in storage order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for layer in self.layers() {
            out.extend_from_slice(&layer.weights);
            out.extend_from_slice(&layer.bias);
        }
        out
    }

    /// Inverse of [`flatten`](Self::flatten) for a known shape.
    pub fn unflatten(arch: Architecture, mode: DecoderMode, flat: &[f64]) -> Result<Self> {
        let mut params = Self::zeros(arch, mode);
        if flat.len() != params.n_params() {
            return Err(Error::Shape {
                what: "flattened parameters",
                expected: params.n_params(),
                got: flat.len(),
            });
        }
        let mut offset = 0;
        for layer in params.layers_mut() {
            let w = layer.weights.len();
            layer.weights.copy_from_slice(&flat[offset..offset + w]);
            offset += w;
            let b = layer.bias.len();
            layer.bias.copy_from_slice(&flat[offset..offset + b]);
            offset += b;
        }
        Ok(params)
    }

    pub fn l2_norm(&self) -> f64 {
        self.layers()
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias))
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }
}
