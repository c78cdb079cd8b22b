use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Rng};

/// Fully connected layer `y = W x + b`, weights row-major `outputs × inputs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub outputs: usize,
    pub inputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(outputs: usize, inputs: usize) -> Self {
        Self {
            outputs,
            inputs,
            weights: vec![0.0; outputs * inputs],
            bias: vec![0.0; outputs],
        }
    }

    /// Zero-mean Gaussian weights with the given variance, zero bias.
    pub fn gaussian(outputs: usize, inputs: usize, variance: f64, rng: &mut Rng) -> Self {
        let sd = variance.sqrt();
        let weights = (0..outputs * inputs).map(|_| rng::normal(rng) * sd).collect();
        Self {
            outputs,
            inputs,
            weights,
            bias: vec![0.0; outputs],
        }
    }

    pub fn n_params(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.inputs);
        self.weights
            .chunks_exact(self.inputs)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect()
    }

    /// Accumulates `dW += dy xᵀ`, `db += dy` into `grad` and returns `Wᵀ dy`.
    pub fn backward(&self, x: &[f64], dy: &[f64], grad: &mut Dense) -> Vec<f64> {
        let mut dx = vec![0.0; self.inputs];
        for (o, &g) in dy.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            grad.bias[o] += g;
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            let grow = &mut grad.weights[o * self.inputs..(o + 1) * self.inputs];
            for i in 0..self.inputs {
                grow[i] += g * x[i];
                dx[i] += g * row[i];
            }
        }
        dx
    }

    pub fn check_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|v| v.is_finite())
    }
}

/// Layer widths of the encoder: input → hidden₁ → hidden₂ → latent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input: usize,
    pub hidden1: usize,
    pub hidden2: usize,
    pub latent: usize,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            input: 15,
            hidden1: 256,
            hidden2: 128,
            latent: 20,
        }
    }
}

/// Two ReLU layers followed by a linear projection to the latent space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncoderParams {
    pub layer1: Dense,
    pub layer2: Dense,
    pub layer3: Dense,
}

/// Intermediate activations kept for the backward pass.
#[derive(Clone, Debug)]
pub struct EncoderTrace {
    pub x: Vec<f64>,
    pub pre1: Vec<f64>,
    pub h1: Vec<f64>,
    pub pre2: Vec<f64>,
    pub h2: Vec<f64>,
    pub z: Vec<f64>,
}

fn relu(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&a| a.max(0.0)).collect()
}

impl EncoderParams {
    pub fn zeros(arch: Architecture) -> Self {
        Self {
            layer1: Dense::zeros(arch.hidden1, arch.input),
            layer2: Dense::zeros(arch.hidden2, arch.hidden1),
            layer3: Dense::zeros(arch.latent, arch.hidden2),
        }
    }

    pub fn architecture(&self) -> Architecture {
        Architecture {
            input: self.layer1.inputs,
            hidden1: self.layer1.outputs,
            hidden2: self.layer2.outputs,
            latent: self.layer3.outputs,
        }
    }

    pub fn layers(&self) -> [&Dense; 3] {
        [&self.layer1, &self.layer2, &self.layer3]
    }

    pub fn layers_mut(&mut self) -> [&mut Dense; 3] {
        [&mut self.layer1, &mut self.layer2, &mut self.layer3]
    }

    pub fn n_params(&self) -> usize {
        self.layers().iter().map(|l| l.n_params()).sum()
    }

    pub fn forward_trace(&self, x: &[f64]) -> Result<EncoderTrace> {
        if x.len() != self.layer1.inputs {
            return Err(Error::Shape {
                what: "encoder input",
                expected: self.layer1.inputs,
                got: x.len(),
            });
        }
        let pre1 = self.layer1.forward(x);
        let h1 = relu(&pre1);
        let pre2 = self.layer2.forward(&h1);
        let h2 = relu(&pre2);
        let z = self.layer3.forward(&h2);
        Ok(EncoderTrace {
            x: x.to_vec(),
            pre1,
            h1,
            pre2,
            h2,
            z,
        })
    }

    /// Reverse-mode pass: accumulates parameter gradients for upstream `dz`.
    pub fn backward(&self, trace: &EncoderTrace, dz: &[f64], grad: &mut EncoderParams) {
        let dh2 = self.layer3.backward(&trace.h2, dz, &mut grad.layer3);
        let dpre2: Vec<f64> = dh2
            .iter()
            .zip(&trace.pre2)
            .map(|(g, &a)| if a > 0.0 { *g } else { 0.0 })
            .collect();
        let dh1 = self.layer2.backward(&trace.h1, &dpre2, &mut grad.layer2);
        let dpre1: Vec<f64> = dh1
            .iter()
            .zip(&trace.pre1)
            .map(|(g, &a)| if a > 0.0 { *g } else { 0.0 })
            .collect();
        self.layer1.backward(&trace.x, &dpre1, &mut grad.layer1);
    }

    /// Jacobian-vector product ∂z/∂x · v, exact away from ReLU kinks.
    pub fn jvp(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let t = self.forward_trace(x)?;
        let d1: Vec<f64> = (0..self.layer1.outputs)
            .map(|o| {
                if t.pre1[o] > 0.0 {
                    (0..self.layer1.inputs)
                        .map(|i| self.layer1.weights[o * self.layer1.inputs + i] * v[i])
                        .sum()
                } else {
                    0.0
                }
            })
            .collect();
        let d2: Vec<f64> = (0..self.layer2.outputs)
            .map(|o| {
                if t.pre2[o] > 0.0 {
                    (0..self.layer2.inputs)
                        .map(|i| self.layer2.weights[o * self.layer2.inputs + i] * d1[i])
                        .sum()
                } else {
                    0.0
                }
            })
            .collect();
        Ok((0..self.layer3.outputs)
            .map(|o| {
                (0..self.layer3.inputs)
                    .map(|i| self.layer3.weights[o * self.layer3.inputs + i] * d2[i])
                    .sum()
            })
            .collect())
    }
}
