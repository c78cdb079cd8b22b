//! Uhlmann fidelity and the two Bures distances derived from it.

use super::density::{sqrt_psd, DensityMatrix};
use super::eig::herm_eig;
use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

/// Diagonal shift applied to the first argument before its square root.
pub const FIDELITY_REGULARIZER: f64 = 1e-12;

/// `(ρ + εI) / (1 + dε)`
pub fn regularize(rho: &DensityMatrix) -> ComplexMatrix {
    let d = rho.dim();
    let mut m = rho.matrix().clone();
    for i in 0..d {
        m[(i, i)].re += FIDELITY_REGULARIZER;
    }
    m.scale(1.0 / (1.0 + d as f64 * FIDELITY_REGULARIZER))
}

/// √ρ of the regularized first argument. Reusable across many fidelity
/// evaluations against the same reference state.
#[derive(Clone, Debug)]
pub struct FidelityReference {
    sqrt_rho: ComplexMatrix,
}

impl FidelityReference {
    pub fn new(rho: &DensityMatrix) -> Result<Self> {
        Ok(Self {
            sqrt_rho: sqrt_psd(&regularize(rho))?,
        })
    }

    pub fn sqrt_rho(&self) -> &ComplexMatrix {
        &self.sqrt_rho
    }

    /// M = √ρ σ √ρ, Hermitized.
    pub fn sandwich(&self, sigma: &ComplexMatrix) -> ComplexMatrix {
        self.sqrt_rho
            .matmul(sigma)
            .matmul(&self.sqrt_rho)
            .hermitian_part()
    }

    pub fn fidelity(&self, sigma: &DensityMatrix) -> Result<f64> {
        if sigma.dim() != self.sqrt_rho.rows() {
            return Err(Error::DimensionMismatch {
                expected: self.sqrt_rho.rows(),
                got: sigma.dim(),
            });
        }
        let mu = herm_eig(&self.sandwich(sigma.matrix()))?.values;
        // Eigenvalues at rounding level are zero; their square roots would
        // otherwise add ~1e-8 to the trace.
        let top = mu.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let noise = top * mu.len() as f64 * f64::EPSILON;
        let root_sum: f64 = mu.iter().filter(|&&m| m > noise).map(|m| m.sqrt()).sum();
        Ok((root_sum * root_sum).clamp(0.0, 1.0))
    }
}

/// Uhlmann fidelity F(ρ, σ) = (Tr √(√ρ σ √ρ))², clipped to [0, 1].
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: sigma.dim(),
        });
    }
    FidelityReference::new(rho)?.fidelity(sigma)
}

/// arccos √F, in [0, π/2].
pub fn bures_angle_from_fidelity(f: f64) -> f64 {
    f.clamp(0.0, 1.0).sqrt().clamp(0.0, 1.0).acos()
}

/// √(2 − 2√F), in [0, √2].
pub fn bures_length_from_fidelity(f: f64) -> f64 {
    let root = f.clamp(0.0, 1.0).sqrt();
    (2.0 - 2.0 * root).max(0.0).sqrt()
}

/// Bures angle arccos √F(ρ, σ). This is the distance used by the losses
/// and the latent-geometry reports.
pub fn bures_angle(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    fidelity(rho, sigma).map(bures_angle_from_fidelity)
}

/// Bures length √(2 − 2√F(ρ, σ)).
pub fn bures_length(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    fidelity(rho, sigma).map(bures_length_from_fidelity)
}
