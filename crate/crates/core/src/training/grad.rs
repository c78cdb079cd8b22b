use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    depolarize, fully_depolarize, sigmoid, CircuitParams, DecoderMode, EncoderTrace, ModelParams,
    N_ANGLES,
};
use crate::qcore::{herm_eig, ComplexMatrix, DensityMatrix, FidelityReference};

/// Eigenvalues of M below this are treated as zero in M^{−1/2}.
pub const INV_SQRT_FLOOR: f64 = 1e-12;
/// Central-difference step for circuit parameters.
pub const FD_STEP: f64 = 1e-5;

/// How derivatives of the decoded state with respect to the circuit
/// parameters are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradMethod {
    ShiftRule,
    FiniteDifference,
}

impl std::str::FromStr for GradMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shift" | "shift_rule" | "shift-rule" => Ok(GradMethod::ShiftRule),
            "fd" | "finite_difference" | "finite-difference" => Ok(GradMethod::FiniteDifference),
            other => Err(Error::InvalidArgument(format!("unknown gradient method {other:?}"))),
        }
    }
}

/// Fidelity together with its derivative in the second argument.
#[derive(Clone, Debug)]
pub struct FidelityGrad {
    pub fidelity: f64,
    pub grad: ComplexMatrix,
}

/// F(ρ, σ) and G = T·√ρ·M^{−1/2}·√ρ with M = √ρ σ √ρ, T = Tr M^{1/2}, so
/// that F(ρ, σ + δ) ≈ F(ρ, σ) + Re Tr(G δ).
pub fn fidelity_and_grad(reference: &FidelityReference, sigma: &ComplexMatrix) -> Result<FidelityGrad> {
    let spec = herm_eig(&reference.sandwich(sigma))?;
    let t: f64 = spec.values.iter().map(|m| m.max(0.0).sqrt()).sum();
    let inv_sqrt = spec.map(|m| if m > INV_SQRT_FLOOR { 1.0 / m.sqrt() } else { 0.0 });
    let s = reference.sqrt_rho();
    let grad = s.matmul(&inv_sqrt).matmul(s).scale(t).hermitian_part();
    Ok(FidelityGrad {
        fidelity: (t * t).clamp(0.0, 1.0),
        grad,
    })
}

/// Gradient of F(ρ_true, σ) with respect to σ at σ = ρ_pred.
pub fn fidelity_grad_pred(rho_true: &DensityMatrix, rho_pred: &DensityMatrix) -> Result<ComplexMatrix> {
    if rho_true.dim() != rho_pred.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho_true.dim(),
            got: rho_pred.dim(),
        });
    }
    let reference = FidelityReference::new(rho_true)?;
    Ok(fidelity_and_grad(&reference, rho_pred.matrix())?.grad)
}

fn decoded(raw: &[f64], mode: DecoderMode) -> Result<ComplexMatrix> {
    crate::model::decode(&CircuitParams::from_raw(raw, mode)?).map(DensityMatrix::into_matrix)
}

/// ∂L/∂θ for every raw circuit parameter, given the upstream ∂L/∂ρ.
pub fn circuit_grad(theta: &CircuitParams, upstream: &ComplexMatrix, method: GradMethod) -> Result<Vec<f64>> {
    let mode = theta.mode();
    let raw = theta.to_raw();
    let mut out = vec![0.0; raw.len()];
    if upstream.frobenius_norm() == 0.0 {
        return Ok(out);
    }
    match method {
        GradMethod::FiniteDifference => {
            for k in 0..raw.len() {
                let mut plus = raw.clone();
                plus[k] += FD_STEP;
                let mut minus = raw.clone();
                minus[k] -= FD_STEP;
                let d = &decoded(&plus, mode)? - &decoded(&minus, mode)?;
                out[k] = upstream.inner(&d) / (2.0 * FD_STEP);
            }
        }
        GradMethod::ShiftRule => {
            let shift = std::f64::consts::FRAC_PI_2;
            for k in 0..N_ANGLES {
                let mut plus = raw.clone();
                plus[k] += shift;
                let mut minus = raw.clone();
                minus[k] -= shift;
                let d = &decoded(&plus, mode)? - &decoded(&minus, mode)?;
                out[k] = 0.5 * upstream.inner(&d);
            }
            if let Some([l0, l1]) = theta.noise_logits {
                let psi = crate::model::prepare_pure(&theta.angles)?;
                let pure = ComplexMatrix::projector(&psi);
                let [p0, p1] = theta.noise_probabilities();
                let d0 = depolarize(&pure, 0, p0);
                let dp0 = depolarize(&(&fully_depolarize(&pure, 0) - &pure), 1, p1);
                let dp1 = &fully_depolarize(&d0, 1) - &d0;
                let (s0, s1) = (sigmoid(l0), sigmoid(l1));
                out[N_ANGLES] = upstream.inner(&dp0) * s0 * (1.0 - s0);
                out[N_ANGLES + 1] = upstream.inner(&dp1) * s1 * (1.0 - s1);
            }
        }
    }
    Ok(out)
}

/// Reverse-mode pass through W₄ and the encoder. Accumulates into `grad`
/// the parameter gradients for upstream `dz` (at the latent vector) and
/// `dtheta` (at the raw circuit parameters).
pub fn backprop_classical(
    trace: &EncoderTrace,
    params: &ModelParams,
    dz: &[f64],
    dtheta: &[f64],
    grad: &mut ModelParams,
) {
    let mut dz_total = params.latent_map.0.backward(&trace.z, dtheta, &mut grad.latent_map.0);
    for (a, b) in dz_total.iter_mut().zip(dz) {
        *a += b;
    }
    params.encoder.backward(trace, &dz_total, &mut grad.encoder);
}

/// ∂‖z_i − z_j‖/∂z_i. Zero at coincident points.
pub fn latent_distance_grad(zi: &[f64], zj: &[f64]) -> Vec<f64> {
    let d = super::loss::euclidean(zi, zj);
    if d == 0.0 {
        return vec![0.0; zi.len()];
    }
    zi.iter().zip(zj).map(|(a, b)| (a - b) / d).collect()
}
