//! Dense complex linear algebra and quantum-information primitives.

mod density;
mod eig;
mod matrix;
mod metrics;

pub use density::{
    apply_kraus, project_to_physical, purity, sqrt_psd, validate, DensityMatrix, HERMITIAN_TOL,
    PSD_TOL, TRACE_TOL,
};
pub use eig::{herm_eig, herm_eigenvalues, Spectrum};
pub use matrix::{tensor, ComplexMatrix, C64, I, ONE, ZERO};
pub use metrics::{
    bures_angle, bures_angle_from_fidelity, bures_length, bures_length_from_fidelity, fidelity,
    regularize, FidelityReference, FIDELITY_REGULARIZER,
};
