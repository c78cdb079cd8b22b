use serde::{Deserialize, Serialize};

use super::eig::herm_eig;
use super::matrix::{ComplexMatrix, C64};
use crate::error::{Error, Result};

pub const TRACE_TOL: f64 = 1e-9;
pub const HERMITIAN_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-10;

/// A Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ComplexMatrix", into = "ComplexMatrix")]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    /// Validates `m` against the trace, Hermiticity and positivity tolerances.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        validate(&m)?;
        Ok(Self(m))
    }

    /// Wraps a matrix known to be valid by construction.
    pub(crate) fn new_unchecked(m: ComplexMatrix) -> Self {
        debug_assert!(m.is_square());
        Self(m)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim).scale(1.0 / dim as f64))
    }

    /// Pure state |v⟩⟨v| after normalizing `v`.
    pub fn pure(v: &[C64]) -> Result<Self> {
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Degenerate("zero state vector".into()));
        }
        let unit: Vec<C64> = v.iter().map(|z| z / norm).collect();
        Ok(Self(ComplexMatrix::projector(&unit)))
    }

    /// Computational basis projector |index⟩⟨index|.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut m = ComplexMatrix::zeros(dim, dim);
        m[(index, index)] = C64::new(1.0, 0.0);
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn purity(&self) -> f64 {
        purity(self)
    }
}

impl TryFrom<ComplexMatrix> for DensityMatrix {
    type Error = Error;
    fn try_from(m: ComplexMatrix) -> Result<Self> {
        Self::new(m)
    }
}

impl From<DensityMatrix> for ComplexMatrix {
    fn from(d: DensityMatrix) -> Self {
        d.0
    }
}

impl AsRef<ComplexMatrix> for DensityMatrix {
    fn as_ref(&self) -> &ComplexMatrix {
        &self.0
    }
}

/// Checks the density-matrix invariants.
pub fn validate(m: &ComplexMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    if m.as_slice().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    let herm = m.hermiticity_error();
    if herm > HERMITIAN_TOL {
        return Err(Error::NotHermitian(herm));
    }
    let tr = m.trace();
    if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
        return Err(Error::InvalidTrace(tr.re));
    }
    let min = herm_eig(m)?.min();
    if min < -PSD_TOL {
        return Err(Error::NotPositive(min));
    }
    Ok(())
}

/// Tr(ρ²).
pub fn purity(rho: &DensityMatrix) -> f64 {
    // Tr(ρ²) = Σ_ij ρ_ij ρ_ji = Σ_ij |ρ_ij|² for Hermitian ρ.
    rho.matrix().as_slice().iter().map(|z| z.norm_sqr()).sum()
}

/// Principal square root of a PSD matrix, negative eigenvalues clipped to 0.
pub fn sqrt_psd(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(herm_eig(m)?.map(|l| l.max(0.0).sqrt()))
}

/// Hermitizes, clips negative eigenvalues and renormalizes the trace.
pub fn project_to_physical(m: &ComplexMatrix) -> Result<DensityMatrix> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let spec = herm_eig(&m.hermitian_part())?;
    let total: f64 = spec.values.iter().map(|l| l.max(0.0)).sum();
    if total <= 0.0 || !total.is_finite() {
        return Err(Error::Degenerate(
            "no positive spectral weight left after clipping".into(),
        ));
    }
    let out = spec.map(|l| l.max(0.0) / total).hermitian_part();
    Ok(DensityMatrix::new_unchecked(out))
}

/// Applies the channel ρ ↦ Σ K ρ K†.
pub fn apply_kraus(rho: &DensityMatrix, kraus: &[ComplexMatrix]) -> Result<DensityMatrix> {
    let d = rho.dim();
    let mut completeness = ComplexMatrix::zeros(d, d);
    for k in kraus {
        if k.rows() != d || k.cols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: k.rows(),
            });
        }
        completeness = &completeness + &k.adjoint().matmul(k);
    }
    let dev = completeness.max_abs_diff(&ComplexMatrix::identity(d));
    if dev > 1e-9 {
        return Err(Error::NotTracePreserving(dev));
    }
    let mut out = ComplexMatrix::zeros(d, d);
    for k in kraus {
        out = &out + &k.conjugate(rho.matrix());
    }
    Ok(DensityMatrix::new_unchecked(out.hermitian_part()))
}
