//! Validated operator wrappers.

use super::eigen::{eigh, eigh_unchecked, Eigen};
use super::matrix::{ComplexMatrix, C64};
use crate::error::{AqpuError, Result};

/// Hermitian matrix checked at construction (max-entry defect ≤ 1e−12).
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    matrix: ComplexMatrix,
}

impl HermitianOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(AqpuError::Dimension("Hermitian operator must be square".into()));
        }
        if !matrix.is_finite() {
            return Err(AqpuError::NonFinite("Hermitian operator".into()));
        }
        let defect = matrix.hermiticity_defect();
        if defect > 1e-12 * matrix.max_abs().max(1.0) {
            return Err(AqpuError::NotHermitian(defect));
        }
        Ok(Self { matrix: matrix.hermitian_part() })
    }

    pub fn zero(dim: usize) -> Self {
        Self { matrix: ComplexMatrix::zeros(dim, dim) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn eigen(&self) -> Eigen {
        eigh_unchecked(&self.matrix)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { matrix: self.matrix.scale_real(s) }
    }

    /// τ·‖H‖∞ style quantities need the spectral radius.
    pub fn op_norm(&self) -> f64 {
        let e = self.eigen();
        e.values.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
    }

    /// (λ_max − λ_min) of the spectrum.
    pub fn spectral_spread(&self) -> f64 {
        let e = self.eigen();
        match (e.values.first(), e.values.last()) {
            (Some(lo), Some(hi)) => hi - lo,
            _ => 0.0,
        }
    }
}

/// A possibly unnormalised density operator with its trace recorded as `weight`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    weight: f64,
}

pub const DENSITY_HERMITIAN_TOL: f64 = 1e-10;
pub const DENSITY_NEGATIVITY_TOL: f64 = 1e-9;

impl DensityMatrix {
    /// Validates Hermiticity, positivity (within −1e−9) and a trace in [0, 1].
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(AqpuError::Dimension("density matrix must be square".into()));
        }
        if !matrix.is_finite() {
            return Err(AqpuError::NonFinite("density matrix".into()));
        }
        let defect = matrix.hermiticity_defect();
        if defect > DENSITY_HERMITIAN_TOL {
            return Err(AqpuError::NotHermitian(defect));
        }
        let weight = matrix.trace().re;
        if !(-1e-10..=1.0 + 1e-10).contains(&weight) {
            return Err(AqpuError::InvalidState(format!("trace {weight} outside [0, 1]")));
        }
        let e = eigh_unchecked(&matrix.hermitian_part());
        if let Some(&min) = e.values.first() {
            if min < -DENSITY_NEGATIVITY_TOL {
                return Err(AqpuError::InvalidState(format!("negative eigenvalue {min}")));
            }
        }
        Ok(Self { matrix, weight: weight.clamp(0.0, 1.0) })
    }

    /// Skips the positivity check; used for solver output that was validated in aggregate.
    pub(crate) fn from_trusted(matrix: ComplexMatrix) -> Self {
        let weight = matrix.trace().re;
        Self { matrix, weight }
    }

    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(AqpuError::InvalidState(format!("state vector norm² {norm} ≠ 1")));
        }
        Self::new(ComplexMatrix::outer(psi, psi))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self::from_trusted(ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64))
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// ρ / tr ρ; errors on a vanishing block.
    pub fn normalized(&self) -> Result<Self> {
        if self.weight <= 1e-300 {
            return Err(AqpuError::InvalidState("cannot normalise a zero-weight block".into()));
        }
        Ok(Self::from_trusted(self.matrix.scale_real(1.0 / self.weight)))
    }

    /// Eigenvalues with negativity ≥ −1e−9 clamped to zero for reporting.
    pub fn reported_spectrum(&self) -> Vec<f64> {
        eigh_unchecked(&self.matrix.hermitian_part())
            .values
            .into_iter()
            .map(|l| if l < 0.0 && l >= -DENSITY_NEGATIVITY_TOL { 0.0 } else { l })
            .collect()
    }

    pub fn purity(&self) -> f64 {
        self.matrix.matmul(&self.matrix).trace().re
    }
}

/// Validates and eigendecomposes; shared by `expm_hermitian` callers holding raw matrices.
pub fn hermitian_eigen(m: &ComplexMatrix) -> Result<Eigen> {
    eigh(m)
}
