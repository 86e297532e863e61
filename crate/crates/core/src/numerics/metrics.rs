//! Trace distance and fidelity.

use super::eigen::{eigh_unchecked, hermitian_trace_norm};
use super::matrix::{ComplexMatrix, C64};
use super::types::DensityMatrix;
use crate::error::{AqpuError, Result};

/// First argument of [`state_metrics`]: a pure vector or a density matrix.
#[derive(Clone, Copy, Debug)]
pub enum StateRef<'a> {
    Pure(&'a [C64]),
    Mixed(&'a DensityMatrix),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateMetrics {
    pub trace_distance: f64,
    pub fidelity: f64,
}

/// ½‖a − b‖₁ and the (squared, Uhlmann) fidelity. For a pure `a = |ψ⟩` the
/// fidelity reduces to ⟨ψ|b|ψ⟩.
pub fn state_metrics(a: StateRef<'_>, b: &DensityMatrix) -> Result<StateMetrics> {
    match a {
        StateRef::Pure(psi) => {
            if psi.len() != b.dim() {
                return Err(AqpuError::Dimension(format!(
                    "state vector of dim {} vs density of dim {}",
                    psi.len(),
                    b.dim()
                )));
            }
            let rho_a = ComplexMatrix::outer(psi, psi);
            let fid = expectation(b.matrix(), psi).re;
            Ok(StateMetrics {
                trace_distance: trace_distance(&rho_a, b.matrix()),
                fidelity: fid.clamp(0.0, 1.0),
            })
        }
        StateRef::Mixed(rho) => {
            if rho.dim() != b.dim() {
                return Err(AqpuError::Dimension(format!("dims {} vs {}", rho.dim(), b.dim())));
            }
            Ok(StateMetrics {
                trace_distance: trace_distance(rho.matrix(), b.matrix()),
                fidelity: uhlmann_fidelity(rho.matrix(), b.matrix()).clamp(0.0, 1.0),
            })
        }
    }
}

/// ½ Σ|λ(a − b)|, clipped to [0, 1] only in the sense of rounding.
pub fn trace_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    0.5 * hermitian_trace_norm(&(a - b))
}

/// ⟨ψ|A|ψ⟩
pub fn expectation(a: &ComplexMatrix, psi: &[C64]) -> C64 {
    let apsi = a.mul_vec(psi);
    psi.iter().zip(&apsi).map(|(x, y)| x.conj() * y).sum()
}

/// (tr √(√ρ σ √ρ))²
pub fn uhlmann_fidelity(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> f64 {
    let e = eigh_unchecked(&rho.hermitian_part());
    let sqrt_rho = e.map(|l| C64::new(l.max(0.0).sqrt(), 0.0));
    let inner = sqrt_rho.matmul(sigma).matmul(&sqrt_rho);
    let s: f64 = eigh_unchecked(&inner.hermitian_part()).values.iter().map(|l| l.max(0.0).sqrt()).sum();
    s * s
}
