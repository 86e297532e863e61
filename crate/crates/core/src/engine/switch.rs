//! Quantum SWITCH oracle and the ideal-clock output of a superposed punch card.

use crate::error::{AqpuError, Result};
use crate::model::{compose_program_unitary, GateSet, Program, PunchCard};
use crate::numerics::matrix::{ComplexMatrix, C64};
use crate::numerics::types::DensityMatrix;

fn check_unitary(u: &ComplexMatrix) -> Result<()> {
    if !u.is_square() {
        return Err(AqpuError::Dimension("unitary must be square".into()));
    }
    let defect = (&u.matmul(&u.adjoint()) - &ComplexMatrix::identity(u.rows())).max_abs();
    if defect > 1e-10 {
        return Err(AqpuError::NotUnitary(defect));
    }
    Ok(())
}

/// Σ_(b,b') c_b c̄_b' |b⟩⟨b'| ⊗ V_b ρ V_b'†
fn recombine(amps: &[C64], unitaries: &[ComplexMatrix], rho: &ComplexMatrix) -> ComplexMatrix {
    let b = amps.len();
    let d = rho.rows();
    let mut out = ComplexMatrix::zeros(b * d, b * d);
    for (i, ui) in unitaries.iter().enumerate() {
        let left = ui.matmul(rho);
        for (j, uj) in unitaries.iter().enumerate() {
            let blk = left.matmul(&uj.adjoint());
            let c = amps[i] * amps[j].conj();
            for r in 0..d {
                for k in 0..d {
                    out[(i * d + r, j * d + k)] = c * blk[(r, k)];
                }
            }
        }
    }
    out
}

/// W (|c⟩⟨c| ⊗ ρ_T) W† with W = |0⟩⟨0| ⊗ U2 U1 + |1⟩⟨1| ⊗ U1 U2.
pub fn switch_reference(u1: &ComplexMatrix, u2: &ComplexMatrix, control: [C64; 2], rho: &DensityMatrix) -> Result<DensityMatrix> {
    check_unitary(u1)?;
    check_unitary(u2)?;
    if u1.rows() != rho.dim() || u2.rows() != rho.dim() {
        return Err(AqpuError::Dimension("unitaries do not match the target state".into()));
    }
    let norm = (control[0].norm_sqr() + control[1].norm_sqr()).sqrt();
    if norm <= 1e-300 {
        return Err(AqpuError::InvalidState("control amplitudes are zero".into()));
    }
    let amps = [control[0] / norm, control[1] / norm];
    Ok(DensityMatrix::from_trusted(recombine(&amps, &[u2.matmul(u1), u1.matmul(u2)], rho.matrix())))
}

/// Register ⊗ target state of a superposed punch card run on a perfect clock:
/// each branch program applied ideally, then recombined coherently. The
/// register basis is the card's branch order.
pub fn ideal_branch_recombination(gs: &GateSet, card: &PunchCard, rho: &DensityMatrix) -> Result<DensityMatrix> {
    card.validate(gs)?;
    if rho.dim() != gs.dim() {
        return Err(AqpuError::Dimension("target state does not match the gate set".into()));
    }
    let amps: Vec<C64> = card.branches().iter().map(|b| b.amplitude).collect();
    let unitaries = card
        .branches()
        .iter()
        .map(|b| compose_program_unitary(gs, &Program::new(b.steps.clone())))
        .collect::<Result<Vec<_>>>()?;
    Ok(DensityMatrix::from_trusted(recombine(&amps, &unitaries, rho.matrix())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::matrix::{pauli_x, pauli_z};
    use crate::numerics::ops::partial_trace_matrix;

    fn half() -> [C64; 2] {
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        [h, h]
    }

    #[test]
    fn anticommuting_pair_flips_control_phase() {
        let out = switch_reference(&pauli_x(), &pauli_z(), half(), &DensityMatrix::maximally_mixed(2)).unwrap();
        let c = partial_trace_matrix(out.matrix(), &[2, 2], &[0]).unwrap();
        let minus = ComplexMatrix::from_real(&[&[0.5, -0.5], &[-0.5, 0.5]]);
        assert!((&c - &minus).max_abs() < 1e-14);
    }

    #[test]
    fn equal_unitaries_keep_control_pure() {
        let out = switch_reference(&pauli_x(), &pauli_x(), half(), &DensityMatrix::maximally_mixed(2)).unwrap();
        let c = partial_trace_matrix(out.matrix(), &[2, 2], &[0]).unwrap();
        assert!((c.matmul(&c).trace().re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn non_unitary_rejected() {
        let bad = pauli_x().scale_real(2.0);
        assert!(switch_reference(&bad, &pauli_z(), half(), &DensityMatrix::maximally_mixed(2)).is_err());
    }
}
