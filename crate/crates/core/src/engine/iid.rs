//! Mixed-unitary tick channel for clocks with i.i.d. intervals.

use crate::clock::TickDensity;
use crate::error::{AqpuError, Result};
use crate::model::{GateSet, Program};
use crate::numerics::eigen::Eigen;
use crate::numerics::matrix::{ComplexMatrix, C64};
use crate::numerics::ops::expm_hermitian;
use crate::numerics::types::{DensityMatrix, HermitianOperator};

/// Smallest grid mass accepted as a normalized single-tick density.
pub const MIN_DENSITY_MASS: f64 = 0.999;

fn damped(eigen: &Eigen, density: &TickDensity, mass: f64, rho: &ComplexMatrix) -> ComplexMatrix {
    let w = &eigen.vectors;
    let l = &eigen.values;
    let mut x = w.adjoint().matmul(rho).matmul(w);
    let n = l.len();
    for i in 0..n {
        for j in 0..n {
            let phi = if i == j { C64::new(mass, 0.0) } else { density.characteristic(l[i] - l[j]) };
            x[(i, j)] *= phi / mass;
        }
    }
    w.matmul(&x).matmul(&w.adjoint())
}

/// ∫ P(t) e^(−iHt) ρ e^(iHt) dt, element-wise in the eigenbasis of H.
pub fn apply_tick_channel(h: &HermitianOperator, density: &TickDensity, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    if rho.rows() != h.dim() || rho.cols() != h.dim() {
        return Err(AqpuError::Dimension("state does not match the generator".into()));
    }
    Ok(damped(&h.eigen(), density, density.mass(), rho))
}

/// One tick channel per program step, each step drawing an independent interval.
pub fn evolve_iid(gs: &GateSet, program: &Program, density: &TickDensity, rho: &DensityMatrix) -> Result<DensityMatrix> {
    program.validate(gs)?;
    if rho.dim() != gs.dim() {
        return Err(AqpuError::Dimension("target state does not match the gate set".into()));
    }
    let mass = density.mass();
    if mass < MIN_DENSITY_MASS {
        return Err(AqpuError::Config(format!("tick density mass {mass} on the grid is below {MIN_DENSITY_MASS}")));
    }
    let mut x = rho.matrix().clone();
    for &a in &program.steps {
        x = damped(&gs.gate(a)?.eigen, density, mass, &x);
    }
    Ok(DensityMatrix::from_trusted(x))
}

/// V (ρ − (τ²/2N) [H,[H,ρ]]) V† with V = e^(−iHτ): the tick channel of a clock
/// with mean τ and accuracy N, to second order in the interval spread.
pub fn clock_channel_second_order(h: &HermitianOperator, tau: f64, accuracy: f64, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if !(accuracy > 0.0) {
        return Err(AqpuError::Config("accuracy N must be positive".into()));
    }
    if rho.dim() != h.dim() {
        return Err(AqpuError::Dimension("state does not match the generator".into()));
    }
    let v = expm_hermitian(h, tau)?;
    let hm = h.matrix();
    let dd = hm.commutator(&hm.commutator(rho.matrix()));
    let mut inner = rho.matrix().clone();
    inner.axpy(C64::new(-tau * tau / (2.0 * accuracy), 0.0), &dd);
    Ok(DensityMatrix::from_trusted(inner.conjugate_by(&v)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{compose_program_unitary, standard_bell_example};
    use crate::numerics::metrics::trace_distance;
    use crate::numerics::types::HermitianOperator;

    #[test]
    fn point_mass_reproduces_ideal() {
        let ex = standard_bell_example();
        let rho = DensityMatrix::pure(&ex.initial).unwrap();
        let out = evolve_iid(&ex.gateset, &ex.program, &TickDensity::point_mass(1.0).unwrap(), &rho).unwrap();
        let u = compose_program_unitary(&ex.gateset, &ex.program).unwrap();
        assert!(trace_distance(out.matrix(), &rho.matrix().conjugate_by(&u)) < 1e-12);
    }

    #[test]
    fn erlang_matches_closed_form_damping() {
        // Erlang(D, DΓ) has φ(ω) = (DΓ/(DΓ + iω))^D.
        let d = 12;
        let dens = TickDensity::erlang(d, d as f64).unwrap();
        let h = HermitianOperator::new(crate::model::gates::hadamard_generator()).unwrap();
        let rho = DensityMatrix::pure(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]).unwrap();
        let got = apply_tick_channel(&h, &dens, rho.matrix()).unwrap();
        let e = h.eigen();
        let w = &e.vectors;
        let mut x = w.adjoint().matmul(rho.matrix()).matmul(w);
        for i in 0..2 {
            for j in 0..2 {
                let om = e.values[i] - e.values[j];
                x[(i, j)] *= (C64::new(d as f64, 0.0) / C64::new(d as f64, om)).powi(d as i32);
            }
        }
        let want = w.matmul(&x).matmul(&w.adjoint());
        assert!((&got - &want).max_abs() < 1e-10);
    }

    #[test]
    fn second_order_limits() {
        let h = HermitianOperator::new(crate::model::gates::hadamard_generator()).unwrap();
        let rho = DensityMatrix::pure(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]).unwrap();
        let zero = HermitianOperator::zero(2);
        assert_eq!(clock_channel_second_order(&zero, 1.0, 10.0, &rho).unwrap().matrix(), rho.matrix());
        let v = expm_hermitian(&h, 1.0).unwrap();
        let far = clock_channel_second_order(&h, 1.0, 1e12, &rho).unwrap();
        assert!(trace_distance(far.matrix(), &rho.matrix().conjugate_by(&v)) < 1e-10);
        assert!(clock_channel_second_order(&h, 1.0, 0.0, &rho).is_err());
    }

    #[test]
    fn truncated_density_rejected() {
        let ex = standard_bell_example();
        let rho = DensityMatrix::pure(&ex.initial).unwrap();
        let d = TickDensity::from_fn(|t| (-t).exp(), 0.0, 2.0, 20, 8).unwrap();
        assert!(evolve_iid(&ex.gateset, &ex.program, &d, &rho).is_err());
    }
}
