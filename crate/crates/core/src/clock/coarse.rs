use super::{ClockJump, ClockSpec, Clockwork, TickGenerator, TickJumps};
use crate::error::{AqpuError, Result};
use crate::model::GateSet;
use crate::numerics::matrix::{ComplexMatrix, C64};
use crate::numerics::types::DensityMatrix;

fn unit(m: usize, to: usize, from: usize) -> ComplexMatrix {
    let mut e = ComplexMatrix::zeros(m, m);
    e[(to, from)] = C64::new(1.0, 0.0);
    e
}

/// Lets only every m-th underlying tick reach the register: a counter of
/// dimension m is folded into the clockwork (level j·D + c), the first m − 1
/// ticks become clockwork jumps, and gates run m times slower (τ ↦ mτ, H ↦ H/m).
pub fn coarse_grain(spec: &ClockSpec, gateset: &GateSet, m: usize) -> Result<(ClockSpec, GateSet)> {
    if m == 0 {
        return Err(AqpuError::Config("coarse-graining factor must be ≥ 1".into()));
    }
    let j = match spec.ticks().jumps() {
        TickJumps::Uniform(j) => j.clone(),
        TickJumps::PerTick(_) => return Err(AqpuError::Unsupported("coarse-graining needs a uniform (i.i.d.) tick".into())),
    };
    if m == 1 {
        return Ok((spec.clone(), gateset.clone()));
    }
    let id = ComplexMatrix::identity(m);
    let cw = spec.clockwork();
    let mut jumps: Vec<ClockJump> = cw
        .jumps()
        .iter()
        .map(|l| ClockJump { op: id.kron(&l.op), entropy: l.entropy, include_reverse: l.include_reverse })
        .collect();
    let counter = (0..m - 1).fold(ComplexMatrix::zeros(m, m), |acc, k| &acc + &unit(m, k + 1, k));
    let ticks = spec.ticks();
    jumps.push(ClockJump {
        op: counter.kron(&j),
        entropy: Some(ticks.reverse_entropy()).filter(|s| s.is_finite()),
        include_reverse: ticks.is_reversible(),
    });
    let clockwork = Clockwork::new(id.kron(cw.hamiltonian().matrix()), jumps)?;
    let tick = TickGenerator::new(TickJumps::Uniform(unit(m, 0, m - 1).kron(&j)), ticks.max_ticks(), ticks.reverse_entropy())?;
    let initial = DensityMatrix::new(unit(m, 0, 0).kron(spec.initial().matrix()))?;
    Ok((ClockSpec::new(clockwork, tick, initial)?, gateset.rescaled(m)?))
}

#[cfg(test)]
mod tests {
    use super::super::{make_erlang_clock, tick_statistics};
    use super::*;
    use crate::model::{compose_program_unitary, standard_bell_example};

    #[test]
    fn accuracy_and_period_scale_with_m() {
        let ex = standard_bell_example();
        let c = make_erlang_clock(20, 1.0, 1).unwrap();
        let (c2, g2) = coarse_grain(&c, &ex.gateset, 2).unwrap();
        assert_eq!(c2.dim(), 40);
        assert!(c2.is_classical());
        assert!((g2.tau() - 2.0).abs() < 1e-15);
        let s = tick_statistics(&c2, 1, 6.0, 150).unwrap();
        assert!((s.mean() - 2.0).abs() < 1e-8);
        assert!((s.accuracy[0] - 40.0).abs() < 0.01 * 40.0);
        let u1 = compose_program_unitary(&ex.gateset, &ex.program).unwrap();
        let u2 = compose_program_unitary(&g2, &ex.program).unwrap();
        assert!((&u1 - &u2).max_abs() < 1e-12);
    }

    #[test]
    fn factor_one_is_identity_and_zero_rejected() {
        let ex = standard_bell_example();
        let c = make_erlang_clock(5, 1.0, 2).unwrap();
        let (c1, g1) = coarse_grain(&c, &ex.gateset, 1).unwrap();
        assert_eq!(c1.dim(), 5);
        assert_eq!(g1.tau(), 1.0);
        assert!(coarse_grain(&c, &ex.gateset, 0).is_err());
    }
}
