//! Fixtures shared by the criterion benches.

use aqpu_core::clock::{make_erlang_clock, ClockSpec};
use aqpu_core::model::{standard_bell_example, BellExample};
use aqpu_core::numerics::types::DensityMatrix;
use aqpu_core::Result;

pub struct BellBench {
    pub example: BellExample,
    pub clock: ClockSpec,
    pub rho: DensityMatrix,
}

/// Bell program on an Erlang clock with `d` stages and Γ = 1.
pub fn bell_fixture(d: usize) -> Result<BellBench> {
    let example = standard_bell_example();
    let clock = make_erlang_clock(d, 1.0, example.punchcard.slots())?;
    let rho = DensityMatrix::pure(&example.initial)?;
    Ok(BellBench { example, clock, rho })
}
