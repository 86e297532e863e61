//! aQPU dynamics: block-decomposed solver, full Lindbladian, ideal clock,
//! i.i.d. clock channel, Monte Carlo unraveling, reversible ticks and the
//! SWITCH oracle.

mod full;
mod iid;
mod kernel;
mod mc;
mod switch;

pub use full::{build_lindbladian, evolve_full, FullRepresentation, FullSample, FullTrajectory, Lindbladian};
pub use iid::{apply_tick_channel, clock_channel_second_order, evolve_iid};
pub use kernel::ConditionalTickKernel;
pub use mc::{evolve_monte_carlo, McResult};
pub use switch::{ideal_branch_recombination, switch_reference};

use crate::clock::ClockSpec;
use crate::dynamics::{self, BlockProblem, Method, Snapshot, TopMode};
use crate::error::{AqpuError, Result};
use crate::model::{compose_program_unitary, GateSet, Program, PunchCard};
use crate::numerics::eigen::eigh_unchecked;
use crate::numerics::matrix::{ComplexMatrix, C64};
use crate::numerics::metrics::expectation;
use crate::numerics::ode::OdeOptions;
use crate::numerics::types::{DensityMatrix, HermitianOperator};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Integrator {
    /// Uniformization for classical clocks, DOPRI otherwise.
    #[default]
    Auto,
    Uniformization,
    Dopri,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub rtol: f64,
    pub atol: f64,
    pub t_end: f64,
    pub sample_times: Vec<f64>,
    pub rng_seed: u64,
    pub trajectory_count: usize,
    pub integrator: Integrator,
}

impl SolverConfig {
    pub fn at_times(sample_times: Vec<f64>) -> Self {
        let t_end = sample_times.iter().copied().fold(0.0, f64::max);
        Self { rtol: 1e-9, atol: 1e-12, t_end, sample_times, rng_seed: 0, trajectory_count: 1000, integrator: Integrator::Auto }
    }

    /// `count` evenly spaced samples on [0, t_end], endpoints included.
    pub fn uniform(t_end: f64, count: usize) -> Self {
        let n = count.max(2);
        Self::at_times((0..n).map(|k| t_end * k as f64 / (n - 1) as f64).collect())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(AqpuError::Config("rtol and atol must be positive".into()));
        }
        if self.sample_times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(AqpuError::Config("sample times must be finite and non-negative".into()));
        }
        if self.sample_times.windows(2).any(|w| w[1] < w[0]) {
            return Err(AqpuError::Config("sample times must be sorted".into()));
        }
        if self.sample_times.iter().any(|&t| t > self.t_end) {
            return Err(AqpuError::Config("t_end must cover every sample time".into()));
        }
        if self.trajectory_count == 0 {
            return Err(AqpuError::Config("trajectory_count must be ≥ 1".into()));
        }
        Ok(())
    }

    pub(crate) fn ode_options(&self) -> OdeOptions {
        OdeOptions::with_tolerances(self.rtol, self.atol)
    }

    pub(crate) fn method(&self, spec: &ClockSpec) -> Result<Method> {
        match self.integrator {
            Integrator::Auto => Ok(dynamics::default_method(spec)),
            Integrator::Dopri => Ok(Method::Dopri),
            Integrator::Uniformization if spec.is_classical() => Ok(Method::Uniformization),
            Integrator::Uniformization => Err(AqpuError::Unsupported("uniformization needs a classical clock".into())),
        }
    }
}

/// Joint state resolved by tick number at one time.
#[derive(Clone, Debug)]
pub struct BlockState {
    pub t: f64,
    /// Clock basis populations of ρ_C^(n), per sector n = 0..=M.
    pub clock_pops: Vec<Vec<f64>>,
    /// σ_T^(n) = P[N(t)=n] ρ_T^(n).
    pub sigma: Vec<ComplexMatrix>,
    /// Tick current p_(n+1)(t) out of sector n, n < M.
    pub forward: Vec<f64>,
    /// Untick current p̄_n(t) from sector n + 1 into n, n < M.
    pub backward: Vec<f64>,
}

impl BlockState {
    fn from_snapshot(t: f64, s: Snapshot) -> Self {
        Self { t, clock_pops: s.pops, sigma: s.sigma, forward: s.forward, backward: s.backward }
    }

    /// P[N(t) = n]
    pub fn sector_probs(&self) -> Vec<f64> {
        self.clock_pops.iter().map(|p| p.iter().sum()).collect()
    }

    /// ⟨N(t)⟩ of the capped register.
    pub fn ticks_mean(&self) -> f64 {
        self.sector_probs().iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    /// ρ_T(t) = Σ_n σ_T^(n)
    pub fn target(&self) -> ComplexMatrix {
        let d = self.sigma[0].rows();
        self.sigma.iter().fold(ComplexMatrix::zeros(d, d), |acc, s| &acc + s)
    }
}

#[derive(Clone, Debug)]
pub struct BlockTrajectory {
    pub states: Vec<BlockState>,
}

impl BlockTrajectory {
    pub fn at(&self, t: f64) -> Result<&BlockState> {
        self.states
            .iter()
            .find(|s| (s.t - t).abs() <= 1e-12 * t.max(1.0))
            .ok_or_else(|| AqpuError::Config(format!("t = {t} is not a sample time")))
    }

    pub fn last(&self) -> &BlockState {
        self.states.last().expect("at least one sample")
    }
}

/// H_n for each sector: the generator of slot n for n < M, zero at n = M.
pub(crate) fn sector_hamiltonians(gs: &GateSet, steps: &[usize]) -> Result<Vec<HermitianOperator>> {
    let mut out: Vec<HermitianOperator> =
        steps.iter().map(|&a| gs.generator(a).cloned()).collect::<Result<_>>()?;
    out.push(HermitianOperator::zero(gs.dim()));
    Ok(out)
}

pub(crate) fn check_card(spec: &ClockSpec, gs: &GateSet, card: &PunchCard, rho: &DensityMatrix) -> Result<()> {
    if card.slots() != spec.max_ticks() {
        return Err(AqpuError::Config(format!(
            "punch card has {} slots but the tick register caps at M = {}",
            card.slots(),
            spec.max_ticks()
        )));
    }
    card.validate(gs)?;
    if rho.dim() != gs.dim() {
        return Err(AqpuError::Dimension(format!("target state dim {} vs gate set dim {}", rho.dim(), gs.dim())));
    }
    Ok(())
}

fn run_blocks(spec: &ClockSpec, gs: &GateSet, card: &PunchCard, rho: &DensityMatrix, config: &SolverConfig) -> Result<BlockTrajectory> {
    config.validate()?;
    check_card(spec, gs, card, rho)?;
    let steps = card.classical_steps()?;
    let problem = BlockProblem {
        spec,
        sectors: sector_hamiltonians(gs, steps)?,
        target_init: rho.matrix().clone(),
        top: TopMode::Live,
    };
    let snaps = dynamics::solve(&problem, &config.sample_times, config.method(spec)?, &config.ode_options())?;
    Ok(BlockTrajectory {
        states: config.sample_times.iter().zip(snaps).map(|(&t, s)| BlockState::from_snapshot(t, s)).collect(),
    })
}

/// Block-decomposed evolution for a classical punch card.
pub fn evolve_block(spec: &ClockSpec, gs: &GateSet, card: &PunchCard, rho: &DensityMatrix, config: &SolverConfig) -> Result<BlockTrajectory> {
    run_blocks(spec, gs, card, rho, config)
}

/// Block evolution with backward ticks; the currents are in each state.
pub fn evolve_reversible(spec: &ClockSpec, gs: &GateSet, card: &PunchCard, rho: &DensityMatrix, config: &SolverConfig) -> Result<BlockTrajectory> {
    if !spec.ticks().is_reversible() {
        return Err(AqpuError::Config("reversible evolution needs a finite Δσ_tick; use evolve_block".into()));
    }
    run_blocks(spec, gs, card, rho, config)
}

/// V_𝒜 ρ V_𝒜†
pub fn evolve_ideal(gs: &GateSet, program: &Program, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.dim() != gs.dim() {
        return Err(AqpuError::Dimension("target state does not match the gate set".into()));
    }
    let u = compose_program_unitary(gs, program)?;
    Ok(DensityMatrix::from_trusted(rho.matrix().conjugate_by(&u)))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fidelity {
    pub value: f64,
    /// True when the initial state was mixed and tr[ρ_ideal ρ] was used instead of ⟨Ψ|ρ|Ψ⟩.
    pub overlap_fallback: bool,
}

/// ⟨Ψ(𝒜)|ρ_T|Ψ(𝒜)⟩ with |Ψ(𝒜)⟩ = V_𝒜|ψ_init⟩.
pub fn program_fidelity(rho_t: &ComplexMatrix, gs: &GateSet, program: &Program, rho_init: &DensityMatrix) -> Result<Fidelity> {
    let ideal = evolve_ideal(gs, program, rho_init)?;
    if rho_t.rows() != ideal.dim() {
        return Err(AqpuError::Dimension("simulated state does not match the gate set".into()));
    }
    if (rho_init.purity() - 1.0).abs() < 1e-10 {
        let e = eigh_unchecked(ideal.matrix());
        let psi = e.vectors.column(e.values.len() - 1);
        Ok(Fidelity { value: expectation(rho_t, &psi).re, overlap_fallback: false })
    } else {
        let v: C64 = ideal.matrix().matmul(rho_t).trace();
        Ok(Fidelity { value: v.re, overlap_fallback: true })
    }
}
