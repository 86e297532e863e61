//! The full aQPU Lindbladian on clockwork ⊗ tick register ⊗ instruction
//! register ⊗ target.
//!
//! The instruction register is kept on the span of the punch card's branch
//! programs: each branch |𝒜_b⟩ is a basis state there, and the interaction
//! never leaves that span.

use super::{check_card, Integrator, SolverConfig};
use crate::clock::ClockSpec;
use crate::dynamics::{self, BlockProblem, TopMode};
use crate::error::{AqpuError, Result};
use crate::model::{GateSet, PunchCard};
use crate::numerics::matrix::{ComplexMatrix, C64, I, ONE, ZERO};
use crate::numerics::ode::integrate_ode_with;
use crate::numerics::ops::partial_trace_matrix;
use crate::numerics::sparse::SparseMatrix;
use crate::numerics::types::{DensityMatrix, HermitianOperator};
use crate::numerics::{as_complex, as_complex_mut, flatten_complex};

/// Largest joint dimension D·(M+1)·B·d the full solver accepts.
pub const FULL_DIM_GUARD: usize = 4096;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FullRepresentation {
    /// ClockDiagonal for classical clocks, Dense otherwise.
    #[default]
    Auto,
    /// The whole joint density matrix, integrated with DOPRI.
    Dense,
    /// Clock kept as populations, tick sectors as blocks on register ⊗ target.
    /// Exact for classical clocks, whose coherences are never populated.
    ClockDiagonal,
}

/// Matrix-free ℒ_aQPU = ℒ_cw + ℒ_tick + ℒ_int on dims [D, M+1, B, d].
#[derive(Clone, Debug)]
pub struct Lindbladian {
    dims: [usize; 4],
    hamiltonian: SparseMatrix,
    jumps: Vec<SparseMatrix>,
    /// K = −iH − ½ Σ L†L
    effective: SparseMatrix,
}

impl Lindbladian {
    /// [D, M+1, B, d]
    pub fn dims(&self) -> [usize; 4] {
        self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn hamiltonian(&self) -> &SparseMatrix {
        &self.hamiltonian
    }

    pub fn jumps(&self) -> &[SparseMatrix] {
        &self.jumps
    }

    /// ℒ[ρ]
    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        let n = self.dim();
        if rho.rows() != n || rho.cols() != n {
            return Err(AqpuError::Dimension(format!("ℒ acts on {n}×{n}, got {}×{}", rho.rows(), rho.cols())));
        }
        let mut out = vec![ZERO; n * n];
        self.apply_into(rho.data(), &mut out, &mut Vec::new());
        ComplexMatrix::new(n, n, out)
    }

    fn apply_into(&self, rho: &[C64], out: &mut [C64], scratch: &mut Vec<C64>) {
        let n = self.dim();
        out.fill(ZERO);
        self.effective.mul_dense_acc(rho, n, ONE, out);
        self.effective.dense_mul_adjoint_acc(rho, n, ONE, out);
        for l in &self.jumps {
            l.sandwich_acc(rho, ONE, scratch, out);
        }
    }
}

fn unit(dim: usize, to: usize, from: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(dim, dim);
    m[(to, from)] = ONE;
    m
}

/// Triplets of A_1 ⊗ A_2 ⊗ ⋯ where `None` stands for the identity.
fn kron_entries(factors: &[(Option<&ComplexMatrix>, usize)]) -> Vec<(usize, usize, C64)> {
    let mut acc = vec![(0usize, 0usize, ONE)];
    for &(m, dim) in factors {
        let local: Vec<(usize, usize, C64)> = match m {
            None => (0..dim).map(|i| (i, i, ONE)).collect(),
            Some(m) => (0..dim)
                .flat_map(|r| (0..dim).map(move |c| (r, c)))
                .filter_map(|(r, c)| (m[(r, c)] != ZERO).then(|| (r, c, m[(r, c)])))
                .collect(),
        };
        acc = acc
            .iter()
            .flat_map(|&(r, c, v)| local.iter().map(move |&(i, j, w)| (r * dim + i, c * dim + j, v * w)))
            .collect();
    }
    acc
}

/// Σ_b |b⟩⟨b| ⊗ H^(a_n^b) for each slot n, and zero for n = M.
fn register_hamiltonians(gs: &GateSet, card: &PunchCard) -> Result<Vec<HermitianOperator>> {
    let b = card.branches().len();
    let d = gs.dim();
    let mut out = Vec::with_capacity(card.slots() + 1);
    for n in 0..card.slots() {
        let mut h = ComplexMatrix::zeros(b * d, b * d);
        for (k, br) in card.branches().iter().enumerate() {
            let g = gs.generator(br.steps[n])?.matrix();
            for r in 0..d {
                for c in 0..d {
                    h[(k * d + r, k * d + c)] = g[(r, c)];
                }
            }
        }
        out.push(HermitianOperator::new(h)?);
    }
    out.push(HermitianOperator::zero(b * d));
    Ok(out)
}

/// |R⟩⟨R| ⊗ ρ_T with |R⟩ = Σ_b c_b |b⟩.
fn register_target_init(card: &PunchCard, rho: &DensityMatrix) -> ComplexMatrix {
    let amps: Vec<C64> = card.branches().iter().map(|b| b.amplitude).collect();
    ComplexMatrix::outer(&amps, &amps).kron(rho.matrix())
}

fn full_dims(spec: &ClockSpec, gs: &GateSet, card: &PunchCard) -> Result<[usize; 4]> {
    let dims = [spec.dim(), spec.max_ticks() + 1, card.branches().len(), gs.dim()];
    let total: usize = dims.iter().product();
    if total > FULL_DIM_GUARD {
        return Err(AqpuError::Guard(format!(
            "full joint dimension {total} exceeds {FULL_DIM_GUARD}; use evolve_block for classical punch cards"
        )));
    }
    Ok(dims)
}

pub fn build_lindbladian(spec: &ClockSpec, gs: &GateSet, card: &PunchCard) -> Result<Lindbladian> {
    if card.slots() != spec.max_ticks() {
        return Err(AqpuError::Config(format!(
            "punch card has {} slots but the tick register caps at M = {}",
            card.slots(),
            spec.max_ticks()
        )));
    }
    card.validate(gs)?;
    let dims = full_dims(spec, gs, card)?;
    let [dc, h, b, d] = dims;
    let rt = b * d;
    let n = dc * h * rt;
    let m = spec.max_ticks();

    let mut ham = kron_entries(&[(Some(spec.clockwork().hamiltonian().matrix()), dc), (None, h), (None, rt)]);
    for (k, hk) in register_hamiltonians(gs, card)?.iter().enumerate().take(m) {
        ham.extend(kron_entries(&[(None, dc), (Some(&unit(h, k, k)), h), (Some(hk.matrix()), rt)]));
    }
    let hamiltonian = SparseMatrix::from_triplets(n, n, ham);

    let mut jumps: Vec<SparseMatrix> = spec
        .clockwork()
        .lindblad_ops()
        .iter()
        .map(|l| SparseMatrix::from_triplets(n, n, kron_entries(&[(Some(l), dc), (None, h), (None, rt)])))
        .collect();
    let mut tick = Vec::new();
    for k in 0..m {
        tick.extend(kron_entries(&[(Some(spec.ticks().jump(k)), dc), (Some(&unit(h, k + 1, k)), h), (None, rt)]));
    }
    let tick = SparseMatrix::from_triplets(n, n, tick);
    if spec.ticks().is_reversible() {
        let untick = tick.adjoint().scale(C64::new(spec.ticks().untick_factor().sqrt(), 0.0));
        jumps.push(untick);
    }
    jumps.push(tick);

    let mut eff: Vec<(usize, usize, C64)> = hamiltonian.triplets().into_iter().map(|(r, c, v)| (r, c, -I * v)).collect();
    for l in &jumps {
        eff.extend(l.gram().triplets().into_iter().map(|(r, c, v)| (r, c, -0.5 * v)));
    }
    Ok(Lindbladian { dims, hamiltonian, jumps, effective: SparseMatrix::from_triplets(n, n, eff) })
}

/// Reduced quantities of the joint state at one sample time.
#[derive(Clone, Debug)]
pub struct FullSample {
    pub t: f64,
    /// Joint density matrix; only kept by the dense representation.
    pub joint: Option<ComplexMatrix>,
    /// P[N(t) = n], n = 0..=M.
    pub tick_probs: Vec<f64>,
    /// ρ_RT(t) on the branch span ⊗ target.
    pub register_target: ComplexMatrix,
    /// ρ_T(t)
    pub target: ComplexMatrix,
}

#[derive(Clone, Debug)]
pub struct FullTrajectory {
    /// The representation actually used (never `Auto`).
    pub representation: FullRepresentation,
    /// [D, M+1, B, d]
    pub dims: [usize; 4],
    pub samples: Vec<FullSample>,
}

impl FullTrajectory {
    pub fn last(&self) -> &FullSample {
        self.samples.last().expect("at least one sample")
    }
}

fn reduce(dims: [usize; 4], t: f64, tick_probs: Vec<f64>, register_target: ComplexMatrix, joint: Option<ComplexMatrix>) -> Result<FullSample> {
    let target = partial_trace_matrix(&register_target, &[dims[2], dims[3]], &[1])?;
    Ok(FullSample { t, joint, tick_probs, register_target, target })
}

/// Integrates ρ̇ = ℒ_aQPU[ρ]. Superposed punch cards are supported; the
/// initial joint state is ρ_C ⊗ |0⟩⟨0| ⊗ |R⟩⟨R| ⊗ ρ_T.
pub fn evolve_full(
    spec: &ClockSpec,
    gs: &GateSet,
    card: &PunchCard,
    rho: &DensityMatrix,
    config: &SolverConfig,
    representation: FullRepresentation,
) -> Result<FullTrajectory> {
    config.validate()?;
    check_card(spec, gs, card, rho)?;
    let dims = full_dims(spec, gs, card)?;
    let repr = match representation {
        FullRepresentation::Auto if spec.is_classical() => FullRepresentation::ClockDiagonal,
        FullRepresentation::Auto => FullRepresentation::Dense,
        r => r,
    };
    let samples = match repr {
        FullRepresentation::ClockDiagonal => clock_diagonal(spec, gs, card, rho, config, dims)?,
        _ => dense(spec, gs, card, rho, config, dims)?,
    };
    Ok(FullTrajectory { representation: repr, dims, samples })
}

fn clock_diagonal(
    spec: &ClockSpec,
    gs: &GateSet,
    card: &PunchCard,
    rho: &DensityMatrix,
    config: &SolverConfig,
    dims: [usize; 4],
) -> Result<Vec<FullSample>> {
    if !spec.is_classical() {
        return Err(AqpuError::Unsupported("the clock-diagonal representation needs a classical clock".into()));
    }
    let problem = BlockProblem {
        spec,
        sectors: register_hamiltonians(gs, card)?,
        target_init: register_target_init(card, rho),
        top: TopMode::Live,
    };
    let snaps = dynamics::solve(&problem, &config.sample_times, config.method(spec)?, &config.ode_options())?;
    config
        .sample_times
        .iter()
        .zip(snaps)
        .map(|(&t, s)| reduce(dims, t, s.sector_probs(), s.target(), None))
        .collect()
}

fn dense(
    spec: &ClockSpec,
    gs: &GateSet,
    card: &PunchCard,
    rho: &DensityMatrix,
    config: &SolverConfig,
    dims: [usize; 4],
) -> Result<Vec<FullSample>> {
    if config.integrator == Integrator::Uniformization {
        return Err(AqpuError::Unsupported("the dense full representation integrates with DOPRI only".into()));
    }
    let l = build_lindbladian(spec, gs, card)?;
    let n = l.dim();
    let [dc, h, _, _] = dims;
    let rho0 = spec.initial().matrix().kron(&unit(h, 0, 0)).kron(&register_target_init(card, rho));
    let mut scratch = Vec::new();
    let mut rhs = |_t: f64, y: &[f64], out: &mut [f64]| l.apply_into(as_complex(y), as_complex_mut(out), &mut scratch);
    let mut joints = Vec::with_capacity(config.sample_times.len());
    integrate_ode_with(&mut rhs, &flatten_complex(rho0.data()), &config.sample_times, config.ode_options(), |_, y| {
        joints.push(as_complex(y).to_vec())
    })?;
    let mut out = Vec::with_capacity(joints.len());
    for (&t, data) in config.sample_times.iter().zip(joints) {
        let joint = ComplexMatrix::new(n, n, data)?;
        if !joint.is_finite() {
            return Err(AqpuError::NonFinite(format!("full joint state at t = {t}")));
        }
        let rest = n / (dc * h);
        let ticks = partial_trace_matrix(&joint, &[dc, h, rest], &[1])?;
        let tick_probs = ticks.diag().iter().map(|z| z.re).collect();
        let register_target = partial_trace_matrix(&joint, &[dc * h, rest], &[1])?;
        out.push(reduce(dims, t, tick_probs, register_target, Some(joint))?);
    }
    Ok(out)
}
