//! Gate sets, programs, punch cards and channel dilation.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

use crate::error::{AqpuError, Result};
use crate::numerics::eigen::Eigen;
use crate::numerics::matrix::{hadamard, inner, ComplexMatrix, C64, ONE, ZERO};
use crate::numerics::ops::{expm_hermitian, partial_trace_matrix};
use crate::numerics::types::HermitianOperator;

/// Index of the idle instruction in programs and punch cards.
pub const IDLE: usize = 0;

#[derive(Clone, Debug)]
pub struct Gate {
    pub label: String,
    pub generator: HermitianOperator,
    pub unitary: ComplexMatrix,
    pub eigen: Eigen,
}

/// K labelled generators H_T^(k) with a common gate time τ. Index 0 is the idle
/// gate with zero Hamiltonian; indices 1..=K are the user generators.
#[derive(Clone, Debug)]
pub struct GateSet {
    tau: f64,
    gates: Vec<Gate>,
    target_dims: Vec<usize>,
}

impl GateSet {
    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Number of non-idle gates K.
    pub fn len(&self) -> usize {
        self.gates.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.target_dims.iter().product()
    }

    pub fn target_dims(&self) -> &[usize] {
        &self.target_dims
    }

    pub fn gate(&self, k: usize) -> Result<&Gate> {
        self.gates.get(k).ok_or_else(|| AqpuError::Config(format!("gate index {k} outside 0..={}", self.len())))
    }

    pub fn generator(&self, k: usize) -> Result<&HermitianOperator> {
        Ok(&self.gate(k)?.generator)
    }

    /// V_T^(k) = exp(−i H_T^(k) τ)
    pub fn unitary(&self, k: usize) -> Result<&ComplexMatrix> {
        Ok(&self.gate(k)?.unitary)
    }

    pub fn labels(&self) -> Vec<&str> {
        self.gates[1..].iter().map(|g| g.label.as_str()).collect()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.gates.iter().skip(1).position(|g| g.label == label).map(|i| i + 1)
    }

    /// τ · max_k ‖H_T^(k)‖∞
    pub fn phi_max(&self) -> f64 {
        self.tau * self.gates.iter().map(|g| g.generator.op_norm()).fold(0.0, f64::max)
    }

    /// τ · max_k (λ_max − λ_min)/2
    pub fn phi_max_half_spread(&self) -> f64 {
        self.tau * self.gates.iter().map(|g| 0.5 * g.generator.spectral_spread()).fold(0.0, f64::max)
    }

    /// Gate time m·τ with every generator divided by m; unitaries are unchanged.
    pub fn rescaled(&self, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(AqpuError::Config("coarse-graining factor must be ≥ 1".into()));
        }
        let gens = self.gates[1..]
            .iter()
            .map(|g| (g.label.clone(), g.generator.matrix().scale_real(1.0 / m as f64)))
            .collect();
        make_gateset(self.tau * m as f64, gens, self.target_dims.clone())
    }
}

/// Validates the generators and precomputes unitaries and eigenbases.
pub fn make_gateset(tau: f64, generators: Vec<(String, ComplexMatrix)>, target_dims: Vec<usize>) -> Result<GateSet> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(AqpuError::Config(format!("gate time τ = {tau} must be positive")));
    }
    let dim: usize = target_dims.iter().product();
    if target_dims.is_empty() || dim == 0 {
        return Err(AqpuError::Dimension("target dims must be non-empty and positive".into()));
    }
    let mut gates = Vec::with_capacity(generators.len() + 1);
    let idle = HermitianOperator::zero(dim);
    gates.push(Gate {
        label: "idle".into(),
        eigen: idle.eigen(),
        unitary: ComplexMatrix::identity(dim),
        generator: idle,
    });
    for (label, m) in generators {
        if m.rows() != dim || m.cols() != dim {
            return Err(AqpuError::Dimension(format!(
                "generator '{label}' is {}x{}, target dimension is {dim}",
                m.rows(),
                m.cols()
            )));
        }
        let generator = HermitianOperator::new(m)?;
        let unitary = expm_hermitian(&generator, tau)?;
        let defect = (&unitary.matmul(&unitary.adjoint()) - &ComplexMatrix::identity(dim)).max_abs();
        if defect > 1e-11 {
            return Err(AqpuError::NotUnitary(defect));
        }
        gates.push(Gate { label, eigen: generator.eigen(), generator, unitary });
    }
    Ok(GateSet { tau, gates, target_dims })
}

/// Ordered instruction indices a_0, …, a_{L−1}. Index 0 (idle) is accepted.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Program {
    pub steps: Vec<usize>,
}

impl Program {
    pub fn new(steps: Vec<usize>) -> Self {
        Self { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn validate(&self, gs: &GateSet) -> Result<()> {
        match self.steps.iter().find(|&&a| a > gs.len()) {
            Some(a) => Err(AqpuError::Config(format!("program step {a} outside 0..={}", gs.len()))),
            None => Ok(()),
        }
    }
}

/// V_𝒜 = V^(a_{L−1}) ⋯ V^(a_0)
pub fn compose_program_unitary(gs: &GateSet, program: &Program) -> Result<ComplexMatrix> {
    program.validate(gs)?;
    let mut u = ComplexMatrix::identity(gs.dim());
    for &a in &program.steps {
        u = gs.unitary(a)?.matmul(&u);
    }
    Ok(u)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub amplitude: C64,
    /// Exactly M entries, padded with idle.
    pub steps: Vec<usize>,
}

/// Instruction register state: one or more programs in superposition, each padded to M slots.
#[derive(Clone, Debug, PartialEq)]
pub struct PunchCard {
    slots: usize,
    branches: Vec<Branch>,
}

impl PunchCard {
    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn is_classical(&self) -> bool {
        self.branches.len() == 1 && (self.branches[0].amplitude.norm() - 1.0).abs() < 1e-12
    }

    /// The single program of a classical card.
    pub fn classical_steps(&self) -> Result<&[usize]> {
        if self.is_classical() {
            Ok(&self.branches[0].steps)
        } else {
            Err(AqpuError::Unsupported("superposed punch card where a classical one is required".into()))
        }
    }

    pub fn validate(&self, gs: &GateSet) -> Result<()> {
        for b in &self.branches {
            Program::new(b.steps.clone()).validate(gs)?;
        }
        Ok(())
    }
}

fn pad(program: &Program, m: usize) -> Result<Vec<usize>> {
    if program.len() > m {
        return Err(AqpuError::Config(format!("program length {} exceeds punch card slots M = {m}", program.len())));
    }
    let mut steps = program.steps.clone();
    steps.resize(m, IDLE);
    Ok(steps)
}

pub fn make_punchcard(program: &Program, m: usize) -> Result<PunchCard> {
    Ok(PunchCard { slots: m, branches: vec![Branch { amplitude: ONE, steps: pad(program, m)? }] })
}

/// Normalised superposition of programs; identical padded programs are merged.
pub fn superposed_punchcard(branches: &[(C64, Program)], m: usize) -> Result<PunchCard> {
    let mut merged: Vec<Branch> = Vec::new();
    for (amp, prog) in branches {
        let steps = pad(prog, m)?;
        match merged.iter_mut().find(|b| b.steps == steps) {
            Some(b) => b.amplitude += amp,
            None => merged.push(Branch { amplitude: *amp, steps }),
        }
    }
    merged.retain(|b| b.amplitude.norm() > 0.0);
    let norm: f64 = merged.iter().map(|b| b.amplitude.norm_sqr()).sum::<f64>().sqrt();
    if merged.is_empty() || norm <= 1e-300 {
        return Err(AqpuError::Config("punch card amplitudes are all zero".into()));
    }
    for b in &mut merged {
        b.amplitude /= norm;
    }
    Ok(PunchCard { slots: m, branches: merged })
}

/// Stinespring dilation of a channel given by Kraus operators.
#[derive(Clone, Debug)]
pub struct DilatedChannel {
    pub kraus_ops: Vec<ComplexMatrix>,
    /// Acts on system ⊗ ancilla; the ancilla starts in |0⟩.
    pub dilation_unitary: ComplexMatrix,
    pub ancilla_dim: usize,
}

impl DilatedChannel {
    pub fn apply_kraus(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let d = rho.rows();
        self.kraus_ops
            .iter()
            .fold(ComplexMatrix::zeros(d, d), |acc, k| &acc + &rho.conjugate_by(k))
    }

    /// tr_anc[U (ρ ⊗ |0⟩⟨0|) U†]
    pub fn apply_dilation(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        let d = rho.rows();
        let r = self.ancilla_dim;
        let mut anc = ComplexMatrix::zeros(r, r);
        anc[(0, 0)] = ONE;
        let joint = rho.kron(&anc).conjugate_by(&self.dilation_unitary);
        partial_trace_matrix(&joint, &[d, r], &[0])
    }
}

pub fn dilate_channel(kraus_ops: &[ComplexMatrix]) -> Result<DilatedChannel> {
    let first = kraus_ops.first().ok_or_else(|| AqpuError::Config("empty Kraus set".into()))?;
    let d = first.rows();
    if kraus_ops.iter().any(|k| k.rows() != d || k.cols() != d) {
        return Err(AqpuError::Dimension("Kraus operators must share one square shape".into()));
    }
    let completeness = kraus_ops
        .iter()
        .fold(ComplexMatrix::zeros(d, d), |acc, k| &acc + &k.adjoint().matmul(k));
    let defect = (&completeness - &ComplexMatrix::identity(d)).max_abs();
    if defect > 1e-9 {
        return Err(AqpuError::Config(format!("Kraus set incomplete: ‖ΣK†K − I‖max = {defect:e}")));
    }
    let r = kraus_ops.len();
    let n = d * r;
    // Columns |j⟩|0⟩ ↦ Σ_i K_i|j⟩ ⊗ |i⟩, then complete to an orthonormal basis.
    let mut columns: Vec<Vec<C64>> = Vec::with_capacity(n);
    let mut fixed = vec![false; n];
    let mut u_cols: Vec<Option<Vec<C64>>> = vec![None; n];
    for j in 0..d {
        let mut col = vec![ZERO; n];
        for (i, k) in kraus_ops.iter().enumerate() {
            for s in 0..d {
                col[s * r + i] = k[(s, j)];
            }
        }
        u_cols[j * r] = Some(col.clone());
        fixed[j * r] = true;
        columns.push(col);
    }
    let mut candidates = (0..n).map(|k| {
        let mut e = vec![ZERO; n];
        e[k] = ONE;
        e
    });
    for slot in 0..n {
        if fixed[slot] {
            continue;
        }
        loop {
            let mut v = candidates.next().ok_or_else(|| AqpuError::InvalidState("basis completion failed".into()))?;
            for _ in 0..2 {
                for c in &columns {
                    let p = inner(c, &v);
                    for (vi, ci) in v.iter_mut().zip(c) {
                        *vi -= p * ci;
                    }
                }
            }
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm > 1e-8 {
                for vi in &mut v {
                    *vi /= norm;
                }
                columns.push(v.clone());
                u_cols[slot] = Some(v);
                break;
            }
        }
    }
    let u = ComplexMatrix::from_fn(n, n, |row, col| u_cols[col].as_ref().expect("filled")[row]);
    let defect = (&u.adjoint().matmul(&u) - &ComplexMatrix::identity(n)).max_abs();
    if defect > 1e-9 {
        return Err(AqpuError::NotUnitary(defect));
    }
    Ok(DilatedChannel { kraus_ops: kraus_ops.to_vec(), dilation_unitary: u, ancilla_dim: r })
}

/// Standard generators.
pub mod gates {
    use super::*;

    /// H_H = −(π/2)(I − U_H); eigenvalues {0, −π}.
    pub fn hadamard_generator() -> ComplexMatrix {
        (&ComplexMatrix::identity(2) - &hadamard()).scale_real(-FRAC_PI_2)
    }

    /// (π/2) |1⟩⟨1| ⊗ [[1, −1], [−1, 1]]
    pub fn cnot_generator() -> ComplexMatrix {
        let mut p1 = ComplexMatrix::zeros(2, 2);
        p1[(1, 1)] = ONE;
        p1.kron(&ComplexMatrix::from_real(&[&[1.0, -1.0], &[-1.0, 1.0]])).scale_real(FRAC_PI_2)
    }

    /// diag(0, −π/4): exp(−iH) = T.
    pub fn t_generator() -> ComplexMatrix {
        ComplexMatrix::diagonal(&[ZERO, C64::new(-FRAC_PI_4, 0.0)])
    }

    /// (π/2)(I − P) for an involution P; exp(−iH) = P.
    pub fn involution_generator(p: &ComplexMatrix) -> ComplexMatrix {
        (&ComplexMatrix::identity(p.rows()) - p).scale_real(FRAC_PI_2)
    }

    pub fn cnot() -> ComplexMatrix {
        ComplexMatrix::from_real(&[
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
            &[0.0, 0.0, 1.0, 0.0],
        ])
    }

    /// {H, T} on one qubit with τ = 1.
    pub fn hadamard_t_gateset() -> Result<GateSet> {
        make_gateset(1.0, vec![("H".into(), hadamard_generator()), ("T".into(), t_generator())], vec![2])
    }
}

#[derive(Clone, Debug)]
pub struct BellExample {
    pub gateset: GateSet,
    pub program: Program,
    pub punchcard: PunchCard,
    pub initial: Vec<C64>,
    pub target: Vec<C64>,
}

/// Two-qubit gate set {H_H ⊗ I, H_CNOT} at τ = 1, program (H, CNOT) on a
/// three-slot card, |00⟩ input and (|00⟩ + |11⟩)/√2 target.
pub fn standard_bell_example() -> BellExample {
    let h_h = gates::hadamard_generator().kron(&ComplexMatrix::identity(2));
    let gateset = make_gateset(1.0, vec![("H".into(), h_h), ("C".into(), gates::cnot_generator())], vec![2, 2])
        .expect("static gate set");
    let program = Program::new(vec![1, 2]);
    let punchcard = make_punchcard(&program, 3).expect("static card");
    let s = C64::new(FRAC_1_SQRT_2, 0.0);
    BellExample {
        gateset,
        program,
        punchcard,
        initial: vec![ONE, ZERO, ZERO, ZERO],
        target: vec![s, ZERO, ZERO, s],
    }
}

/// |+⟩ ⊗ |0⟩, the intermediate state after the Hadamard step of the Bell program.
pub fn plus_zero_state() -> Vec<C64> {
    let s = C64::new(FRAC_1_SQRT_2, 0.0);
    vec![s, ZERO, s, ZERO]
}
