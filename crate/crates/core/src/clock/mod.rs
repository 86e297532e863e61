//! Ticking clocks: clockwork, tick generator, tick statistics, sampling,
//! concentration diagnostics and coarse-graining.

mod coarse;
mod concentration;
mod density;
mod sampling;
mod stats;

pub use coarse::coarse_grain;
pub use concentration::{concentration_check, concentration_check_density, ConcentrationReport};
pub use density::TickDensity;
pub use sampling::{sample_ticks, TickEvent, TickSampler};
pub(crate) use sampling::stream_rng;
pub use stats::{
    interval_density, post_tick_clock_state, tick_cdf, tick_density, tick_flux, tick_number_distribution,
    tick_number_distributions, tick_statistics, TickStatistics,
};

use crate::error::{AqpuError, Result};
use crate::numerics::matrix::{ComplexMatrix, C64, ZERO};
use crate::numerics::types::{DensityMatrix, HermitianOperator};

/// A clockwork jump L with its entropy Δσ (units of k_B). With `include_reverse`
/// the paired reverse jump e^(−Δσ/2) L† is part of the dynamics.
#[derive(Clone, Debug)]
pub struct ClockJump {
    pub op: ComplexMatrix,
    pub entropy: Option<f64>,
    pub include_reverse: bool,
}

impl ClockJump {
    pub fn irreversible(op: ComplexMatrix) -> Self {
        Self { op, entropy: None, include_reverse: false }
    }

    pub fn with_entropy(op: ComplexMatrix, entropy: f64, include_reverse: bool) -> Self {
        Self { op, entropy: Some(entropy), include_reverse }
    }

    pub fn reverse(&self) -> Option<ComplexMatrix> {
        match (self.include_reverse, self.entropy) {
            (true, Some(s)) => Some(self.op.adjoint().scale_real((-0.5 * s).exp())),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Clockwork {
    dim: usize,
    hamiltonian: HermitianOperator,
    jumps: Vec<ClockJump>,
    classical: bool,
}

impl Clockwork {
    pub fn new(hamiltonian: ComplexMatrix, jumps: Vec<ClockJump>) -> Result<Self> {
        let hamiltonian = HermitianOperator::new(hamiltonian)?;
        let dim = hamiltonian.dim();
        for j in &jumps {
            if j.op.rows() != dim || j.op.cols() != dim {
                return Err(AqpuError::Dimension(format!("clockwork jump is {}x{}, clock dim {dim}", j.op.rows(), j.op.cols())));
            }
            if !j.op.is_finite() {
                return Err(AqpuError::NonFinite("clockwork jump".into()));
            }
            if j.include_reverse && !j.entropy.is_some_and(f64::is_finite) {
                return Err(AqpuError::Config("reverse jump requires a finite entropy Δσ".into()));
            }
        }
        let classical = is_diagonal(hamiltonian.matrix()) && jumps.iter().all(|j| is_partial_permutation(&j.op));
        Ok(Self { dim, hamiltonian, jumps, classical })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hamiltonian(&self) -> &HermitianOperator {
        &self.hamiltonian
    }

    pub fn jumps(&self) -> &[ClockJump] {
        &self.jumps
    }

    /// Diagonal H_C and jumps with at most one entry per row and column.
    pub fn is_classical(&self) -> bool {
        self.classical
    }

    /// Every Lindblad operator acting on the clockwork, reverses included.
    pub fn lindblad_ops(&self) -> Vec<ComplexMatrix> {
        self.jumps
            .iter()
            .flat_map(|j| std::iter::once(j.op.clone()).chain(j.reverse()))
            .collect()
    }
}

fn is_diagonal(m: &ComplexMatrix) -> bool {
    (0..m.rows()).all(|r| (0..m.cols()).all(|c| r == c || m[(r, c)] == ZERO))
}

fn is_partial_permutation(m: &ComplexMatrix) -> bool {
    let rows_ok = (0..m.rows()).all(|r| (0..m.cols()).filter(|&c| m[(r, c)] != ZERO).count() <= 1);
    let cols_ok = (0..m.cols()).all(|c| (0..m.rows()).filter(|&r| m[(r, c)] != ZERO).count() <= 1);
    rows_ok && cols_ok
}

#[derive(Clone, Debug)]
pub enum TickJumps {
    Uniform(ComplexMatrix),
    /// J_C^(n) for n = 0..M−1.
    PerTick(Vec<ComplexMatrix>),
}

#[derive(Clone, Debug)]
pub struct TickGenerator {
    jumps: TickJumps,
    max_ticks: usize,
    reverse_entropy: f64,
}

impl TickGenerator {
    /// `reverse_entropy` = ∞ gives irreversible ticks.
    pub fn new(jumps: TickJumps, max_ticks: usize, reverse_entropy: f64) -> Result<Self> {
        if reverse_entropy.is_nan() || reverse_entropy <= 0.0 {
            return Err(AqpuError::Config(format!("Δσ_tick = {reverse_entropy} must lie in (0, ∞]")));
        }
        if let TickJumps::PerTick(v) = &jumps {
            if v.len() != max_ticks {
                return Err(AqpuError::Dimension(format!("{} tick jumps for M = {max_ticks}", v.len())));
            }
        }
        Ok(Self { jumps, max_ticks, reverse_entropy })
    }

    pub fn max_ticks(&self) -> usize {
        self.max_ticks
    }

    pub fn reverse_entropy(&self) -> f64 {
        self.reverse_entropy
    }

    pub fn is_reversible(&self) -> bool {
        self.reverse_entropy.is_finite()
    }

    /// e^(−Δσ_tick), the untick rate relative to the tick rate; 0 when irreversible.
    pub fn untick_factor(&self) -> f64 {
        (-self.reverse_entropy).exp()
    }

    pub fn jumps(&self) -> &TickJumps {
        &self.jumps
    }

    /// J_C^(n), for n < M.
    pub fn jump(&self, n: usize) -> &ComplexMatrix {
        match &self.jumps {
            TickJumps::Uniform(j) => j,
            TickJumps::PerTick(v) => &v[n],
        }
    }

    fn all_ops(&self) -> Vec<&ComplexMatrix> {
        match &self.jumps {
            TickJumps::Uniform(j) => vec![j],
            TickJumps::PerTick(v) => v.iter().collect(),
        }
    }
}

/// A jump between clock basis states with rate |L_to,from|² and the entropy
/// it produces (negative for reverse jumps).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition {
    pub from: usize,
    pub to: usize,
    pub rate: f64,
    pub entropy: Option<f64>,
}

/// Rate form of a classical clock.
#[derive(Clone, Debug)]
pub struct ClassicalRates {
    pub dim: usize,
    pub clockwork: Vec<Transition>,
    /// Forward tick transitions out of sector n, n = 0..M−1.
    pub tick: Vec<Vec<Transition>>,
    pub untick_factor: f64,
    pub initial: Vec<f64>,
}

impl ClassicalRates {
    /// Total clockwork escape rate out of each level.
    pub fn clockwork_exit(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for t in &self.clockwork {
            out[t.from] += t.rate;
        }
        out
    }
}

fn transitions(op: &ComplexMatrix, entropy: Option<f64>) -> Vec<Transition> {
    let mut out = Vec::new();
    for to in 0..op.rows() {
        for from in 0..op.cols() {
            let a = op[(to, from)];
            if a != ZERO {
                out.push(Transition { from, to, rate: a.norm_sqr(), entropy });
            }
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct ClockSpec {
    clockwork: Clockwork,
    ticks: TickGenerator,
    initial: DensityMatrix,
}

impl ClockSpec {
    pub fn new(clockwork: Clockwork, ticks: TickGenerator, initial: DensityMatrix) -> Result<Self> {
        let d = clockwork.dim();
        if initial.dim() != d {
            return Err(AqpuError::Dimension(format!("initial clock state has dim {}, clockwork {d}", initial.dim())));
        }
        if (initial.weight() - 1.0).abs() > 1e-10 {
            return Err(AqpuError::InvalidState("initial clock state must be normalised".into()));
        }
        for j in ticks.all_ops() {
            if j.rows() != d || j.cols() != d {
                return Err(AqpuError::Dimension("tick jump dimension differs from the clockwork".into()));
            }
        }
        Ok(Self { clockwork, ticks, initial })
    }

    pub fn clockwork(&self) -> &Clockwork {
        &self.clockwork
    }

    pub fn ticks(&self) -> &TickGenerator {
        &self.ticks
    }

    pub fn initial(&self) -> &DensityMatrix {
        &self.initial
    }

    pub fn dim(&self) -> usize {
        self.clockwork.dim()
    }

    pub fn max_ticks(&self) -> usize {
        self.ticks.max_ticks()
    }

    pub fn is_classical(&self) -> bool {
        self.clockwork.is_classical()
            && self.ticks.all_ops().into_iter().all(is_partial_permutation)
            && is_diagonal(self.initial.matrix())
    }

    /// Same clock with a different tick-register cap. Requires uniform tick jumps
    /// when the cap grows.
    pub fn with_max_ticks(&self, m: usize) -> Result<Self> {
        let jumps = match &self.ticks.jumps {
            TickJumps::Uniform(j) => TickJumps::Uniform(j.clone()),
            TickJumps::PerTick(v) if m <= v.len() => TickJumps::PerTick(v[..m].to_vec()),
            TickJumps::PerTick(_) => {
                return Err(AqpuError::Config("cannot extend per-tick jumps beyond their count".into()))
            }
        };
        let ticks = TickGenerator::new(jumps, m, self.ticks.reverse_entropy)?;
        Self::new(self.clockwork.clone(), ticks, self.initial.clone())
    }

    pub fn with_reverse_ticks(&self, reverse_entropy: f64) -> Result<Self> {
        let ticks = TickGenerator::new(self.ticks.jumps.clone(), self.ticks.max_ticks, reverse_entropy)?;
        Self::new(self.clockwork.clone(), ticks, self.initial.clone())
    }

    pub fn with_initial(&self, initial: DensityMatrix) -> Result<Self> {
        Self::new(self.clockwork.clone(), self.ticks.clone(), initial)
    }

    /// Starts the clock in the basis distribution `pops`.
    pub fn with_initial_populations(&self, pops: &[f64]) -> Result<Self> {
        let diag: Vec<C64> = pops.iter().map(|&p| C64::new(p, 0.0)).collect();
        self.with_initial(DensityMatrix::new(ComplexMatrix::diagonal(&diag))?)
    }

    pub fn classical_rates(&self) -> Result<ClassicalRates> {
        if !self.is_classical() {
            return Err(AqpuError::Unsupported("clock is not classical (coherent clockwork or initial state)".into()));
        }
        let mut clockwork = Vec::new();
        for j in self.clockwork.jumps() {
            clockwork.extend(transitions(&j.op, j.entropy));
            if let Some(rev) = j.reverse() {
                clockwork.extend(transitions(&rev, j.entropy.map(|s| -s)));
            }
        }
        let tick_entropy = Some(self.ticks.reverse_entropy).filter(|s| s.is_finite());
        let tick = (0..self.max_ticks()).map(|n| transitions(self.ticks.jump(n), tick_entropy)).collect();
        let initial = self.initial.matrix().diag().iter().map(|z| z.re).collect();
        Ok(ClassicalRates {
            dim: self.dim(),
            clockwork,
            tick,
            untick_factor: self.ticks.untick_factor(),
            initial,
        })
    }

    /// The clockwork with the tick jump folded in as an ordinary jump: the clock
    /// seen without its tick register. Requires uniform tick jumps.
    pub fn marginal_clockwork(&self) -> Result<Clockwork> {
        let j = match &self.ticks.jumps {
            TickJumps::Uniform(j) => j.clone(),
            TickJumps::PerTick(_) => return Err(AqpuError::Unsupported("marginal clockwork needs a uniform tick".into())),
        };
        let entropy = Some(self.ticks.reverse_entropy).filter(|s| s.is_finite());
        let mut jumps = self.clockwork.jumps.clone();
        jumps.push(ClockJump { op: j, entropy, include_reverse: self.ticks.is_reversible() });
        Clockwork::new(self.clockwork.hamiltonian.matrix().clone(), jumps)
    }
}

fn ket0_state(d: usize) -> DensityMatrix {
    let mut m = ComplexMatrix::zeros(d, d);
    m[(0, 0)] = C64::new(1.0, 0.0);
    DensityMatrix::new(m).expect("basis projector")
}

fn ladder(d: usize, amp: f64) -> ComplexMatrix {
    let mut l = ComplexMatrix::zeros(d, d);
    for k in 0..d.saturating_sub(1) {
        l[(k + 1, k)] = C64::new(amp, 0.0);
    }
    l
}

fn closing(d: usize, amp: f64) -> ComplexMatrix {
    let mut j = ComplexMatrix::zeros(d, d);
    j[(0, d - 1)] = C64::new(amp, 0.0);
    j
}

/// D-level unidirectional ladder with jump rate DΓ on every edge; the tick is the
/// closing jump |D−1⟩ → |0⟩. Inter-tick times are Erlang(D, DΓ).
pub fn make_erlang_clock(d: usize, gamma: f64, max_ticks: usize) -> Result<ClockSpec> {
    if d == 0 {
        return Err(AqpuError::Config("Erlang clock needs D ≥ 1".into()));
    }
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(AqpuError::Config(format!("Γ = {gamma} must be positive")));
    }
    let amp = (d as f64 * gamma).sqrt();
    let jumps = if d > 1 { vec![ClockJump::irreversible(ladder(d, amp))] } else { vec![] };
    let clockwork = Clockwork::new(ComplexMatrix::zeros(d, d), jumps)?;
    let ticks = TickGenerator::new(TickJumps::Uniform(closing(d, amp)), max_ticks, f64::INFINITY)?;
    ClockSpec::new(clockwork, ticks, ket0_state(d))
}

/// Erlang ladder with local detailed balance: forward rate γe^(Δσ/2), reverse
/// rate γe^(−Δσ/2) on every edge including the tick, γ = DΓ / (2 sinh(Δσ/2)),
/// so the net tick rate is Γ.
pub fn make_biased_erlang_clock(d: usize, gamma: f64, delta_sigma: f64, max_ticks: usize) -> Result<ClockSpec> {
    if d == 0 {
        return Err(AqpuError::Config("Erlang clock needs D ≥ 1".into()));
    }
    if !(gamma.is_finite() && gamma > 0.0 && delta_sigma.is_finite() && delta_sigma > 0.0) {
        return Err(AqpuError::Config("biased Erlang clock needs Γ > 0 and finite Δσ > 0".into()));
    }
    let g = d as f64 * gamma / (2.0 * (0.5 * delta_sigma).sinh());
    let amp = (g * (0.5 * delta_sigma).exp()).sqrt();
    let jumps = if d > 1 { vec![ClockJump::with_entropy(ladder(d, amp), delta_sigma, true)] } else { vec![] };
    let clockwork = Clockwork::new(ComplexMatrix::zeros(d, d), jumps)?;
    let ticks = TickGenerator::new(TickJumps::Uniform(closing(d, amp)), max_ticks, delta_sigma)?;
    ClockSpec::new(clockwork, ticks, ket0_state(d))
}

/// Stationary distribution of a classical clockwork's rate matrix.
pub fn stationary_populations(clockwork: &Clockwork) -> Result<Vec<f64>> {
    let d = clockwork.dim();
    if !clockwork.is_classical() {
        return Err(AqpuError::Unsupported("stationary populations need a classical clockwork".into()));
    }
    // Rows: balance equations Σ_from Q[to][from] p_from = 0, the last replaced by Σ p = 1.
    let mut a = vec![vec![0.0; d + 1]; d];
    for j in clockwork.jumps() {
        let mut ts = transitions(&j.op, None);
        if let Some(rev) = j.reverse() {
            ts.extend(transitions(&rev, None));
        }
        for t in ts {
            a[t.to][t.from] += t.rate;
            a[t.from][t.from] -= t.rate;
        }
    }
    for x in a[d - 1].iter_mut() {
        *x = 1.0;
    }
    for row in a.iter_mut().take(d - 1) {
        row[d] = 0.0;
    }
    for col in 0..d {
        let piv = (col..d)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty");
        if a[piv][col].abs() < 1e-300 {
            return Err(AqpuError::InvalidState("clockwork has no unique stationary state".into()));
        }
        a.swap(col, piv);
        for r in 0..d {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    for k in col..=d {
                        a[r][k] -= f * a[col][k];
                    }
                }
            }
        }
    }
    Ok((0..d).map(|i| a[i][d] / a[i][i]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erlang_structure() {
        let c = make_erlang_clock(4, 2.0, 3).unwrap();
        assert!(c.is_classical());
        let r = c.classical_rates().unwrap();
        assert_eq!(r.clockwork.len(), 3);
        assert!(r.clockwork.iter().all(|t| (t.rate - 8.0).abs() < 1e-12 && t.to == t.from + 1));
        assert_eq!(r.tick.len(), 3);
        let t = r.tick[0][0];
        assert_eq!((t.from, t.to, t.entropy, r.tick[0].len()), (3, 0, None, 1));
        assert!((t.rate - 8.0).abs() < 1e-12);
        assert_eq!(r.untick_factor, 0.0);
        assert_eq!(r.initial, vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn single_level_erlang_is_poisson() {
        let c = make_erlang_clock(1, 1.5, 2).unwrap();
        let r = c.classical_rates().unwrap();
        assert!(r.clockwork.is_empty());
        assert!((r.tick[0][0].rate - 1.5).abs() < 1e-15);
        assert!(make_erlang_clock(0, 1.0, 2).is_err());
    }

    #[test]
    fn biased_erlang_rates_and_reverse_convention() {
        let (d, g, s) = (5, 1.0, 3.0);
        let c = make_biased_erlang_clock(d, g, s, 2).unwrap();
        let j = &c.clockwork().jumps()[0];
        let rev = j.reverse().unwrap();
        assert!((&rev - &j.op.adjoint().scale_real((-s / 2.0).exp())).max_abs() < 1e-15);
        let r = c.classical_rates().unwrap();
        let f = r.clockwork.iter().find(|t| t.entropy == Some(s)).unwrap().rate;
        let b = r.clockwork.iter().find(|t| t.entropy == Some(-s)).unwrap().rate;
        assert!((f / b - s.exp()).abs() < 1e-10);
        assert!((f - b - d as f64 * g).abs() < 1e-10);
        assert!((r.untick_factor - (-s).exp()).abs() < 1e-15);
    }

    #[test]
    fn coherent_clockwork_is_not_classical() {
        let h = crate::numerics::matrix::pauli_x();
        let cw = Clockwork::new(h, vec![]).unwrap();
        assert!(!cw.is_classical());
        let merging = ComplexMatrix::from_real(&[&[1.0, 1.0], &[0.0, 0.0]]);
        let cw = Clockwork::new(ComplexMatrix::zeros(2, 2), vec![ClockJump::irreversible(merging)]).unwrap();
        assert!(!cw.is_classical());
    }

    #[test]
    fn reverse_without_entropy_rejected() {
        let op = ladder(2, 1.0);
        let j = ClockJump { op, entropy: None, include_reverse: true };
        assert!(Clockwork::new(ComplexMatrix::zeros(2, 2), vec![j]).is_err());
    }

    #[test]
    fn ring_stationary_state_is_uniform() {
        let c = make_biased_erlang_clock(6, 1.0, 2.0, 1).unwrap();
        let p = stationary_populations(&c.marginal_clockwork().unwrap()).unwrap();
        for x in p {
            assert!((x - 1.0 / 6.0).abs() < 1e-12);
        }
    }

    #[test]
    fn reverse_tick_entropy_validated() {
        let c = make_erlang_clock(2, 1.0, 2).unwrap();
        assert!(c.with_reverse_ticks(0.0).is_err());
        assert!(c.with_reverse_ticks(2.0).unwrap().ticks().is_reversible());
    }
}
