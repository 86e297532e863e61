//! Tick-number-resolved block dynamics shared by the block, full, reversible and
//! clock-statistics solvers.
//!
//! The joint state is kept as one operator per (clock level, tick sector) for
//! classical clocks, or one operator on clock ⊗ target per sector otherwise.
//! Nothing is ever divided by P[N(t) = n].

use crate::clock::{ClockSpec, Transition};
use crate::error::{AqpuError, Result};
use crate::numerics::matrix::{ComplexMatrix, C64, I, ONE, ZERO};
use crate::numerics::ode::{integrate_ode_with, OdeOptions};
use crate::numerics::sparse::SparseMatrix;
use crate::numerics::types::HermitianOperator;
use crate::numerics::uniformization::uniformized_observables;
use crate::numerics::{as_complex, as_complex_mut};

/// Treatment of the top sector n = M.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum TopMode {
    /// Full aQPU semantics: clockwork runs, no tick out, unticks allowed.
    Live,
    /// First passage: no unticks out of the top sector.
    Absorbing,
    /// No dynamics in the top sector; it only accumulates inflow.
    Frozen,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Method {
    Uniformization,
    Dopri,
}

pub(crate) struct BlockProblem<'a> {
    pub spec: &'a ClockSpec,
    /// H_n for n = 0..=M.
    pub sectors: Vec<HermitianOperator>,
    pub target_init: ComplexMatrix,
    pub top: TopMode,
}

/// Observables of the joint state at one time.
#[derive(Clone, Debug)]
pub(crate) struct Snapshot {
    /// Clock basis populations per sector, pops[n][c].
    pub pops: Vec<Vec<f64>>,
    /// σ_T^(n) in the target's original basis.
    pub sigma: Vec<ComplexMatrix>,
    /// Tick current out of sector n into n + 1, n < M.
    pub forward: Vec<f64>,
    /// Untick current from sector n + 1 back into n, n < M.
    pub backward: Vec<f64>,
}

impl Snapshot {
    pub fn sector_probs(&self) -> Vec<f64> {
        self.pops.iter().map(|p| p.iter().sum()).collect()
    }

    pub fn target(&self) -> ComplexMatrix {
        let d = self.sigma[0].rows();
        self.sigma.iter().fold(ComplexMatrix::zeros(d, d), |acc, s| &acc + s)
    }
}

trait System {
    fn len(&self) -> usize;
    fn initial(&self) -> Vec<f64>;
    fn apply(&self, y: &[f64], out: &mut [f64]);
    fn observe(&self, y: &[f64], obs: &mut [f64]);
    fn rate_bound(&self, t_end: f64) -> Option<f64>;
}

struct Layout {
    clock: usize,
    target: usize,
    sectors: usize,
}

impl Layout {
    fn obs_len(&self) -> usize {
        let m = self.sectors - 1;
        self.sectors * (self.clock + 2 * self.target * self.target) + 2 * m
    }

    fn decode(&self, obs: &[f64]) -> Snapshot {
        let (dc, d, s) = (self.clock, self.target, self.sectors);
        let stride = dc + 2 * d * d;
        let mut pops = Vec::with_capacity(s);
        let mut sigma = Vec::with_capacity(s);
        for n in 0..s {
            let base = n * stride;
            pops.push(obs[base..base + dc].to_vec());
            let z = as_complex(&obs[base + dc..base + stride]).to_vec();
            sigma.push(ComplexMatrix::new(d, d, z).expect("shape"));
        }
        let m = s - 1;
        let tail = s * stride;
        Snapshot {
            pops,
            sigma,
            forward: obs[tail..tail + m].to_vec(),
            backward: obs[tail + m..tail + 2 * m].to_vec(),
        }
    }
}

fn untick_allowed(n: usize, m: usize, top: TopMode, factor: f64) -> bool {
    n >= 1 && factor > 0.0 && !(n == m && top != TopMode::Live)
}

/// out += s · U X U† for d×d row-major blocks.
fn sandwich_dense(u: &[C64], x: &[C64], d: usize, s: f64, scratch: &mut [C64], out: &mut [C64]) {
    for i in 0..d {
        for j in 0..d {
            let mut acc = ZERO;
            for k in 0..d {
                acc += u[i * d + k] * x[k * d + j];
            }
            scratch[i * d + j] = acc;
        }
    }
    for i in 0..d {
        for j in 0..d {
            let mut acc = ZERO;
            for k in 0..d {
                acc += scratch[i * d + k] * u[j * d + k].conj();
            }
            out[i * d + j] += acc * s;
        }
    }
}

struct ClassicalSystem {
    layout: Layout,
    omega: Vec<Vec<f64>>,
    basis: Vec<ComplexMatrix>,
    /// U_n = W_{n+1}† W_n and its adjoint, for n < M.
    up: Vec<Vec<C64>>,
    down: Vec<Vec<C64>>,
    clockwork: Vec<Transition>,
    tick: Vec<Vec<Transition>>,
    untick: f64,
    exit: Vec<Vec<f64>>,
    top: TopMode,
    y0: Vec<f64>,
}

impl ClassicalSystem {
    fn new(p: &BlockProblem<'_>) -> Result<Self> {
        let rates = p.spec.classical_rates()?;
        let (dc, s, m) = (rates.dim, p.sectors.len(), p.spec.max_ticks());
        let d = p.target_init.rows();
        let eig: Vec<_> = p.sectors.iter().map(|h| h.eigen()).collect();
        let omega = eig
            .iter()
            .map(|e| (0..d * d).map(|k| e.values[k / d] - e.values[k % d]).collect())
            .collect();
        let basis: Vec<ComplexMatrix> = eig.into_iter().map(|e| e.vectors).collect();
        let up: Vec<ComplexMatrix> = (0..m).map(|n| basis[n + 1].adjoint().matmul(&basis[n])).collect();
        let down = up.iter().map(|u| u.adjoint().into_data()).collect();
        let up = up.into_iter().map(|u| u.into_data()).collect();

        let cw_exit = rates.clockwork_exit();
        let mut exit = vec![vec![0.0; dc]; s];
        for (n, e) in exit.iter_mut().enumerate() {
            if n == m && p.top == TopMode::Frozen {
                continue;
            }
            e.copy_from_slice(&cw_exit);
            if n < m {
                for t in &rates.tick[n] {
                    e[t.from] += t.rate;
                }
            }
            if untick_allowed(n, m, p.top, rates.untick_factor) {
                for t in &rates.tick[n - 1] {
                    e[t.to] += rates.untick_factor * t.rate;
                }
            }
        }

        let rho0 = p.target_init.conjugate_by(&basis[0].adjoint());
        let mut y0 = vec![ZERO; s * dc * d * d];
        for (c, &pc) in rates.initial.iter().enumerate() {
            if pc != 0.0 {
                for (k, v) in rho0.data().iter().enumerate() {
                    y0[c * d * d + k] = v * pc;
                }
            }
        }
        Ok(Self {
            layout: Layout { clock: dc, target: d, sectors: s },
            omega,
            basis,
            up,
            down,
            clockwork: rates.clockwork,
            tick: rates.tick,
            untick: rates.untick_factor,
            exit,
            top: p.top,
            y0: crate::numerics::flatten_complex(&y0),
        })
    }

    fn block(&self, n: usize, c: usize) -> std::ops::Range<usize> {
        let b = self.layout.target * self.layout.target;
        let i = (n * self.layout.clock + c) * b;
        i..i + b
    }

    fn frozen(&self, n: usize) -> bool {
        self.top == TopMode::Frozen && n + 1 == self.layout.sectors
    }
}

impl System for ClassicalSystem {
    fn len(&self) -> usize {
        self.y0.len()
    }

    fn initial(&self) -> Vec<f64> {
        self.y0.clone()
    }

    fn apply(&self, y: &[f64], out: &mut [f64]) {
        let x = as_complex(y);
        let o = as_complex_mut(out);
        let (dc, d, s) = (self.layout.clock, self.layout.target, self.layout.sectors);
        let m = s - 1;
        for n in 0..s {
            let om = &self.omega[n];
            for c in 0..dc {
                let r = self.block(n, c);
                let e = self.exit[n][c];
                if self.frozen(n) {
                    o[r].fill(ZERO);
                    continue;
                }
                for ((ov, xv), w) in o[r.clone()].iter_mut().zip(&x[r]).zip(om) {
                    *ov = -C64::new(e, *w) * xv;
                }
            }
        }
        for n in 0..s {
            if self.frozen(n) {
                continue;
            }
            for t in &self.clockwork {
                let (src, dst) = (self.block(n, t.from), self.block(n, t.to));
                for (ov, xv) in o[dst].iter_mut().zip(&x[src]) {
                    *ov += xv * t.rate;
                }
            }
        }
        let mut scratch = vec![ZERO; d * d];
        for n in 0..m {
            for t in &self.tick[n] {
                let (src, dst) = (self.block(n, t.from), self.block(n + 1, t.to));
                sandwich_dense(&self.up[n], &x[src], d, t.rate, &mut scratch, &mut o[dst]);
            }
            if untick_allowed(n + 1, m, self.top, self.untick) {
                for t in &self.tick[n] {
                    let (src, dst) = (self.block(n + 1, t.to), self.block(n, t.from));
                    sandwich_dense(&self.down[n], &x[src], d, self.untick * t.rate, &mut scratch, &mut o[dst]);
                }
            }
        }
    }

    fn observe(&self, y: &[f64], obs: &mut [f64]) {
        let x = as_complex(y);
        let (dc, d, s) = (self.layout.clock, self.layout.target, self.layout.sectors);
        let m = s - 1;
        let stride = dc + 2 * d * d;
        for n in 0..s {
            let base = n * stride;
            let mut acc = vec![ZERO; d * d];
            for c in 0..dc {
                let blk = &x[self.block(n, c)];
                obs[base + c] = (0..d).map(|i| blk[i * d + i].re).sum();
                for (a, v) in acc.iter_mut().zip(blk) {
                    *a += v;
                }
            }
            let sig = ComplexMatrix::new(d, d, acc).expect("shape").conjugate_by(&self.basis[n]);
            obs[base + dc..base + stride].copy_from_slice(&crate::numerics::flatten_complex(sig.data()));
        }
        let tail = s * stride;
        for n in 0..m {
            obs[tail + n] = self.tick[n].iter().map(|t| t.rate * obs[n * stride + t.from]).sum();
            obs[tail + m + n] = if untick_allowed(n + 1, m, self.top, self.untick) {
                self.tick[n].iter().map(|t| self.untick * t.rate * obs[(n + 1) * stride + t.to]).sum()
            } else {
                0.0
            };
        }
    }

    fn rate_bound(&self, t_end: f64) -> Option<f64> {
        let exit = self.exit.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
        let w = self.omega.iter().flatten().fold(0.0f64, |a, &b| a.max(b.abs()));
        Some((exit + w).max(w * w * t_end).max(1e-12))
    }
}

/// Coherent clockwork: one dense operator on clock ⊗ target per sector.
struct CoherentSystem {
    layout: Layout,
    k: Vec<SparseMatrix>,
    jumps: Vec<Vec<SparseMatrix>>,
    /// J_n ⊗ I for n < M.
    tick: Vec<SparseMatrix>,
    /// J_n† ⊗ I for n < M (used with the untick factor).
    tick_adj: Vec<SparseMatrix>,
    tick_weight: Vec<SparseMatrix>,
    untick_weight: Vec<SparseMatrix>,
    untick: f64,
    top: TopMode,
    y0: Vec<f64>,
}

impl CoherentSystem {
    fn new(p: &BlockProblem<'_>) -> Result<Self> {
        let spec = p.spec;
        let (dc, s, m) = (spec.dim(), p.sectors.len(), spec.max_ticks());
        let d = p.target_init.rows();
        let id_t = ComplexMatrix::identity(d);
        let id_c = ComplexMatrix::identity(dc);
        let untick = spec.ticks().untick_factor();
        let cw_ops: Vec<ComplexMatrix> = spec.clockwork().lindblad_ops().iter().map(|l| l.kron(&id_t)).collect();
        let cw_decay = cw_ops
            .iter()
            .fold(ComplexMatrix::zeros(dc * d, dc * d), |acc, l| &acc + &l.adjoint().matmul(l));
        let h_c = spec.clockwork().hamiltonian().matrix().kron(&id_t);
        let tick_dense: Vec<ComplexMatrix> = (0..m).map(|n| spec.ticks().jump(n).kron(&id_t)).collect();
        let mut k = Vec::with_capacity(s);
        let mut jumps = Vec::with_capacity(s);
        for n in 0..s {
            if n == m && p.top == TopMode::Frozen {
                k.push(SparseMatrix::from_dense(&ComplexMatrix::zeros(dc * d, dc * d)));
                jumps.push(vec![]);
                continue;
            }
            let h = &h_c + &id_c.kron(p.sectors[n].matrix());
            let mut decay = cw_decay.clone();
            if n < m {
                decay = &decay + &tick_dense[n].adjoint().matmul(&tick_dense[n]);
            }
            if untick_allowed(n, m, p.top, untick) {
                let j = &tick_dense[n - 1];
                decay = &decay + &j.matmul(&j.adjoint()).scale_real(untick);
            }
            let kn = &h.scale(-I) - &decay.scale_real(0.5);
            k.push(SparseMatrix::from_dense(&kn));
            jumps.push(cw_ops.iter().map(SparseMatrix::from_dense).collect());
        }
        let tick_weight = tick_dense.iter().map(|j| SparseMatrix::from_dense(&j.adjoint().matmul(j))).collect();
        let untick_weight = tick_dense.iter().map(|j| SparseMatrix::from_dense(&j.matmul(&j.adjoint()))).collect();
        let tick_adj = tick_dense.iter().map(|j| SparseMatrix::from_dense(&j.adjoint())).collect();
        let tick = tick_dense.iter().map(SparseMatrix::from_dense).collect();
        let joint = spec.initial().matrix().kron(&p.target_init);
        let mut y0 = vec![ZERO; s * joint.data().len()];
        y0[..joint.data().len()].copy_from_slice(joint.data());
        Ok(Self {
            layout: Layout { clock: dc, target: d, sectors: s },
            k,
            jumps,
            tick,
            tick_adj,
            tick_weight,
            untick_weight,
            untick,
            top: p.top,
            y0: crate::numerics::flatten_complex(&y0),
        })
    }

    fn nn(&self) -> usize {
        self.layout.clock * self.layout.target
    }
}

impl System for CoherentSystem {
    fn len(&self) -> usize {
        self.y0.len()
    }

    fn initial(&self) -> Vec<f64> {
        self.y0.clone()
    }

    fn apply(&self, y: &[f64], out: &mut [f64]) {
        let x = as_complex(y);
        let o = as_complex_mut(out);
        o.fill(ZERO);
        let nn = self.nn();
        let b = nn * nn;
        let s = self.layout.sectors;
        let m = s - 1;
        let mut scratch = Vec::new();
        for n in 0..s {
            let xn = &x[n * b..(n + 1) * b];
            let on = &mut o[n * b..(n + 1) * b];
            self.k[n].mul_dense_acc(xn, nn, ONE, on);
            self.k[n].dense_mul_adjoint_acc(xn, nn, ONE, on);
            for l in &self.jumps[n] {
                l.sandwich_acc(xn, ONE, &mut scratch, on);
            }
        }
        for n in 0..m {
            let (lo, hi) = o.split_at_mut((n + 1) * b);
            self.tick[n].sandwich_acc(&x[n * b..(n + 1) * b], ONE, &mut scratch, &mut hi[..b]);
            if untick_allowed(n + 1, m, self.top, self.untick) {
                let src = &x[(n + 1) * b..(n + 2) * b];
                self.tick_adj[n].sandwich_acc(src, C64::new(self.untick, 0.0), &mut scratch, &mut lo[n * b..]);
            }
        }
    }

    fn observe(&self, y: &[f64], obs: &mut [f64]) {
        let x = as_complex(y);
        let (dc, d, s) = (self.layout.clock, self.layout.target, self.layout.sectors);
        let m = s - 1;
        let nn = self.nn();
        let b = nn * nn;
        let stride = dc + 2 * d * d;
        for n in 0..s {
            let xn = &x[n * b..(n + 1) * b];
            let base = n * stride;
            let mut sig = vec![ZERO; d * d];
            for c in 0..dc {
                let mut p = 0.0;
                for i in 0..d {
                    let r = c * d + i;
                    p += xn[r * nn + r].re;
                    for j in 0..d {
                        sig[i * d + j] += xn[r * nn + c * d + j];
                    }
                }
                obs[base + c] = p;
            }
            obs[base + dc..base + stride].copy_from_slice(&crate::numerics::flatten_complex(&sig));
        }
        let tail = s * stride;
        for n in 0..m {
            obs[tail + n] = self.tick_weight[n].trace_mul(&x[n * b..(n + 1) * b]).re;
            obs[tail + m + n] = if untick_allowed(n + 1, m, self.top, self.untick) {
                self.untick * self.untick_weight[n].trace_mul(&x[(n + 1) * b..(n + 2) * b]).re
            } else {
                0.0
            };
        }
    }

    fn rate_bound(&self, _t_end: f64) -> Option<f64> {
        None
    }
}

fn validate(p: &BlockProblem<'_>) -> Result<()> {
    let m = p.spec.max_ticks();
    if p.sectors.len() != m + 1 {
        return Err(AqpuError::Dimension(format!("{} sector Hamiltonians for M = {m}", p.sectors.len())));
    }
    let d = p.target_init.rows();
    if !p.target_init.is_square() || p.sectors.iter().any(|h| h.dim() != d) {
        return Err(AqpuError::Dimension("sector Hamiltonians and target state disagree".into()));
    }
    Ok(())
}

/// Picks uniformization for classical clocks and DOPRI otherwise.
pub(crate) fn default_method(spec: &ClockSpec) -> Method {
    if spec.is_classical() {
        Method::Uniformization
    } else {
        Method::Dopri
    }
}

pub(crate) fn solve(p: &BlockProblem<'_>, times: &[f64], method: Method, opts: &OdeOptions) -> Result<Vec<Snapshot>> {
    validate(p)?;
    let layout = Layout { clock: p.spec.dim(), target: p.target_init.rows(), sectors: p.sectors.len() };
    let sys: Box<dyn System> = if p.spec.is_classical() {
        Box::new(ClassicalSystem::new(p)?)
    } else {
        Box::new(CoherentSystem::new(p)?)
    };
    let obs_len = layout.obs_len();
    let raw = match method {
        Method::Uniformization => {
            let t_end = times.iter().copied().fold(0.0, f64::max);
            let q = sys.rate_bound(t_end).ok_or_else(|| {
                AqpuError::Unsupported("uniformization needs a classical clock; use the DOPRI integrator".into())
            })?;
            let mut scratch = vec![0.0; sys.len()];
            uniformized_observables(|y, out| sys.apply(y, out), q, &sys.initial(), times, obs_len, |y, obs| {
                scratch.copy_from_slice(y);
                sys.observe(&scratch, obs)
            })?
        }
        Method::Dopri => {
            let mut res = vec![vec![0.0; obs_len]; times.len()];
            let mut rhs = |_t: f64, y: &[f64], out: &mut [f64]| sys.apply(y, out);
            integrate_ode_with(&mut rhs, &sys.initial(), times, *opts, |i, y| sys.observe(y, &mut res[i]))?;
            res
        }
    };
    for r in &raw {
        if r.iter().any(|v| !v.is_finite()) {
            return Err(AqpuError::NonFinite("block solver observables".into()));
        }
    }
    Ok(raw.iter().map(|r| layout.decode(r)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::{make_biased_erlang_clock, make_erlang_clock, ClockJump, ClockSpec, Clockwork, TickGenerator, TickJumps};
    use crate::model::gates::hadamard_generator;
    use crate::numerics::matrix::pauli_z;
    use crate::numerics::types::DensityMatrix;

    fn plus_problem(spec: &ClockSpec, top: TopMode) -> BlockProblem<'_> {
        let m = spec.max_ticks();
        let mut sectors = vec![HermitianOperator::new(hadamard_generator()).unwrap(); m];
        sectors.push(HermitianOperator::zero(2));
        let mut rho = ComplexMatrix::zeros(2, 2);
        rho[(0, 0)] = ONE;
        BlockProblem { spec, sectors, target_init: rho, top }
    }

    fn erlang_pdf(k: usize, rate: f64, t: f64) -> f64 {
        let lg = statrs::function::gamma::ln_gamma(k as f64);
        (k as f64 * rate.ln() + (k as f64 - 1.0) * t.ln() - rate * t - lg).exp()
    }

    #[test]
    fn integrators_agree_on_classical_blocks() {
        let spec = make_erlang_clock(5, 1.0, 2).unwrap().with_reverse_ticks(1.5).unwrap();
        let p = plus_problem(&spec, TopMode::Live);
        let times = [0.3, 1.0, 2.5];
        let opts = OdeOptions::with_tolerances(1e-11, 1e-13);
        let a = solve(&p, &times, Method::Uniformization, &opts).unwrap();
        let b = solve(&p, &times, Method::Dopri, &opts).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((&x.target() - &y.target()).max_abs() < 1e-9);
            for (u, v) in x.forward.iter().zip(&y.forward) {
                assert!((u - v).abs() < 1e-9);
            }
            for (u, v) in x.backward.iter().zip(&y.backward) {
                assert!((u - v).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn conservation_and_block_consistency() {
        let spec = make_biased_erlang_clock(4, 1.0, 2.0, 3).unwrap();
        let p = plus_problem(&spec, TopMode::Live);
        let snaps = solve(&p, &[0.5, 2.0, 6.0], Method::Uniformization, &OdeOptions::default()).unwrap();
        for s in snaps {
            let total: f64 = s.sector_probs().iter().sum();
            assert!((total - 1.0).abs() < 1e-10);
            for (probs, sig) in s.pops.iter().zip(&s.sigma) {
                let pn: f64 = probs.iter().sum();
                assert!((sig.trace().re - pn).abs() < 1e-10);
                assert!(sig.hermiticity_defect() < 1e-12);
            }
        }
    }

    #[test]
    fn first_tick_flux_is_erlang_density() {
        let spec = make_erlang_clock(6, 1.0, 1).unwrap();
        let p = BlockProblem {
            spec: &spec,
            sectors: vec![HermitianOperator::zero(1), HermitianOperator::zero(1)],
            target_init: ComplexMatrix::identity(1),
            top: TopMode::Absorbing,
        };
        let times: Vec<f64> = (1..30).map(|k| 0.1 * k as f64).collect();
        let snaps = solve(&p, &times, Method::Uniformization, &OdeOptions::default()).unwrap();
        for (t, s) in times.iter().zip(&snaps) {
            assert!((s.forward[0] - erlang_pdf(6, 6.0, *t)).abs() < 1e-10);
        }
    }

    #[test]
    fn coherent_system_matches_classical_on_diagonal_clock() {
        // A diagonal H_C never creates clock coherences, so the coherent path
        // must reproduce the classical one.
        let base = make_erlang_clock(2, 1.0, 2).unwrap();
        let p = plus_problem(&base, TopMode::Live);
        let times = [0.7, 1.9];
        let opts = OdeOptions::with_tolerances(1e-11, 1e-13);
        let a = solve(&p, &times, Method::Uniformization, &opts).unwrap();

        let r = base.classical_rates().unwrap();
        let amp = r.tick[0][0].rate.sqrt();
        let mut l = ComplexMatrix::zeros(2, 2);
        l[(1, 0)] = C64::new(amp, 0.0);
        let cw = Clockwork::new(pauli_z().scale_real(0.3), vec![ClockJump::irreversible(l.clone())]).unwrap();
        let mut j = ComplexMatrix::zeros(2, 2);
        j[(0, 1)] = C64::new(amp, 0.0);
        let ticks = TickGenerator::new(TickJumps::Uniform(j), 2, f64::INFINITY).unwrap();
        let init = DensityMatrix::pure(&[ONE, ZERO]).unwrap();
        let spec = ClockSpec::new(cw, ticks, init).unwrap();
        assert!(spec.is_classical());
        let pc = plus_problem(&spec, TopMode::Live);
        let sys = CoherentSystem::new(&pc).unwrap();
        let mut res = vec![vec![0.0; Layout { clock: 2, target: 2, sectors: 3 }.obs_len()]; 2];
        let mut rhs = |_t: f64, y: &[f64], out: &mut [f64]| sys.apply(y, out);
        integrate_ode_with(&mut rhs, &sys.initial(), &times, opts, |i, y| sys.observe(y, &mut res[i])).unwrap();
        let layout = Layout { clock: 2, target: 2, sectors: 3 };
        for (x, raw) in a.iter().zip(&res) {
            let y = layout.decode(raw);
            assert!((&x.target() - &y.target()).max_abs() < 1e-9);
            assert!((x.forward[1] - y.forward[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn frozen_top_accumulates_inflow() {
        let spec = make_erlang_clock(3, 1.0, 1).unwrap();
        let p = BlockProblem {
            spec: &spec,
            sectors: vec![HermitianOperator::zero(1), HermitianOperator::zero(1)],
            target_init: ComplexMatrix::identity(1),
            top: TopMode::Frozen,
        };
        let s = solve(&p, &[40.0], Method::Uniformization, &OdeOptions::default()).unwrap();
        assert!((s[0].pops[1][0] - 1.0).abs() < 1e-12);
        assert!(s[0].pops[1][1..].iter().all(|&x| x.abs() < 1e-14));
    }
}
