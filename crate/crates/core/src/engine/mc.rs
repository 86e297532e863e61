//! Monte Carlo over tick-time trajectories: each sample applies the piecewise
//! unitary U(Γ) fixed by its tick times and the results are averaged.

use rayon::prelude::*;

use super::{check_card, SolverConfig};
use crate::clock::{stream_rng, ClockSpec, TickSampler};
use crate::error::{AqpuError, Result};
use crate::model::{GateSet, PunchCard};
use crate::numerics::eigen::Eigen;
use crate::numerics::matrix::{ComplexMatrix, C64, ZERO};
use crate::numerics::types::DensityMatrix;

/// Trajectories per work unit; chunk boundaries never depend on the thread count.
const CHUNK: usize = 256;

#[derive(Clone, Debug)]
pub struct McResult {
    pub t: f64,
    pub mean: ComplexMatrix,
    /// Standard error of each entry: real part for Re, imaginary part for Im.
    pub std_err: ComplexMatrix,
    pub trajectories: usize,
}

impl McResult {
    /// Largest |Δ|/SE over entries and real/imaginary parts; entries with zero
    /// error count only if they differ by more than `floor`.
    pub fn max_standardized_deviation(&self, other: &ComplexMatrix, floor: f64) -> f64 {
        let mut worst = 0.0f64;
        for (k, (m, o)) in self.mean.data().iter().zip(other.data()).enumerate() {
            let se = self.std_err.data()[k];
            for (d, s) in [((m.re - o.re).abs(), se.re), ((m.im - o.im).abs(), se.im)] {
                let z = if s > 0.0 {
                    d / s
                } else if d > floor {
                    f64::INFINITY
                } else {
                    0.0
                };
                worst = worst.max(z);
            }
        }
        worst
    }
}

struct Propagator {
    eigens: Vec<Option<Eigen>>,
}

impl Propagator {
    /// U(Γ) for the register path up to `t_end`.
    fn unitary(&self, events: &[(f64, usize)], t_end: f64, d: usize) -> ComplexMatrix {
        let mut u = ComplexMatrix::identity(d);
        let mut t0 = 0.0;
        let mut sector = 0usize;
        for &(t, next) in events.iter().chain(std::iter::once(&(t_end, usize::MAX))) {
            if let Some(e) = &self.eigens[sector] {
                let dt = t - t0;
                u = e.map(|l| C64::from_polar(1.0, -l * dt)).matmul(&u);
            }
            t0 = t;
            sector = next;
        }
        u
    }
}

/// Averages U(Γ) ρ U(Γ)† at `config.t_end` over `config.trajectory_count`
/// sampled tick sequences. Trajectory i draws from stream i of
/// `config.rng_seed`, so results are bit-identical across thread counts.
pub fn evolve_monte_carlo(
    spec: &ClockSpec,
    gs: &GateSet,
    card: &PunchCard,
    rho: &DensityMatrix,
    config: &SolverConfig,
    sampler: &TickSampler,
) -> Result<McResult> {
    config.validate()?;
    check_card(spec, gs, card, rho)?;
    let steps = card.classical_steps()?;
    if let TickSampler::JumpChain(_) = sampler {
        if !spec.is_classical() {
            return Err(AqpuError::Unsupported("jump-chain sampling needs a classical clock".into()));
        }
    }
    let m = spec.max_ticks();
    let mut eigens: Vec<Option<Eigen>> = Vec::with_capacity(m + 1);
    for &a in steps {
        let g = gs.gate(a)?;
        eigens.push((a != crate::model::IDLE).then(|| g.eigen.clone()));
    }
    eigens.push(None);
    let prop = Propagator { eigens };
    let d = gs.dim();
    let t_end = config.t_end;
    let n = config.trajectory_count;

    let run = |i: usize| -> ComplexMatrix {
        let mut rng = stream_rng(config.rng_seed, i as u64);
        let ev: Vec<(f64, usize)> = sampler.sample_events(m, t_end, &mut rng).iter().map(|e| (e.time, e.sector)).collect();
        rho.matrix().conjugate_by(&prop.unitary(&ev, t_end, d))
    };
    // Shifting by the first sample keeps the variance exact for degenerate samplers.
    let shift = run(0);
    let chunks: Vec<(Vec<C64>, Vec<C64>)> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut s = vec![ZERO; d * d];
            let mut s2 = vec![ZERO; d * d];
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let x = run(i);
                for ((a, b), (v, v0)) in s.iter_mut().zip(s2.iter_mut()).zip(x.data().iter().zip(shift.data())) {
                    let dv = v - v0;
                    *a += dv;
                    *b += C64::new(dv.re * dv.re, dv.im * dv.im);
                }
            }
            (s, s2)
        })
        .collect();
    let mut s = vec![ZERO; d * d];
    let mut s2 = vec![ZERO; d * d];
    for (a, b) in &chunks {
        for k in 0..d * d {
            s[k] += a[k];
            s2[k] += b[k];
        }
    }
    let nf = n as f64;
    let mean: Vec<C64> = s.iter().zip(shift.data()).map(|(a, v0)| v0 + a / nf).collect();
    let se = |sum: f64, sq: f64| {
        if n < 2 {
            return 0.0;
        }
        let var = ((sq - sum * sum / nf) / (nf - 1.0)).max(0.0);
        (var / nf).sqrt()
    };
    let std_err: Vec<C64> = s.iter().zip(&s2).map(|(a, b)| C64::new(se(a.re, b.re), se(a.im, b.im))).collect();
    Ok(McResult { t: t_end, mean: ComplexMatrix::new(d, d, mean)?, std_err: ComplexMatrix::new(d, d, std_err)?, trajectories: n })
}
