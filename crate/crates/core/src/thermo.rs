//! Entropy production of the clockwork, the ticks and initialization, and the
//! fidelity–entropy bounds built on them. Units of k_B.

use crate::clock::{stationary_populations, ClockSpec, Clockwork};
use crate::engine::BlockTrajectory;
use crate::error::{AqpuError, Result};
use crate::numerics::matrix::{ComplexMatrix, C64, ZERO};
use crate::numerics::quadrature::cumulative_trapezoid;

/// Relative tolerance of the per-tick identity ⟨Σ_cw(T)⟩ = ⟨N(T)⟩ Σ_cw,τ.
pub const PER_TICK_TOLERANCE: f64 = 0.01;

/// F = Σ_ℓ Δσ_ℓ (L_ℓ†L_ℓ − L̄_ℓ†L̄_ℓ), so that ⟨Σ̇_cw⟩ = tr[F ρ_C].
#[derive(Clone, Debug)]
pub struct ClockworkEntropy {
    flux: ComplexMatrix,
}

impl ClockworkEntropy {
    /// Every jump must declare Δσ; reverse terms enter only for jumps whose
    /// reverse is part of the dynamics.
    pub fn new(clockwork: &Clockwork) -> Result<Self> {
        let d = clockwork.dim();
        let mut flux = ComplexMatrix::zeros(d, d);
        for (k, j) in clockwork.jumps().iter().enumerate() {
            let s = j.entropy.ok_or_else(|| AqpuError::Config(format!("clockwork jump {k} has no declared Δσ")))?;
            if !s.is_finite() {
                return Err(AqpuError::Config(format!("clockwork jump {k} has infinite Δσ")));
            }
            flux.axpy(C64::new(s, 0.0), &j.op.adjoint().matmul(&j.op));
            if let Some(r) = j.reverse() {
                flux.axpy(C64::new(-s, 0.0), &r.adjoint().matmul(&r));
            }
        }
        Ok(Self { flux })
    }

    pub fn rate(&self, rho_c: &ComplexMatrix) -> Result<f64> {
        if rho_c.rows() != self.flux.rows() {
            return Err(AqpuError::Dimension("clock state does not match the clockwork".into()));
        }
        Ok(self.flux.matmul(rho_c).trace().re)
    }

    /// Rate for a state diagonal in the clock basis.
    pub fn rate_populations(&self, pops: &[f64]) -> Result<f64> {
        if pops.len() != self.flux.rows() {
            return Err(AqpuError::Dimension("population vector does not match the clockwork".into()));
        }
        Ok(pops.iter().enumerate().map(|(i, p)| p * self.flux[(i, i)].re).sum())
    }

    fn is_diagonal(&self) -> bool {
        let n = self.flux.rows();
        (0..n).all(|r| (0..n).all(|c| r == c || self.flux[(r, c)] == ZERO))
    }
}

/// ⟨Σ̇_cw(t)⟩ for each clock state.
pub fn entropy_rate_clockwork(clockwork: &Clockwork, states: &[ComplexMatrix]) -> Result<Vec<f64>> {
    let e = ClockworkEntropy::new(clockwork)?;
    states.iter().map(|r| e.rate(r)).collect()
}

/// ⟨Σ_cw(T)⟩ = ∫₀ᵀ ⟨Σ̇_cw⟩ dt on the grid (trapezoid), starting from 0.
pub fn integrate_entropy(t: &[f64], rate: &[f64]) -> Result<Vec<f64>> {
    if t.len() != rate.len() {
        return Err(AqpuError::Dimension("time grid and rate trace differ in length".into()));
    }
    if t.windows(2).any(|w| w[1] < w[0]) {
        return Err(AqpuError::Config("time grid must be sorted".into()));
    }
    Ok(cumulative_trapezoid(t, rate))
}

/// Δσ_tick Σ_n (p_(n+1) − p̄_n): the tick contribution at one time.
pub fn tick_entropy_rate(forward: &[f64], backward: &[f64], delta_sigma_tick: f64) -> Result<f64> {
    if !delta_sigma_tick.is_finite() {
        return Err(AqpuError::Config("tick entropy needs a finite Δσ_tick".into()));
    }
    if delta_sigma_tick == 0.0 {
        return Ok(0.0);
    }
    let f: f64 = forward.iter().sum();
    let b: f64 = backward.iter().sum();
    Ok(delta_sigma_tick * (f - b))
}

/// Σ_cw,τ: clockwork entropy per net tick in the stationary state of the
/// marginal clock (tick folded into the clockwork). Classical clocks only.
pub fn clockwork_entropy_per_tick(spec: &ClockSpec) -> Result<f64> {
    let rates = spec.classical_rates()?;
    let ss = stationary_populations(&spec.marginal_clockwork()?)?;
    let cw = ClockworkEntropy::new(spec.clockwork())?.rate_populations(&ss)?;
    let net: f64 = rates.tick[0].iter().map(|t| t.rate * (ss[t.from] - rates.untick_factor * ss[t.to])).sum();
    if !(net > 0.0) {
        return Err(AqpuError::InvalidState("stationary clock has no net tick current".into()));
    }
    Ok(cw / net)
}

/// Lower bound Σ_cw,τ ≥ 2N on the clockwork entropy per tick at accuracy N.
pub fn entropy_lower_bound(accuracy: f64) -> f64 {
    2.0 * accuracy
}

#[derive(Clone, Debug)]
pub struct PerTickCheck {
    pub sigma: f64,
    pub ticks_mean: f64,
    pub per_tick: f64,
    pub relative_error: f64,
    pub pass: bool,
}

/// ⟨Σ_cw(T)⟩ against ⟨N(T)⟩ Σ_cw,τ.
pub fn per_tick_identity(sigma: f64, ticks_mean: f64, per_tick: f64) -> PerTickCheck {
    let expected = ticks_mean * per_tick;
    let relative_error = if expected == 0.0 { sigma.abs() } else { (sigma - expected).abs() / expected.abs() };
    PerTickCheck { sigma, ticks_mean, per_tick, relative_error, pass: relative_error <= PER_TICK_TOLERANCE }
}

/// Time-resolved entropy production along a block trajectory.
#[derive(Clone, Debug)]
pub struct EntropyLedger {
    pub t_grid: Vec<f64>,
    /// None when some clockwork jump declares no Δσ.
    pub clockwork_rate: Option<Vec<f64>>,
    pub clockwork_integral: Option<Vec<f64>>,
    /// Σ_cw,τ of the clock, when it is classical with finite entropies.
    pub per_tick: Option<f64>,
    pub tick_rate: Vec<f64>,
    pub tick_integral: Vec<f64>,
    /// ⟨N(t)⟩ of the register.
    pub ticks_mean: Vec<f64>,
    pub init: f64,
}

impl EntropyLedger {
    /// Clockwork + tick + initialization at every grid time.
    pub fn totals(&self) -> Vec<f64> {
        let cw = self.clockwork_integral.clone().unwrap_or_else(|| vec![0.0; self.t_grid.len()]);
        cw.iter().zip(&self.tick_integral).map(|(a, b)| a + b + self.init).collect()
    }

    /// Whether every integral is non-decreasing in t.
    pub fn monotone(&self) -> bool {
        let up = |v: &[f64]| v.windows(2).all(|w| w[1] >= w[0] - 1e-12);
        up(&self.tick_integral) && self.clockwork_integral.as_deref().map_or(true, up)
    }

    pub fn per_tick_identity(&self, index: usize) -> Result<PerTickCheck> {
        let per_tick = self.per_tick.ok_or_else(|| AqpuError::Config("clock has no per-tick entropy".into()))?;
        let sigma = self
            .clockwork_integral
            .as_ref()
            .and_then(|v| v.get(index))
            .ok_or_else(|| AqpuError::Config(format!("no clockwork entropy at grid index {index}")))?;
        Ok(per_tick_identity(*sigma, self.ticks_mean[index], per_tick))
    }
}

/// Builds the ledger from a block trajectory on a classical clock. The tick
/// entropy uses the clock's own Δσ_tick when finite, else `nominal_tick_entropy`.
pub fn entropy_ledger(
    spec: &ClockSpec,
    trajectory: &BlockTrajectory,
    nominal_tick_entropy: Option<f64>,
    sigma_init: f64,
) -> Result<EntropyLedger> {
    let t_grid: Vec<f64> = trajectory.states.iter().map(|s| s.t).collect();
    let clockwork_rate = match ClockworkEntropy::new(spec.clockwork()) {
        Ok(e) if e.is_diagonal() => Some(
            trajectory
                .states
                .iter()
                .map(|s| {
                    let mut pops = vec![0.0; spec.dim()];
                    for sector in &s.clock_pops {
                        for (p, x) in pops.iter_mut().zip(sector) {
                            *p += x;
                        }
                    }
                    e.rate_populations(&pops)
                })
                .collect::<Result<Vec<f64>>>()?,
        ),
        Ok(_) => return Err(AqpuError::Unsupported("clockwork entropy flux is not diagonal in the clock basis".into())),
        Err(_) => None,
    };
    let clockwork_integral = clockwork_rate.as_ref().map(|r| integrate_entropy(&t_grid, r)).transpose()?;
    let ds = Some(spec.ticks().reverse_entropy())
        .filter(|s| s.is_finite())
        .or(nominal_tick_entropy)
        .ok_or_else(|| AqpuError::Config("irreversible ticks need a nominal Δσ_tick for the ledger".into()))?;
    let tick_rate = trajectory
        .states
        .iter()
        .map(|s| tick_entropy_rate(&s.forward, &s.backward, ds))
        .collect::<Result<Vec<f64>>>()?;
    let tick_integral = integrate_entropy(&t_grid, &tick_rate)?;
    let per_tick = if clockwork_rate.is_some() { clockwork_entropy_per_tick(spec).ok() } else { None };
    Ok(EntropyLedger {
        ticks_mean: trajectory.states.iter().map(|s| s.ticks_mean()).collect(),
        t_grid,
        clockwork_rate,
        clockwork_integral,
        per_tick,
        tick_rate,
        tick_integral,
        init: sigma_init,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AccuracyBound {
    pub pass: bool,
    /// f(Σ) − N
    pub slack: f64,
}

/// N ≤ f(Σ_cw,τ).
pub fn accuracy_entropy_bound(accuracy: f64, sigma_per_tick: f64, f: impl Fn(f64) -> f64) -> AccuracyBound {
    let slack = f(sigma_per_tick) - accuracy;
    AccuracyBound { pass: slack >= -1e-12 * accuracy.abs().max(1.0), slack }
}

/// f(x) = x/2, the relation saturated by the unidirectional ladder.
pub fn default_accuracy_function(x: f64) -> f64 {
    0.5 * x
}

/// Terms of ℱ_𝒜 ≤ 1 − Mφ²/f(Σ) − e^(−L_prep Σ_init + 2W)/Σ_init, W = ln(d − 1).
/// Both O(·) constants are taken as 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FidelityBound {
    pub clock_term: f64,
    pub init_term: f64,
    pub bound: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn fidelity_entropy_bound(
    m: usize,
    phi_max: f64,
    sigma_per_tick: f64,
    f: impl Fn(f64) -> f64,
    sigma_init: f64,
    l_prep: f64,
    dim: usize,
) -> Result<FidelityBound> {
    if !(sigma_init > 0.0) {
        return Err(AqpuError::Config("Σ_init must be positive".into()));
    }
    if dim < 2 {
        return Err(AqpuError::Config("target dimension must be ≥ 2".into()));
    }
    if !(sigma_per_tick > 0.0 && phi_max >= 0.0 && l_prep >= 0.0) {
        return Err(AqpuError::Config("Σ_cw,τ must be positive, φ_max and L_prep non-negative".into()));
    }
    let w = ((dim - 1) as f64).ln();
    let fs = f(sigma_per_tick);
    let clock_term = if fs.is_infinite() { 0.0 } else { m as f64 * phi_max * phi_max / fs };
    let init_term = if sigma_init.is_infinite() { 0.0 } else { (-l_prep * sigma_init + 2.0 * w).exp() / sigma_init };
    Ok(FidelityBound { clock_term, init_term, bound: 1.0 - clock_term - init_term })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::{make_biased_erlang_clock, make_erlang_clock, ClockJump};
    use crate::engine::{evolve_block, SolverConfig};
    use crate::model::standard_bell_example;
    use crate::numerics::types::DensityMatrix;

    fn two_level(forward: f64, s: f64) -> Clockwork {
        let mut l = ComplexMatrix::zeros(2, 2);
        l[(1, 0)] = C64::new(forward.sqrt(), 0.0);
        Clockwork::new(ComplexMatrix::zeros(2, 2), vec![ClockJump::with_entropy(l, s, true)]).unwrap()
    }

    #[test]
    fn detailed_balance_state_has_zero_rate() {
        let s = 1.3;
        let cw = two_level(2.0, s);
        // p0·r = p1·r e^(−s)
        let p1 = 1.0 / (1.0 + (-s).exp());
        let rho = ComplexMatrix::diagonal(&[C64::new(1.0 - p1, 0.0), C64::new(p1, 0.0)]);
        assert!(entropy_rate_clockwork(&cw, &[rho]).unwrap()[0].abs() < 1e-10);
    }

    #[test]
    fn unidirectional_rate_is_entropy_times_flux() {
        let mut l = ComplexMatrix::zeros(2, 2);
        l[(1, 0)] = C64::new(3f64.sqrt(), 0.0);
        let cw = Clockwork::new(ComplexMatrix::zeros(2, 2), vec![ClockJump::with_entropy(l, 0.7, false)]).unwrap();
        let e = ClockworkEntropy::new(&cw).unwrap();
        assert!((e.rate_populations(&[1.0, 0.0]).unwrap() - 0.7 * 3.0).abs() < 1e-12);
        assert_eq!(e.rate_populations(&[0.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn undeclared_entropy_rejected() {
        let spec = make_erlang_clock(3, 1.0, 1).unwrap();
        assert!(ClockworkEntropy::new(spec.clockwork()).is_err());
        assert!(tick_entropy_rate(&[1.0], &[0.0], f64::INFINITY).is_err());
        assert_eq!(tick_entropy_rate(&[1.0], &[0.2], 0.0).unwrap(), 0.0);
    }

    #[test]
    fn biased_ring_entropy_per_tick() {
        let (d, s) = (6, 1.5);
        let spec = make_biased_erlang_clock(d, 1.0, s, 4).unwrap();
        let per = clockwork_entropy_per_tick(&spec).unwrap();
        assert!((per + s - d as f64 * s).abs() < 1e-10, "{per}");
    }

    #[test]
    fn ledger_on_biased_clock() {
        let ex = standard_bell_example();
        let spec = make_biased_erlang_clock(8, 1.0, 2.0, 3).unwrap();
        let rho = DensityMatrix::pure(&ex.initial).unwrap();
        let tr = evolve_block(&spec, &ex.gateset, &ex.punchcard, &rho, &SolverConfig::uniform(6.0, 241)).unwrap();
        let l = entropy_ledger(&spec, &tr, None, 0.5).unwrap();
        assert_eq!(l.clockwork_integral.as_ref().unwrap()[0], 0.0);
        assert!(l.monotone());
        assert!((l.totals()[0] - 0.5).abs() < 1e-15);
        let irr = make_erlang_clock(8, 1.0, 3).unwrap();
        let tr = evolve_block(&irr, &ex.gateset, &ex.punchcard, &rho, &SolverConfig::uniform(6.0, 241)).unwrap();
        assert!(entropy_ledger(&irr, &tr, None, 0.0).is_err());
        let l = entropy_ledger(&irr, &tr, Some(1.0), 0.0).unwrap();
        assert!(l.clockwork_rate.is_none());
        assert!((l.tick_integral.last().unwrap() - l.ticks_mean.last().unwrap()).abs() < 1e-3);
    }

    #[test]
    fn accuracy_bound_examples() {
        let b = accuracy_entropy_bound(80.0, 160.0, default_accuracy_function);
        assert!(b.pass && b.slack == 0.0);
        assert!(accuracy_entropy_bound(0.0, 0.0, default_accuracy_function).pass);
        let q = accuracy_entropy_bound(80.0, 10.0, |x| x * x);
        assert!(q.pass && (q.slack - 20.0).abs() < 1e-12);
    }

    #[test]
    fn fidelity_bound_examples() {
        let inf = fidelity_entropy_bound(2, 1.0, f64::INFINITY, default_accuracy_function, f64::INFINITY, 1.0, 4).unwrap();
        assert_eq!(inf.bound, 1.0);
        let phi = std::f64::consts::FRAC_PI_2;
        let b = fidelity_entropy_bound(2, phi, 160.0, default_accuracy_function, 5.0, 10.0, 16).unwrap();
        assert!((b.clock_term - 2.0 * phi * phi / 80.0).abs() < 1e-15);
        assert!((b.init_term - (-50.0 + 2.0 * 15f64.ln()).exp() / 5.0).abs() < 1e-30);
        let q = fidelity_entropy_bound(1, 1.0, 10.0, default_accuracy_function, 1.0, 0.0, 2).unwrap();
        assert!((q.init_term - 1.0).abs() < 1e-15);
        assert!(fidelity_entropy_bound(1, 1.0, 10.0, default_accuracy_function, 0.0, 1.0, 2).is_err());
    }
}
