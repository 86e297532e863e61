use super::density::TickDensity;
use super::{ClockSpec, TickGenerator, TickJumps};
use crate::dynamics::{default_method, solve, BlockProblem, Snapshot, TopMode};
use crate::error::{AqpuError, Result};
use crate::numerics::matrix::ComplexMatrix;
use crate::numerics::ode::OdeOptions;
use crate::numerics::quadrature::composite_gauss;
use crate::numerics::types::HermitianOperator;

fn clock_only(spec: &ClockSpec, top: TopMode, times: &[f64]) -> Result<Vec<Snapshot>> {
    if times.iter().any(|&t| !(t.is_finite() && t >= 0.0)) {
        return Err(AqpuError::Config("times must be finite and non-negative".into()));
    }
    let p = BlockProblem {
        spec,
        sectors: vec![HermitianOperator::zero(1); spec.max_ticks() + 1],
        target_init: ComplexMatrix::identity(1),
        top,
    };
    let opts = OdeOptions::with_tolerances(1e-11, 1e-14);
    solve(&p, times, default_method(spec), &opts)
}

fn capped(spec: &ClockSpec, n: usize) -> Result<ClockSpec> {
    if n == 0 {
        return Err(AqpuError::Config("tick index must be ≥ 1".into()));
    }
    spec.with_max_ticks(n)
}

/// P[T_n = t]: the current through the n-th tick jump with the top sector made
/// absorbing, i.e. the first-passage density of the n-th tick.
pub fn tick_density(spec: &ClockSpec, n: usize, times: &[f64]) -> Result<Vec<f64>> {
    let s = capped(spec, n)?;
    Ok(clock_only(&s, TopMode::Absorbing, times)?.iter().map(|x| x.forward[n - 1]).collect())
}

/// P[T_n ≤ t], the population that has reached the absorbing sector n.
pub fn tick_cdf(spec: &ClockSpec, n: usize, times: &[f64]) -> Result<Vec<f64>> {
    let s = capped(spec, n)?;
    Ok(clock_only(&s, TopMode::Absorbing, times)?.iter().map(|x| x.sector_probs()[n]).collect())
}

/// P[N(t) = n] for n = 0..=M at a single time.
pub fn tick_number_distribution(spec: &ClockSpec, t: f64) -> Result<Vec<f64>> {
    Ok(tick_number_distributions(spec, &[t])?.remove(0))
}

pub fn tick_number_distributions(spec: &ClockSpec, times: &[f64]) -> Result<Vec<Vec<f64>>> {
    Ok(clock_only(spec, TopMode::Live, times)?.iter().map(Snapshot::sector_probs).collect())
}

/// tr[J^(n)† J^(n) ρ_C^(n)(t)] for n < M at each time (forward tick currents
/// of the capped clock).
pub fn tick_flux(spec: &ClockSpec, times: &[f64]) -> Result<Vec<Vec<f64>>> {
    Ok(clock_only(spec, TopMode::Live, times)?.into_iter().map(|x| x.forward).collect())
}

/// Clock basis populations right after the n-th tick (n = 0 gives the initial
/// populations). Classical clocks only.
pub fn post_tick_clock_state(spec: &ClockSpec, n: usize) -> Result<Vec<f64>> {
    let rates = spec.classical_rates()?;
    if n == 0 {
        return Ok(rates.initial);
    }
    let s = capped(spec, n)?;
    let mean_rate = rates.clockwork.iter().chain(rates.tick.iter().flatten()).map(|t| t.rate).fold(0.0, f64::max);
    let mut horizon = 10.0 * n as f64 * (rates.dim as f64) / mean_rate.max(1e-300);
    for _ in 0..40 {
        let snap = clock_only(&s, TopMode::Frozen, &[horizon])?.remove(0);
        let top = &snap.pops[n];
        let mass: f64 = top.iter().sum();
        if mass > 1.0 - 1e-12 {
            return Ok(top.iter().map(|p| p / mass).collect());
        }
        horizon *= 2.0;
    }
    Err(AqpuError::Solver { time: horizon, reason: "tick mass did not converge to 1".into() })
}

/// Density of the interval T_(n,n−1) between ticks n − 1 and n.
pub fn interval_density(spec: &ClockSpec, n: usize, times: &[f64]) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(AqpuError::Config("tick index must be ≥ 1".into()));
    }
    let start = post_tick_clock_state(spec, n - 1)?;
    let ticks = TickGenerator::new(
        TickJumps::PerTick(vec![spec.ticks().jump(n - 1).clone()]),
        1,
        spec.ticks().reverse_entropy(),
    )?;
    let restarted = ClockSpec::new(spec.clockwork().clone(), ticks, spec.initial().clone())?.with_initial_populations(&start)?;
    tick_density(&restarted, 1, times)
}

/// Per-tick interval statistics on a composite Gauss grid over [0, t_max].
#[derive(Clone, Debug)]
pub struct TickStatistics {
    pub t_grid: Vec<f64>,
    pub weights: Vec<f64>,
    /// P[T_(n,n−1) = t] for n = 1..=ticks.
    pub densities: Vec<Vec<f64>>,
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    /// ν_n = 1 / ⟨T_(n,n−1)⟩
    pub resolution: Vec<f64>,
    /// N_n = ⟨T⟩² / Var[T]; infinite for a degenerate density.
    pub accuracy: Vec<f64>,
    pub iid: bool,
}

impl TickStatistics {
    pub fn mean(&self) -> f64 {
        self.means[0]
    }

    pub fn variance(&self) -> f64 {
        self.variances[0]
    }

    pub fn interval(&self, n: usize) -> Result<TickDensity> {
        let v = self.densities.get(n - 1).ok_or_else(|| AqpuError::Config(format!("no statistics for tick {n}")))?;
        TickDensity::new(self.t_grid.clone(), self.weights.clone(), v.clone())
    }

    /// Grid integral of each interval density.
    pub fn masses(&self) -> Vec<f64> {
        self.densities.iter().map(|d| d.iter().zip(&self.weights).map(|(v, w)| v * w).sum()).collect()
    }
}

/// Computes `ticks` interval densities on `panels` 8-point Gauss panels over [0, t_max].
pub fn tick_statistics(spec: &ClockSpec, ticks: usize, t_max: f64, panels: usize) -> Result<TickStatistics> {
    if ticks == 0 || panels == 0 || !(t_max > 0.0) {
        return Err(AqpuError::Config("tick statistics need ticks ≥ 1, panels ≥ 1 and t_max > 0".into()));
    }
    let (t_grid, weights) = composite_gauss(0.0, t_max, panels, 8);
    let mut densities = Vec::with_capacity(ticks);
    for n in 1..=ticks {
        densities.push(interval_density(spec, n, &t_grid)?);
    }
    let mut means = Vec::new();
    let mut variances = Vec::new();
    for d in &densities {
        let td = TickDensity::new(t_grid.clone(), weights.clone(), d.clone())?;
        means.push(td.mean());
        variances.push(td.variance());
    }
    let resolution = means.iter().map(|m| 1.0 / m).collect();
    let accuracy = means
        .iter()
        .zip(&variances)
        .map(|(m, v)| if *v > 0.0 { m * m / v } else { f64::INFINITY })
        .collect();
    let iid = densities.iter().all(|d| d.iter().zip(&densities[0]).all(|(a, b)| (a - b).abs() <= 1e-8));
    Ok(TickStatistics { t_grid, weights, densities, means, variances, resolution, accuracy, iid })
}

#[cfg(test)]
mod tests {
    use super::super::make_erlang_clock;
    use super::*;

    fn poisson(k: usize, x: f64) -> f64 {
        (k as f64 * x.ln() - x - statrs::function::gamma::ln_gamma(k as f64 + 1.0)).exp()
    }

    #[test]
    fn tick_number_starts_at_zero_and_sums_to_one() {
        let c = make_erlang_clock(3, 1.0, 3).unwrap();
        assert_eq!(tick_number_distribution(&c, 0.0).unwrap(), vec![1.0, 0.0, 0.0, 0.0]);
        let p = tick_number_distribution(&c, 2.3).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(tick_number_distribution(&c, -1.0).is_err());
    }

    #[test]
    fn single_level_clock_counts_are_poisson() {
        let g = 1.7;
        let c = make_erlang_clock(1, g, 5).unwrap();
        let t = 1.3;
        let p = tick_number_distribution(&c, t).unwrap();
        for (n, pn) in p.iter().enumerate().take(5) {
            assert!((pn - poisson(n, g * t)).abs() < 1e-12);
        }
    }

    #[test]
    fn erlang_statistics() {
        let c = make_erlang_clock(80, 1.0, 2).unwrap();
        let s = tick_statistics(&c, 2, 3.0, 150).unwrap();
        assert!(s.iid);
        assert!((s.mean() - 1.0).abs() < 1e-8);
        assert!((s.accuracy[0] - 80.0).abs() < 0.8);
        for m in s.masses() {
            assert!(m > 1.0 - 1e-6 && m < 1.0 + 1e-6);
        }
    }

    #[test]
    fn accuracy_grows_with_ladder_length() {
        let mut last = 0.0;
        for d in [2, 4, 8, 16] {
            let s = tick_statistics(&make_erlang_clock(d, 1.0, 1).unwrap(), 1, 12.0, 120).unwrap();
            assert!(s.accuracy[0] > last);
            assert!((s.accuracy[0] - d as f64).abs() < 0.01 * d as f64);
            last = s.accuracy[0];
        }
    }

    #[test]
    fn reset_clock_intervals_coincide() {
        let c = make_erlang_clock(4, 2.0, 3).unwrap();
        let t: Vec<f64> = (1..40).map(|k| 0.05 * k as f64).collect();
        let a = interval_density(&c, 1, &t).unwrap();
        let b = interval_density(&c, 2, &t).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-8);
        }
    }
}
