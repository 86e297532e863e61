//! The conditional tick kernel ξ(t,s) = p(s) exp(−∫_s^t p), with
//! p(s) = P[T_n = s] / P[N(s) = n].

use crate::clock::{tick_density, tick_number_distributions, ClockSpec};
use crate::error::{AqpuError, Result};

/// Points where P[N(s) = n] falls below this are left off the grid.
const MIN_SECTOR_PROB: f64 = 1e-280;
/// Lower end of the search for the first usable grid point, relative to t_max.
const LOG_SPAN: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct ConditionalTickKernel {
    n: usize,
    grid: Vec<f64>,
    p: Vec<f64>,
    /// ∫ p from grid[0] to grid[k], corrected trapezoid in ln s.
    cumulative: Vec<f64>,
}

/// Cumulative ∫ f ds on a log grid, as ∫ f(e^u) e^u du with the endpoint-
/// corrected trapezoid rule (fourth order on a uniform u grid).
fn log_cumulative(s: &[f64], f: &[f64]) -> Vec<f64> {
    let n = s.len();
    let u: Vec<f64> = s.iter().map(|x| x.ln()).collect();
    let g: Vec<f64> = f.iter().zip(s).map(|(a, b)| a * b).collect();
    let dg: Vec<f64> = (0..n)
        .map(|k| match k {
            0 => (g[1] - g[0]) / (u[1] - u[0]),
            k if k == n - 1 => (g[k] - g[k - 1]) / (u[k] - u[k - 1]),
            k => (g[k + 1] - g[k - 1]) / (u[k + 1] - u[k - 1]),
        })
        .collect();
    let mut out = vec![0.0; n];
    for k in 1..n {
        let h = u[k] - u[k - 1];
        out[k] = out[k - 1] + 0.5 * h * (g[k] + g[k - 1]) - h * h / 12.0 * (dg[k] - dg[k - 1]);
    }
    out
}

impl ConditionalTickKernel {
    /// Kernel of tick n ≥ 1 on a `points`-point log grid ending at `t_max`.
    pub fn from_clock(spec: &ClockSpec, n: usize, t_max: f64, points: usize) -> Result<Self> {
        if n == 0 || points < 3 || !(t_max > 0.0 && t_max.is_finite()) {
            return Err(AqpuError::Config("kernel needs n ≥ 1, at least 3 points and finite t_max > 0".into()));
        }
        let log_grid = |lo: f64, count: usize| -> Vec<f64> {
            (0..count).map(|k| lo * (t_max / lo).powf(k as f64 / (count - 1) as f64)).collect()
        };
        // A coarse pass locates where P[N(s) = n] becomes representable, so the
        // fine grid is not wasted on the region that gets skipped anyway.
        let coarse = log_grid(t_max * LOG_SPAN, 200);
        let coarse_probs = tick_number_distributions(&spec.with_max_ticks(n + 1)?, &coarse)?;
        let first = coarse_probs.iter().position(|p| p[n] >= MIN_SECTOR_PROB).unwrap_or(coarse.len() - 1);
        let all = log_grid(coarse[first.saturating_sub(1)], points);
        let f = tick_density(spec, n, &all)?;
        let probs = tick_number_distributions(&spec.with_max_ticks(n + 1)?, &all)?;
        let mut grid = Vec::new();
        let mut p = Vec::new();
        for ((&s, fv), pr) in all.iter().zip(&f).zip(&probs) {
            if pr[n] >= MIN_SECTOR_PROB {
                grid.push(s);
                p.push(fv.max(0.0) / pr[n]);
            }
        }
        if grid.len() < 3 {
            return Err(AqpuError::Config(format!("P[N(s) = {n}] is negligible on the whole grid")));
        }
        let cumulative = log_cumulative(&grid, &p);
        Ok(Self { n, grid, p, cumulative })
    }

    pub fn tick(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// p(s) on the grid.
    pub fn p(&self) -> &[f64] {
        &self.p
    }

    fn index(&self, t: f64) -> Result<usize> {
        self.grid
            .iter()
            .rposition(|&s| s <= t * (1.0 + 1e-12))
            .ok_or_else(|| AqpuError::Config(format!("t = {t} precedes the kernel grid")))
    }

    /// ξ(t, s) for every grid point s ≤ t, with t snapped down to the grid.
    pub fn xi(&self, t: f64) -> Result<Vec<(f64, f64)>> {
        let k = self.index(t)?;
        Ok((0..=k).map(|j| (self.grid[j], self.p[j] * (self.cumulative[j] - self.cumulative[k]).exp())).collect())
    }

    /// ∫ ξ(t, s) ds over the grid.
    pub fn normalization(&self, t: f64) -> Result<f64> {
        let xi = self.xi(t)?;
        let s: Vec<f64> = xi.iter().map(|x| x.0).collect();
        let v: Vec<f64> = xi.iter().map(|x| x.1).collect();
        Ok(*log_cumulative(&s, &v).last().expect("non-empty"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::make_erlang_clock;

    #[test]
    fn normalizes_for_erlang_ticks() {
        for (d, n) in [(4, 1), (4, 2), (20, 2)] {
            let spec = make_erlang_clock(d, 1.0, 3).unwrap();
            let k = ConditionalTickKernel::from_clock(&spec, n, 6.0, 3000).unwrap();
            for t in [0.8, 2.0, 5.0] {
                let z = k.normalization(t).unwrap();
                assert!((z - 1.0).abs() < 1e-5, "D={d} n={n} t={t}: {z}");
            }
        }
    }

    #[test]
    fn rejects_tick_zero() {
        let spec = make_erlang_clock(4, 1.0, 2).unwrap();
        assert!(ConditionalTickKernel::from_clock(&spec, 0, 1.0, 10).is_err());
    }
}
