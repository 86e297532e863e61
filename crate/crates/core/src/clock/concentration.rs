//! Exponential-concentration diagnostics for a single-tick density.
//!
//! With X = (T − τ)√N/τ the envelope P[|X| ≥ x] ≤ α e^(−cx) is fitted on the
//! density's quadrature nodes, then the implied moment, MGF and Bernstein-sum
//! bounds are verified numerically.

use super::density::TickDensity;
use super::stats::TickStatistics;
use crate::error::{AqpuError, Result};

/// Largest envelope prefactor still reported as concentrated.
pub const ALPHA_MAX: f64 = 100.0;
/// Smallest decay constant accepted by the tail check.
pub const C_MIN: f64 = 0.5;
/// Confidence level whose envelope quantile x_δ = ln(α/δ)/c selects c.
const DELTA: f64 = 1e-2;
const C_RANGE: (f64, f64) = (1e-3, 20.0);
const MAX_MOMENT: i32 = 6;
const SUM_COPIES: usize = 4;
const BINS: usize = 2000;

#[derive(Clone, Debug, PartialEq)]
pub struct ConcentrationReport {
    pub alpha: f64,
    pub c: f64,
    /// α ≤ 100 and c ≥ 0.5.
    pub tail_pass: bool,
    /// ⟨|X|^n⟩ / (α n!/c^n) for n = 1..=6.
    pub moment_ratios: Vec<f64>,
    pub moments_pass: bool,
    pub mgf_pass: bool,
    pub bernstein_pass: bool,
    /// Whether any envelope with α ≤ 100 exists at the fitted c.
    pub concentrated: bool,
}

impl ConcentrationReport {
    pub fn all_pass(&self) -> bool {
        self.tail_pass && self.moments_pass && self.mgf_pass && self.bernstein_pass
    }
}

pub fn concentration_check(stats: &TickStatistics, accuracy: f64) -> Result<ConcentrationReport> {
    concentration_check_density(&stats.interval(1)?, stats.mean(), accuracy)
}

struct Sample {
    x: Vec<f64>,
    p: Vec<f64>,
}

impl Sample {
    /// Tail masses at every distinct |x|, sorted by |x| descending.
    fn tails(&self) -> Vec<(f64, f64)> {
        let mut idx: Vec<usize> = (0..self.x.len()).collect();
        idx.sort_by(|&a, &b| self.x[b].abs().total_cmp(&self.x[a].abs()));
        let mut acc = 0.0;
        idx.into_iter()
            .map(|i| {
                acc += self.p[i];
                (self.x[i].abs(), acc)
            })
            .collect()
    }
}

fn alpha_for(tails: &[(f64, f64)], c: f64) -> f64 {
    tails.iter().fold(1.0f64, |a, &(x, s)| a.max(s * (c * x).exp()))
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..100 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        }
        if b - a < 1e-10 * b {
            break;
        }
    }
    0.5 * (a + b)
}

fn factorial(n: i32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Distribution of the sum of `copies` independent copies, on uniform bins.
fn sum_distribution(s: &Sample, copies: usize) -> (f64, f64, Vec<f64>) {
    let lo = s.x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = s.x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let h = ((hi - lo) / (BINS - 1) as f64).max(1e-12);
    let mut base = vec![0.0; BINS];
    for (x, p) in s.x.iter().zip(&s.p) {
        base[(((x - lo) / h).round() as usize).min(BINS - 1)] += p;
    }
    let mut acc = base.clone();
    for _ in 1..copies {
        let mut next = vec![0.0; acc.len() + BINS - 1];
        for (i, a) in acc.iter().enumerate() {
            if *a == 0.0 {
                continue;
            }
            for (j, b) in base.iter().enumerate() {
                next[i + j] += a * b;
            }
        }
        acc = next;
    }
    (copies as f64 * lo, h, acc)
}

/// Checks a density with mean τ and accuracy N.
pub fn concentration_check_density(density: &TickDensity, tau: f64, accuracy: f64) -> Result<ConcentrationReport> {
    if !(tau > 0.0 && accuracy > 0.0 && accuracy.is_finite()) {
        return Err(AqpuError::Config("concentration check needs τ > 0 and finite N > 0".into()));
    }
    let scale = accuracy.sqrt() / tau;
    let sample = Sample {
        x: density.nodes().iter().map(|t| (t - tau) * scale).collect(),
        p: density.node_probabilities(),
    };
    let tails = sample.tails();
    let quantile = |c: f64| (alpha_for(&tails, c) / DELTA).ln() / c;
    let c = golden_min(quantile, C_RANGE.0, C_RANGE.1);
    let alpha = alpha_for(&tails, c);
    let concentrated = alpha <= ALPHA_MAX;
    let tail_pass = concentrated && c >= C_MIN;

    let moment_ratios: Vec<f64> = (1..=MAX_MOMENT)
        .map(|n| {
            let m: f64 = sample.x.iter().zip(&sample.p).map(|(x, p)| p * x.abs().powi(n)).sum();
            m / (alpha * factorial(n) / c.powi(n))
        })
        .collect();
    let moments_pass = moment_ratios.iter().all(|&r| r <= 1.0);

    let mgf_pass = (-20..=20).all(|i| {
        let k = 0.5 * c * i as f64 / 20.0;
        let m: f64 = sample.x.iter().zip(&sample.p).map(|(x, p)| p * (k * x).exp()).sum();
        m <= (2.0 * alpha * k * k / (c * c)).exp() * (1.0 + 1e-12)
    });

    let (lo, h, dist) = sum_distribution(&sample, SUM_COPIES);
    let mut pairs: Vec<(f64, f64)> = dist.iter().enumerate().map(|(i, &p)| ((lo + i as f64 * h).abs(), p)).collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let slack = SUM_COPIES as f64 * h;
    let mut acc = 0.0;
    let bernstein_pass = pairs.iter().all(|&(x, p)| {
        acc += p;
        acc <= 2.0 * (SUM_COPIES as f64 * alpha / 2.0 - c * (x - slack).max(0.0) / 2.0).exp()
    });

    Ok(ConcentrationReport {
        alpha,
        c,
        tail_pass,
        moment_ratios,
        moments_pass,
        mgf_pass,
        bernstein_pass,
        concentrated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erlang_sixteen_is_concentrated() {
        let d = TickDensity::erlang(16, 16.0).unwrap();
        let r = concentration_check_density(&d, 1.0, 16.0).unwrap();
        assert!(r.all_pass(), "{r:?}");
    }

    #[test]
    fn near_delta_density_has_large_c() {
        let d = TickDensity::erlang(4096, 4096.0).unwrap();
        let r = concentration_check_density(&d, 1.0, 4096.0).unwrap();
        assert!(r.tail_pass && r.c >= 1.0, "{r:?}");
    }

    #[test]
    fn pareto_tail_fails() {
        let a = 3.0;
        let tm = (a - 1.0) / a;
        let d = TickDensity::from_fn(move |t| if t < tm { 0.0 } else { a * tm.powf(a) / t.powf(a + 1.0) }, tm, 200.0, 2000, 8)
            .unwrap();
        let n = d.accuracy();
        let r = concentration_check_density(&d, d.mean(), n).unwrap();
        assert!(!r.tail_pass, "{r:?}");
    }

    #[test]
    fn exponential_envelope_is_recovered() {
        // Exponential T: the right tail decays as e^(−x), so c lands near 1 (the
        // finite grid lets it overshoot slightly).
        let d = TickDensity::erlang(1, 1.0).unwrap();
        let r = concentration_check_density(&d, 1.0, 1.0).unwrap();
        assert!(r.alpha < 10.0 && r.c > 0.5 && r.c <= 1.05, "{r:?}");
    }
}
