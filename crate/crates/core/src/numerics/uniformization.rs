//! Exponential propagation of linear systems by uniformization.
//!
//! For ẏ = A y with ‖I + A/q‖ ≲ 1, e^{At} y0 = Σ_k Pois(k; qt) (I + A/q)^k y0.
//! The Poisson weights are positive, so the series has no cancellation and
//! each power is shared by every sample time.

use statrs::function::gamma::ln_gamma;

use crate::error::{AqpuError, Result};

/// Weights below this (relative to the mode) are dropped from each sample window.
const WEIGHT_CUTOFF: f64 = 1e-20;

struct Window {
    start: usize,
    weights: Vec<f64>,
}

fn poisson_window(lambda: f64) -> Window {
    if lambda <= 0.0 {
        return Window { start: 0, weights: vec![1.0] };
    }
    let log_pmf = |k: usize| -lambda + k as f64 * lambda.ln() - ln_gamma(k as f64 + 1.0);
    let mode = lambda.floor() as usize;
    let peak = log_pmf(mode);
    let cutoff = peak + WEIGHT_CUTOFF.ln();
    let mut lo = mode;
    while lo > 0 && log_pmf(lo - 1) > cutoff {
        lo -= 1;
    }
    let mut hi = mode;
    while log_pmf(hi + 1) > cutoff {
        hi += 1;
    }
    let mut weights: Vec<f64> = (lo..=hi).map(|k| log_pmf(k).exp()).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    Window { start: lo, weights }
}

/// Applies `apply(y, out)` (out = A y) repeatedly and returns `observe(y(t))`
/// accumulated at every sample time. `q` must bound the diagonal decay rates
/// of A so that I + A/q is a contraction up to rounding.
pub fn uniformized_observables<A, O>(
    mut apply: A,
    q: f64,
    y0: &[f64],
    times: &[f64],
    obs_len: usize,
    mut observe: O,
) -> Result<Vec<Vec<f64>>>
where
    A: FnMut(&[f64], &mut [f64]),
    O: FnMut(&[f64], &mut [f64]),
{
    if !(q.is_finite() && q > 0.0) {
        return Err(AqpuError::Config(format!("uniformization rate {q} must be positive")));
    }
    if times.iter().any(|&t| !(t.is_finite() && t >= 0.0)) {
        return Err(AqpuError::Config("sample times must be finite and non-negative".into()));
    }
    let windows: Vec<Window> = times.iter().map(|&t| poisson_window(q * t)).collect();
    let k_max = windows.iter().map(|w| w.start + w.weights.len()).max().unwrap_or(0);

    let mut acc = vec![vec![0.0; obs_len]; times.len()];
    let mut y = y0.to_vec();
    let mut ay = vec![0.0; y.len()];
    let mut obs = vec![0.0; obs_len];
    let inv_q = 1.0 / q;
    for k in 0..k_max {
        let active: Vec<(usize, f64)> = windows
            .iter()
            .enumerate()
            .filter_map(|(s, w)| (k >= w.start && k < w.start + w.weights.len()).then(|| (s, w.weights[k - w.start])))
            .collect();
        if !active.is_empty() {
            observe(&y, &mut obs);
            for (s, w) in active {
                for (a, o) in acc[s].iter_mut().zip(&obs) {
                    *a += w * o;
                }
            }
        }
        if k + 1 < k_max {
            apply(&y, &mut ay);
            for (yi, ai) in y.iter_mut().zip(&ay) {
                *yi += inv_q * ai;
            }
            if k % 256 == 0 && !y.iter().all(|v| v.is_finite()) {
                return Err(AqpuError::Solver { time: k as f64 / q, reason: "non-finite state in uniformization".into() });
            }
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_state_decay_matches_closed_form() {
        // ṗ0 = −r p0, ṗ1 = r p0
        let r = 3.0;
        let res = uniformized_observables(
            |y, out| {
                out[0] = -r * y[0];
                out[1] = r * y[0];
            },
            r,
            &[1.0, 0.0],
            &[0.0, 0.3, 2.0],
            2,
            |y, o| o.copy_from_slice(y),
        )
        .unwrap();
        for (t, v) in [0.0, 0.3, 2.0].iter().zip(&res) {
            assert!((v[0] - (-r * t).exp()).abs() < 1e-14);
            assert!((v[0] + v[1] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn rotation_with_damping() {
        // ż = (−γ − iω) z as a real pair.
        let (g, w) = (5.0, 2.0);
        let q = g + w;
        let t = 1.7;
        let res = uniformized_observables(
            |y, out| {
                out[0] = -g * y[0] + w * y[1];
                out[1] = -w * y[0] - g * y[1];
            },
            q,
            &[1.0, 0.0],
            &[t],
            2,
            |y, o| o.copy_from_slice(y),
        )
        .unwrap();
        let amp = (-g * t).exp();
        assert!((res[0][0] - amp * (w * t).cos()).abs() < 1e-13);
        assert!((res[0][1] + amp * (w * t).sin()).abs() < 1e-13);
    }

    #[test]
    fn window_mass_is_normalised() {
        for lambda in [0.5, 10.0, 1.6e4] {
            let w = poisson_window(lambda);
            assert!((w.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            let mean: f64 = w.weights.iter().enumerate().map(|(i, p)| (w.start + i) as f64 * p).sum();
            assert!((mean - lambda).abs() < 1e-8 * lambda.max(1.0));
        }
    }
}
