//! Dormand–Prince 5(4) with the fourth-order continuous extension.

use crate::error::{AqpuError, Result};

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on a single step; `f64::INFINITY` leaves it free.
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-9, atol: 1e-12, h_max: f64::INFINITY, max_steps: 5_000_000 }
    }
}

impl OdeOptions {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        Self { rtol, atol, ..Self::default() }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Integrates ẏ = f(t, y) from t = 0 and returns y at every sample time.
///
/// `t_samples` must be sorted and non-negative. The right-hand side writes
/// into its output slice so that large states are never reallocated.
pub fn integrate_ode<F>(mut rhs: F, y0: &[f64], t_samples: &[f64], opts: OdeOptions) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let mut out = Vec::with_capacity(t_samples.len());
    integrate_ode_with(&mut rhs, y0, t_samples, opts, |_, y| out.push(y.to_vec()))?;
    Ok(out)
}

/// Streaming variant: `sink(index, y)` is called for each sample in order.
pub fn integrate_ode_with<F, S>(rhs: &mut F, y0: &[f64], t_samples: &[f64], opts: OdeOptions, mut sink: S) -> Result<()>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    S: FnMut(usize, &[f64]),
{
    if !(opts.rtol > 0.0 && opts.atol > 0.0) {
        return Err(AqpuError::Config("rtol and atol must be positive".into()));
    }
    if t_samples.windows(2).any(|w| w[1] < w[0]) || t_samples.first().is_some_and(|&t| t < 0.0) {
        return Err(AqpuError::Config("sample times must be sorted and non-negative".into()));
    }
    let n = y0.len();
    let mut next = 0usize;
    while next < t_samples.len() && t_samples[next] == 0.0 {
        sink(next, y0);
        next += 1;
    }
    if next == t_samples.len() {
        return Ok(());
    }
    let t_end = *t_samples.last().expect("non-empty");

    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut ytmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let mut dense = vec![0.0; n];

    let mut t = 0.0;
    rhs(t, &y, &mut k1);
    check_finite(&k1, t)?;

    let mut h = initial_step(rhs, &y, &k1, t_end, &opts, &mut ytmp, &mut k2).min(opts.h_max);
    let mut steps = 0usize;
    let mut err_old: f64 = 1e-4;

    while next < t_samples.len() {
        if steps >= opts.max_steps {
            return Err(AqpuError::Solver { time: t, reason: "maximum step count exceeded".into() });
        }
        if t + h > t_end {
            h = t_end - t;
        }
        if h <= 1e-14 * t.abs().max(1.0) {
            return Err(AqpuError::Solver { time: t, reason: "step size underflow".into() });
        }

        for i in 0..n {
            ytmp[i] = y[i] + h * A21 * k1[i];
        }
        rhs(t + C2 * h, &ytmp, &mut k2);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        rhs(t + C3 * h, &ytmp, &mut k3);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        rhs(t + C4 * h, &ytmp, &mut k4);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        rhs(t + C5 * h, &ytmp, &mut k5);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        rhs(t + h, &ytmp, &mut k6);
        for i in 0..n {
            ynew[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        rhs(t + h, &ynew, &mut k7);
        steps += 1;

        let mut err = 0.0;
        for i in 0..n {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(ynew[i].abs());
            err += (e / sc) * (e / sc);
        }
        let err = if n > 0 { (err / n as f64).sqrt() } else { 0.0 };
        if !err.is_finite() {
            check_finite(&k7, t + h)?;
            return Err(AqpuError::Solver { time: t + h, reason: "non-finite error estimate".into() });
        }

        if err <= 1.0 {
            // Continuous extension on [t, t + h].
            let t_new = t + h;
            while next < t_samples.len() && t_samples[next] <= t_new {
                let theta = (t_samples[next] - t) / h;
                let theta1 = 1.0 - theta;
                for i in 0..n {
                    let ydiff = ynew[i] - y[i];
                    let bspl = h * k1[i] - ydiff;
                    let r4 = ydiff - h * k7[i] - bspl;
                    let r5 = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
                    dense[i] = y[i] + theta * (ydiff + theta1 * (bspl + theta * (r4 + theta1 * r5)));
                }
                if (t_samples[next] - t_new).abs() == 0.0 {
                    sink(next, &ynew);
                } else {
                    sink(next, &dense);
                }
                next += 1;
            }
            check_finite(&k7, t_new)?;
            std::mem::swap(&mut y, &mut ynew);
            std::mem::swap(&mut k1, &mut k7);
            t = t_new;
            // PI step control.
            let fac = 0.9 * err.max(1e-10).powf(-0.7 / 5.0) * err_old.powf(0.4 / 5.0);
            err_old = err.max(1e-4);
            h = (h * fac.clamp(0.2, 10.0)).min(opts.h_max);
        } else {
            let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            h *= fac;
        }
    }
    Ok(())
}

fn check_finite(v: &[f64], t: f64) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(AqpuError::Solver { time: t, reason: "non-finite derivative".into() })
    }
}

fn initial_step<F>(rhs: &mut F, y: &[f64], f0: &[f64], span: f64, opts: &OdeOptions, y1: &mut [f64], f1: &mut [f64]) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y.len().max(1) as f64;
    let sc = |i: usize| opts.atol + opts.rtol * y[i].abs();
    let d0 = (y.iter().enumerate().map(|(i, v)| (v / sc(i)).powi(2)).sum::<f64>() / n).sqrt();
    let d1 = (f0.iter().enumerate().map(|(i, v)| (v / sc(i)).powi(2)).sum::<f64>() / n).sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(span);
    for i in 0..y.len() {
        y1[i] = y[i] + h0 * f0[i];
    }
    rhs(h0, y1, f1);
    let d2 = (f1.iter().zip(f0).enumerate().map(|(i, (a, b))| ((a - b) / sc(i)).powi(2)).sum::<f64>() / n).sqrt() / h0;
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    (100.0 * h0).min(h1).min(span).max(1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let opts = OdeOptions::with_tolerances(1e-9, 1e-12);
        let ys = integrate_ode(|_, y, dy| dy[0] = -y[0], &[1.0], &[1.0, 2.0], opts).unwrap();
        assert!((ys[0][0] - (-1.0f64).exp()).abs() < 10.0 * 1e-9);
        assert!((ys[1][0] - (-2.0f64).exp()).abs() < 10.0 * 1e-9);
    }

    #[test]
    fn zero_rhs_is_exact() {
        let y0 = [0.3, -1.2, 4.0];
        let ys = integrate_ode(|_, _, dy| dy.fill(0.0), &y0, &[0.0, 0.5, 3.0], OdeOptions::default()).unwrap();
        for y in ys {
            assert_eq!(y, y0);
        }
    }

    #[test]
    fn dense_output_between_steps() {
        // Harmonic oscillator sampled finely: every sample interpolated.
        let ts: Vec<f64> = (0..=200).map(|k| k as f64 * 0.05).collect();
        let ys = integrate_ode(|_, y, dy| {
            dy[0] = y[1];
            dy[1] = -y[0];
        }, &[1.0, 0.0], &ts, OdeOptions::with_tolerances(1e-10, 1e-12))
        .unwrap();
        for (t, y) in ts.iter().zip(&ys) {
            assert!((y[0] - t.cos()).abs() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn rejects_bad_tolerances_and_unsorted_samples() {
        assert!(integrate_ode(|_, _, dy| dy.fill(0.0), &[1.0], &[1.0], OdeOptions::with_tolerances(0.0, 1e-12)).is_err());
        assert!(integrate_ode(|_, _, dy| dy.fill(0.0), &[1.0], &[2.0, 1.0], OdeOptions::default()).is_err());
    }

    #[test]
    fn reports_failure_time_on_blow_up() {
        let err = integrate_ode(|_, y, dy| dy[0] = y[0] * y[0], &[1.0], &[2.0], OdeOptions::default()).unwrap_err();
        match err {
            AqpuError::Solver { time, .. } => assert!(time > 0.9 && time <= 1.0 + 1e-6, "time {time}"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
